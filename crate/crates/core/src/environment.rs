//! Simulated tensor bandit environments and regret accounting.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::tensor::{
    argmax_first, flat_offset, tucker_reconstruct, Arm, DenseTensor, Matrix, TuckerDecomp,
};

/// A reward tensor with Gaussian noise and an optional context prefix.
///
/// The first `context_dim` modes are chosen by the environment each step; the
/// agent picks the remaining (decision) modes.
#[derive(Clone, Debug)]
pub struct Environment {
    truth: DenseTensor,
    /// Tucker form of `truth` when it was generated synthetically.
    latent: Option<TuckerDecomp>,
    noise_std: f64,
    context_dim: usize,
    seed: u64,
    /// Zero-based contexts replayed in order (cycling) instead of uniform draws.
    replay: Option<Vec<Vec<usize>>>,
    /// Best flat offset and value of every context cell's decision slice.
    best: Vec<(usize, f64)>,
}

impl Environment {
    pub fn new(truth: DenseTensor, noise_std: f64, context_dim: usize, seed: u64) -> Result<Self> {
        if !(noise_std >= 0.0) || !noise_std.is_finite() {
            return Err(Error::Domain(format!(
                "noise_std must be a finite nonnegative number, got {noise_std}"
            )));
        }
        if context_dim > truth.order() {
            return Err(Error::Domain(format!(
                "context_dim {context_dim} exceeds tensor order {}",
                truth.order()
            )));
        }
        let slice: usize = truth.dims()[context_dim..].iter().product();
        let best = truth
            .values()
            .chunks(slice)
            .enumerate()
            .map(|(cell, chunk)| {
                let (i, v) = argmax_first(chunk);
                (cell * slice + i, v)
            })
            .collect();
        Ok(Environment {
            truth,
            latent: None,
            noise_std,
            context_dim,
            seed,
            replay: None,
            best,
        })
    }

    /// Replays the given one-based or zero-based contexts; see [`load_contexts`].
    pub fn with_replay(mut self, contexts: Vec<Vec<usize>>) -> Result<Self> {
        if self.context_dim == 0 {
            return Err(Error::Contract(
                "context replay needs context_dim >= 1".into(),
            ));
        }
        if contexts.is_empty() {
            return Err(Error::Domain("context replay list is empty".into()));
        }
        for c in &contexts {
            self.check_context(c)?;
        }
        self.replay = Some(contexts);
        Ok(self)
    }

    pub fn truth(&self) -> &DenseTensor {
        &self.truth
    }

    pub fn latent(&self) -> Option<&TuckerDecomp> {
        self.latent.as_ref()
    }

    pub fn dims(&self) -> &[usize] {
        self.truth.dims()
    }

    pub fn decision_dims(&self) -> &[usize] {
        &self.truth.dims()[self.context_dim..]
    }

    pub fn context_dims(&self) -> &[usize] {
        &self.truth.dims()[..self.context_dim]
    }

    pub fn noise_std(&self) -> f64 {
        self.noise_std
    }

    pub fn context_dim(&self) -> usize {
        self.context_dim
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn is_contextual(&self) -> bool {
        self.context_dim > 0
    }

    /// Noiseless mean reward of an arm.
    pub fn mean(&self, arm: &Arm) -> Result<f64> {
        self.truth.get(arm)
    }

    /// Mean reward plus `N(0, noise_std²)` noise drawn from `rng`.
    pub fn pull(&self, arm: &Arm, rng: &mut ChaCha8Rng) -> Result<f64> {
        let mean = self.truth.get(arm)?;
        let z: f64 = rng.sample(StandardNormal);
        Ok(mean + self.noise_std * z)
    }

    fn check_context(&self, context: &[usize]) -> Result<()> {
        if context.len() != self.context_dim {
            return Err(Error::Range(format!(
                "context has {} coordinates, expected {}",
                context.len(),
                self.context_dim
            )));
        }
        for (j, (&i, &p)) in context.iter().zip(self.context_dims()).enumerate() {
            if i >= p {
                return Err(Error::Range(format!(
                    "context index {} on mode {} exceeds dimension {p}",
                    i + 1,
                    j + 1
                )));
            }
        }
        Ok(())
    }

    /// Uniform draw over the context box.
    pub fn draw_context(&self, rng: &mut ChaCha8Rng) -> Result<Vec<usize>> {
        if self.context_dim == 0 {
            return Err(Error::Contract(
                "draw_context on an environment without context modes".into(),
            ));
        }
        Ok(self
            .context_dims()
            .iter()
            .map(|&p| rng.random_range(0..p))
            .collect())
    }

    /// Context for zero-based step `t`: `None` without context modes, the
    /// replayed context when a replay list is set, a uniform draw otherwise.
    pub fn context_for_step(&self, t: usize, rng: &mut ChaCha8Rng) -> Result<Option<Vec<usize>>> {
        if self.context_dim == 0 {
            return Ok(None);
        }
        match &self.replay {
            Some(list) => Ok(Some(list[t % list.len()].clone())),
            None => self.draw_context(rng).map(Some),
        }
    }

    fn context_cell(&self, context: &[usize]) -> Result<usize> {
        self.check_context(context)?;
        let mut cell = 0;
        for (&i, &p) in context.iter().zip(self.context_dims()) {
            cell = cell * p + i;
        }
        Ok(cell)
    }

    /// Best arm and its mean: the global argmax without a context, the argmax
    /// of the decision slice with one. Ties go to the lowest flat offset.
    pub fn oracle(&self, context: Option<&[usize]>) -> Result<(Arm, f64)> {
        let (off, val) = match context {
            None if self.context_dim == 0 => self.best[0],
            None => {
                let (off, val) = argmax_first(self.truth.values());
                (off, val)
            }
            Some(c) => self.best[self.context_cell(c)?],
        };
        Ok((Arm::from_offset(off, self.dims()), val))
    }

    /// Value of the best arm, without building the arm.
    pub fn oracle_value(&self, context: Option<&[usize]>) -> Result<f64> {
        match context {
            Some(c) => Ok(self.best[self.context_cell(c)?].1),
            None => self.oracle(None).map(|(_, v)| v),
        }
    }

    /// Instantaneous pseudo-regret of pulling `arm` under `context`.
    pub fn regret(&self, context: Option<&[usize]>, arm: &Arm) -> Result<f64> {
        let best = self.oracle_value(context)?;
        Ok(best - self.mean(arm)?)
    }
}

/// Order-3 environment with dims `(p, p, p)` and Tucker rank `(r, r, r)`.
///
/// The core is diagonal with entries `w * p^1.5`; each factor is the Q part of
/// a QR factorization of a standard Gaussian `p × r` matrix.
pub fn synth_env(
    p: usize,
    r: usize,
    w: f64,
    noise_std: f64,
    context_dim: usize,
    seed: u64,
) -> Result<Environment> {
    synth_tucker_env(&[p, p, p], &[r, r, r], w, noise_std, context_dim, seed)
}

/// Synthetic Tucker environment for arbitrary dims and ranks.
///
/// The core is diagonal (`S[i,...,i]` for `i < min r`) with entries
/// `w * sqrt(prod p)`, which is `w * p^1.5` for a cubic order-3 tensor.
pub fn synth_tucker_env(
    dims: &[usize],
    ranks: &[usize],
    w: f64,
    noise_std: f64,
    context_dim: usize,
    seed: u64,
) -> Result<Environment> {
    if dims.is_empty() || dims.len() != ranks.len() {
        return Err(Error::Shape(format!("dims {dims:?} and ranks {ranks:?} disagree")));
    }
    for (&r, &p) in ranks.iter().zip(dims) {
        if r == 0 || r > p {
            return Err(Error::Domain(format!("rank {r} must lie in [1, {p}]")));
        }
    }
    if !(w > 0.0) || !w.is_finite() {
        return Err(Error::Domain(format!("signal strength w must be positive, got {w}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let factors: Vec<Matrix> = dims
        .iter()
        .zip(ranks)
        .map(|(&p, &r)| {
            let g = Matrix::from_fn(p, r, |_, _| rng.sample(StandardNormal));
            g.qr().q().columns(0, r).into_owned()
        })
        .collect();
    let signal = w * (dims.iter().product::<usize>() as f64).sqrt();
    let core = DenseTensor::from_fn(ranks, |i| {
        if i.iter().all(|&v| v == i[0]) {
            signal
        } else {
            0.0
        }
    });
    let latent = TuckerDecomp::new(core, factors)?;
    let truth = tucker_reconstruct(&latent)?;
    let mut env = Environment::new(truth, noise_std, context_dim, seed)?;
    env.latent = Some(latent);
    Ok(env)
}

/// Environment whose truth is read from a tensor text file.
pub fn load_env(path: impl AsRef<Path>, noise_std: f64, context_dim: usize) -> Result<Environment> {
    let truth = DenseTensor::load(path)?;
    Environment::new(truth, noise_std, context_dim, 0)
}

/// Reads a context replay file: one line per step with whitespace-separated
/// one-based indices. Returns zero-based contexts.
pub fn load_contexts(path: impl AsRef<Path>) -> Result<Vec<Vec<usize>>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_contexts(&text).map_err(|e| e.with_path(path))
}

pub fn parse_contexts(text: &str) -> Result<Vec<Vec<usize>>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let ctx = line
            .split_whitespace()
            .map(|tok| match tok.parse::<usize>() {
                Ok(v) if v >= 1 => Ok(v - 1),
                _ => Err(Error::parse(n + 1, format!("bad context index `{tok}`"))),
            })
            .collect::<Result<Vec<_>>>()?;
        out.push(ctx);
    }
    Ok(out)
}

/// Instantaneous and cumulative pseudo-regret of one run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RegretTrace {
    pub instantaneous: Vec<f64>,
    pub cumulative: Vec<f64>,
}

impl RegretTrace {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.instantaneous.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instantaneous.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }

    pub fn push(&mut self, regret: f64) {
        let total = self.total() + regret;
        self.instantaneous.push(regret);
        self.cumulative.push(total);
    }

    /// Appends the noiseless regret of `arm` and returns it.
    pub fn record(&mut self, env: &Environment, context: Option<&[usize]>, arm: &Arm) -> Result<f64> {
        let r = env.regret(context, arm)?;
        self.push(r);
        Ok(r)
    }
}

/// Functional form of [`RegretTrace::record`].
pub fn record_regret(
    mut trace: RegretTrace,
    env: &Environment,
    context: Option<&[usize]>,
    arm: &Arm,
) -> Result<RegretTrace> {
    trace.record(env, context, arm)?;
    Ok(trace)
}

/// Flat offset of an arm in an environment (range checked).
pub fn arm_offset(env: &Environment, arm: &Arm) -> Result<usize> {
    flat_offset(arm, env.dims())
}
