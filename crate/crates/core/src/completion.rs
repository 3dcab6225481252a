//! Noisy low-rank tensor completion from uniformly sampled entries.
//!
//! Spectral initialization builds an unbiased estimate of the tensor and a
//! second-moment U-statistic per mode; power iteration then refines the mode
//! subspaces by alternating projections.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::tensor::{
    fix_signs, flat_offset, matricize, multiply_all, norms, orthonormality_error,
    truncated_svd_left, Arm, DenseTensor, Matrix, TuckerDecomp,
};

/// One noisy reading of a tensor entry.
#[derive(Clone, Debug, PartialEq)]
pub struct Observation {
    pub arm: Arm,
    pub reward: f64,
}

impl Observation {
    pub fn new(arm: Arm, reward: f64) -> Self {
        Observation { arm, reward }
    }
}

/// Parses observation lines `i1|i2|...|id reward` with one-based indices;
/// `#` starts a comment.
pub fn parse_observations(text: &str) -> Result<Vec<Observation>> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let (Some(arm), Some(reward), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(Error::parse(n + 1, format!("expected `i1|...|id reward`, got `{line}`")));
        };
        let arm: Arm = arm.parse().map_err(|e: Error| Error::parse(n + 1, e.to_string()))?;
        let reward: f64 = reward
            .parse()
            .map_err(|_| Error::parse(n + 1, format!("bad reward `{reward}`")))?;
        out.push(Observation::new(arm, reward));
    }
    Ok(out)
}

pub fn load_observations(path: impl AsRef<std::path::Path>) -> Result<Vec<Observation>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_observations(&text).map_err(|e| e.with_path(path))
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompletionOptions {
    pub ranks: Vec<usize>,
    /// Stop once a sweep raises the projected norm by no more than this.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl CompletionOptions {
    pub fn new(ranks: Vec<usize>) -> Self {
        CompletionOptions {
            ranks,
            tolerance: 1e-6,
            max_iterations: 50,
        }
    }

    fn validate(&self, dims: &[usize]) -> Result<()> {
        if self.ranks.len() != dims.len() {
            return Err(Error::Shape(format!(
                "ranks {:?} do not match dims {dims:?}",
                self.ranks
            )));
        }
        for (j, (&r, &p)) in self.ranks.iter().zip(dims).enumerate() {
            if r == 0 || r > p {
                return Err(Error::Domain(format!(
                    "rank {r} on mode {j} must lie in [1, {p}]"
                )));
            }
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::Domain(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::Domain("max_iterations must be positive".into()));
        }
        Ok(())
    }
}

/// Flat offsets of every observation, validated against `dims`.
fn offsets(obs: &[Observation], dims: &[usize]) -> Result<Vec<usize>> {
    obs.iter().map(|o| flat_offset(&o.arm, dims)).collect()
}

/// `(prod p / T) * sum_t y_t * indicator(arm_t)`.
pub fn initial_estimate(obs: &[Observation], dims: &[usize]) -> Result<DenseTensor> {
    if obs.is_empty() {
        return Err(Error::InsufficientData("no observations".into()));
    }
    let offs = offsets(obs, dims)?;
    let mut x = DenseTensor::zeros(dims);
    let scale = x.len() as f64 / obs.len() as f64;
    let vals = x.values_mut();
    for (o, off) in obs.iter().zip(offs) {
        vals[off] += scale * o.reward;
    }
    Ok(x)
}

/// Column of the mode-`mode` unfolding that an arm lands in.
fn unfolded_column(arm: &Arm, dims: &[usize], mode: usize) -> usize {
    let mut col = 0;
    for (l, (&i, &p)) in arm.indices().iter().zip(dims).enumerate() {
        if l != mode {
            col = col * p + i;
        }
    }
    col
}

/// Second-moment U-statistic of mode `mode`:
/// `(prod p)^2 / (T(T-1)) * sum_{t != t'} y_t y_t' M(A_t) M(A_t')ᵀ`.
///
/// `M(A_t) M(A_t')ᵀ` is nonzero only when both arms share an unfolded column,
/// so the double sum collapses to `c (B Bᵀ - D)` with `B` the reward-weighted
/// unfolding of the observations and `D` the `t = t'` diagonal.
pub fn mode_u_statistic(obs: &[Observation], dims: &[usize], mode: usize) -> Result<Matrix> {
    let t = obs.len();
    if t < 2 {
        return Err(Error::InsufficientData(format!(
            "the U-statistic needs at least 2 observations, got {t}"
        )));
    }
    if mode >= dims.len() {
        return Err(Error::Range(format!("mode {mode} out of range")));
    }
    offsets(obs, dims)?;
    let p = dims[mode];
    let total: usize = dims.iter().product();
    let c = (total as f64).powi(2) / (t as f64 * (t as f64 - 1.0));

    // Sparse columns of B, kept ordered so accumulation is reproducible.
    let mut columns: BTreeMap<usize, Vec<(usize, f64)>> = BTreeMap::new();
    let mut r = Matrix::zeros(p, p);
    for o in obs {
        let i = o.arm.indices()[mode];
        let col = unfolded_column(&o.arm, dims, mode);
        let entries = columns.entry(col).or_default();
        match entries.iter_mut().find(|(row, _)| *row == i) {
            Some((_, v)) => *v += o.reward,
            None => entries.push((i, o.reward)),
        }
        r[(i, i)] -= o.reward * o.reward;
    }
    for entries in columns.values() {
        for &(a, va) in entries {
            for &(b, vb) in entries {
                r[(a, b)] += va * vb;
            }
        }
    }
    r *= c;
    Ok(r)
}

/// Top-`r` eigenvectors of a symmetric matrix, sign-fixed like [`truncated_svd_left`].
pub(crate) fn top_eigenvectors(m: &Matrix, r: usize) -> Result<Matrix> {
    let eig = nalgebra::SymmetricEigen::try_new(m.clone(), f64::EPSILON, 0)
        .ok_or_else(|| Error::Numeric("symmetric eigendecomposition did not converge".into()))?;
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let mut out = Matrix::zeros(m.nrows(), r);
    for (c, &src) in order.iter().take(r).enumerate() {
        out.set_column(c, &eig.eigenvectors.column(src));
    }
    fix_signs(&mut out);
    Ok(out)
}

/// Leading left singular vectors, also when `r` exceeds the column count.
fn leading_left(m: &Matrix, r: usize) -> Result<Matrix> {
    if r <= m.ncols().min(m.nrows()) {
        truncated_svd_left(m, r)
    } else {
        top_eigenvectors(&(m * m.transpose()), r)
    }
}

/// Unbiased initial estimate plus the per-mode starting subspaces.
pub fn spectral_initialize(
    obs: &[Observation],
    dims: &[usize],
    opts: &CompletionOptions,
) -> Result<(DenseTensor, Vec<Matrix>)> {
    opts.validate(dims)?;
    if obs.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "completion needs at least 2 observations, got {}",
            obs.len()
        )));
    }
    let x_ini = initial_estimate(obs, dims)?;
    let factors = (0..dims.len())
        .map(|j| top_eigenvectors(&mode_u_statistic(obs, dims, j)?, opts.ranks[j]))
        .collect::<Result<Vec<_>>>()?;
    Ok((x_ini, factors))
}

/// Result of [`power_iterate`].
#[derive(Clone, Debug)]
pub struct PowerIteration {
    pub factors: Vec<Matrix>,
    /// Projected norm `‖x ×_1 U_1ᵀ ... ×_d U_dᵀ‖_F` before the first sweep and after each sweep.
    pub projected_norms: Vec<f64>,
}

fn projected_norm(x: &DenseTensor, factors: &[Matrix]) -> Result<f64> {
    Ok(norms(&crate::tensor::project(x, factors)?).0)
}

/// Refines mode subspaces by alternating projections.
///
/// Each mode update uses the most recent factors of the other modes, so every
/// update maximizes the projected norm given the rest and the norm never
/// decreases across sweeps.
pub fn power_iterate(
    x_ini: &DenseTensor,
    factors0: &[Matrix],
    opts: &CompletionOptions,
) -> Result<PowerIteration> {
    let dims = x_ini.dims().to_vec();
    opts.validate(&dims)?;
    if factors0.len() != dims.len() {
        return Err(Error::Shape(format!(
            "{} factors for an order-{} tensor",
            factors0.len(),
            dims.len()
        )));
    }
    for (j, u) in factors0.iter().enumerate() {
        if u.shape() != (dims[j], opts.ranks[j]) {
            return Err(Error::Shape(format!(
                "factor {j} is {}x{}, expected {}x{}",
                u.nrows(),
                u.ncols(),
                dims[j],
                opts.ranks[j]
            )));
        }
        let err = orthonormality_error(u);
        if err > 1e-8 {
            return Err(Error::Contract(format!(
                "factor {j} is not orthonormal (|UᵀU - I| = {err:.2e})"
            )));
        }
    }
    let mut factors = factors0.to_vec();
    let mut trace = vec![projected_norm(x_ini, &factors)?];
    for _ in 0..opts.max_iterations {
        for j in 0..dims.len() {
            let ts: Vec<Matrix> = factors.iter().map(|u| u.transpose()).collect();
            let mats: Vec<Option<&Matrix>> = ts
                .iter()
                .enumerate()
                .map(|(l, t)| (l != j).then_some(t))
                .collect();
            let partial = multiply_all(x_ini, &mats)?;
            factors[j] = leading_left(&matricize(&partial, j)?, opts.ranks[j])?;
        }
        let current = projected_norm(x_ini, &factors)?;
        let previous = *trace.last().expect("trace starts nonempty");
        trace.push(current);
        if current - previous <= opts.tolerance {
            break;
        }
    }
    Ok(PowerIteration {
        factors,
        projected_norms: trace,
    })
}

/// Low-rank Tucker estimate of the tensor behind `obs`.
pub fn complete(
    obs: &[Observation],
    dims: &[usize],
    opts: &CompletionOptions,
) -> Result<TuckerDecomp> {
    let (x_ini, factors0) = spectral_initialize(obs, dims, opts)?;
    let refined = power_iterate(&x_ini, &factors0, opts)?;
    let core = crate::tensor::project(&x_ini, &refined.factors)?;
    TuckerDecomp::new(core, refined.factors)
}
