//! Tensor epoch-greedy.
//!
//! After `s1` uniform initialization pulls, play proceeds in epochs: one
//! uniform exploration pull followed by `s2k` greedy pulls on the completion
//! estimate. Only initialization and exploration rewards enter the estimate.

use rand_chacha::ChaCha8Rng;

use crate::completion::{complete, CompletionOptions, Observation};
use crate::error::{Error, Result};
use crate::policy::{check_context, uniform_arm, Phase, Policy};
use crate::tensor::{argmax_first, Arm, DenseTensor, TuckerDecomp};

#[derive(Clone, Debug)]
pub struct EpochGreedyConfig {
    pub ranks: Vec<usize>,
    /// Scales the initialization length.
    pub init_constant: f64,
    /// Scales the exploit block length.
    pub exploit_constant: f64,
    pub completion: CompletionOptions,
}

impl EpochGreedyConfig {
    pub fn new(ranks: Vec<usize>) -> Self {
        EpochGreedyConfig {
            completion: CompletionOptions::new(ranks.clone()),
            ranks,
            init_constant: 1.0,
            exploit_constant: 10.0,
        }
    }
}

/// Side length and rank used by the schedule formulas: the geometric mean of
/// the dimensions and the largest rank (the plain `p` and `r` of a cubic
/// tensor with equal ranks).
pub fn schedule_scale(dims: &[usize], ranks: &[usize]) -> (f64, f64) {
    let d = dims.len() as f64;
    let p = dims.iter().map(|&x| (x as f64).ln()).sum::<f64>() / d;
    let r = ranks.iter().copied().max().unwrap_or(1) as f64;
    (p.exp(), r)
}

/// `ceil(c0 * r^((d-2)/2) * p^(d/2))`, at least 2 so the first completion has data.
pub fn init_length(c0: f64, p: f64, r: f64, d: usize) -> usize {
    let d = d as f64;
    let v = c0 * r.powf((d - 2.0) / 2.0) * p.powf(d / 2.0);
    (v.ceil() as usize).max(2)
}

/// `ceil(c2 * p^(-(d+1)/2) * r^(-1/2) * (ln p)^(-1/2) * sqrt(k + s1))`, at least 1.
pub fn exploit_length(k: usize, s1: usize, c2: f64, p: f64, r: f64, d: usize) -> Result<usize> {
    if p < 2.0 {
        return Err(Error::Domain(format!("exploit length needs p >= 2, got {p}")));
    }
    let d = d as f64;
    let v = c2 * p.powf(-(d + 1.0) / 2.0) * r.powf(-0.5) * p.ln().powf(-0.5)
        * ((k + s1) as f64).sqrt();
    Ok((v.ceil() as usize).max(1))
}

pub struct EpochGreedyPolicy {
    dims: Vec<usize>,
    context_dim: usize,
    config: EpochGreedyConfig,
    s1: usize,
    p_eff: f64,
    r_eff: f64,
    steps: usize,
    epoch: usize,
    explore_pending: bool,
    exploit_left: usize,
    history: Vec<Observation>,
    estimate: Option<TuckerDecomp>,
    estimate_values: Option<DenseTensor>,
    estimate_epoch: Option<usize>,
}

impl EpochGreedyPolicy {
    pub fn new(dims: &[usize], context_dim: usize, config: EpochGreedyConfig) -> Result<Self> {
        if config.ranks.len() != dims.len() {
            return Err(Error::Shape(format!(
                "ranks {:?} do not match dims {dims:?}",
                config.ranks
            )));
        }
        if !(config.init_constant > 0.0) || !(config.exploit_constant > 0.0) {
            return Err(Error::Domain("schedule constants must be positive".into()));
        }
        let (p_eff, r_eff) = schedule_scale(dims, &config.ranks);
        if p_eff < 2.0 {
            return Err(Error::Domain(format!("effective dimension {p_eff} is below 2")));
        }
        let s1 = init_length(config.init_constant, p_eff, r_eff, dims.len());
        Ok(EpochGreedyPolicy {
            dims: dims.to_vec(),
            context_dim,
            config,
            s1,
            p_eff,
            r_eff,
            steps: 0,
            epoch: 0,
            explore_pending: true,
            exploit_left: 0,
            history: Vec::new(),
            estimate: None,
            estimate_values: None,
            estimate_epoch: None,
        })
    }

    pub fn init_len(&self) -> usize {
        self.s1
    }

    pub fn epoch(&self) -> usize {
        self.epoch
    }

    pub fn exploit_left(&self) -> usize {
        self.exploit_left
    }

    pub fn history_len(&self) -> usize {
        self.history.len()
    }

    pub fn estimate(&self) -> Option<&TuckerDecomp> {
        self.estimate.as_ref()
    }

    /// Exploit block length of epoch `k`.
    pub fn block_len(&self, k: usize) -> Result<usize> {
        exploit_length(
            k,
            self.s1,
            self.config.exploit_constant,
            self.p_eff,
            self.r_eff,
            self.dims.len(),
        )
    }

    fn refresh_estimate(&mut self) -> Result<()> {
        if self.estimate_epoch == Some(self.epoch) {
            return Ok(());
        }
        let t = complete(&self.history, &self.dims, &self.config.completion)?;
        self.estimate_values = Some(t.reconstruct());
        self.estimate = Some(t);
        self.estimate_epoch = Some(self.epoch);
        Ok(())
    }

    fn greedy_arm(&self, context: Option<&[usize]>) -> Result<Arm> {
        let values = self
            .estimate_values
            .as_ref()
            .ok_or_else(|| Error::Contract("exploit step before any estimate".into()))?;
        let ctx = context.unwrap_or(&[]);
        let slice: usize = self.dims[ctx.len()..].iter().product();
        let mut cell = 0;
        for (&i, &p) in ctx.iter().zip(&self.dims) {
            cell = cell * p + i;
        }
        let (local, _) = argmax_first(&values.values()[cell * slice..(cell + 1) * slice]);
        Ok(Arm::from_offset(cell * slice + local, &self.dims))
    }
}

impl Policy for EpochGreedyPolicy {
    fn name(&self) -> &'static str {
        "epoch_greedy"
    }

    fn select(&mut self, context: Option<&[usize]>, rng: &mut ChaCha8Rng) -> Result<(Arm, Phase)> {
        check_context(&self.dims, self.context_dim, context)?;
        if self.steps < self.s1 {
            return Ok((uniform_arm(&self.dims, context, rng), Phase::Initialize));
        }
        if self.explore_pending {
            return Ok((uniform_arm(&self.dims, context, rng), Phase::Explore));
        }
        // The data only changes on exploration steps, so one completion per
        // epoch gives the same estimate as recomputing before every exploit pull.
        self.refresh_estimate()?;
        Ok((self.greedy_arm(context)?, Phase::Exploit))
    }

    fn observe(&mut self, arm: &Arm, reward: f64, phase: Phase, _rng: &mut ChaCha8Rng) -> Result<()> {
        self.steps += 1;
        match phase {
            Phase::Initialize => self.history.push(Observation::new(arm.clone(), reward)),
            Phase::Explore => {
                self.history.push(Observation::new(arm.clone(), reward));
                self.explore_pending = false;
                self.exploit_left = self.block_len(self.epoch)?;
            }
            Phase::Exploit => {
                self.exploit_left = self.exploit_left.saturating_sub(1);
                if self.exploit_left == 0 {
                    self.epoch += 1;
                    self.explore_pending = true;
                }
            }
            other => {
                return Err(Error::Contract(format!(
                    "epoch-greedy cannot observe a {other} step"
                )))
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::{synth_env, synth_tucker_env};
    use rand::SeedableRng;

    #[test]
    fn exploit_length_example() {
        // independent evaluation: 10 / 225 / sqrt(2) / sqrt(ln 15) * sqrt(82)
        let raw = 10.0 / 225.0 / 2f64.sqrt() / 15f64.ln().sqrt() * 82f64.sqrt();
        assert!((raw - 0.1729).abs() < 1e-4);
        assert_eq!(exploit_length(0, 82, 10.0, 15.0, 2.0, 3).unwrap(), 1);
        assert_eq!(exploit_length(0, 82, 1e-12, 15.0, 2.0, 3).unwrap(), 1);
        assert!(matches!(exploit_length(0, 82, 1.0, 1.0, 2.0, 3), Err(Error::Domain(_))));
    }

    #[test]
    fn exploit_length_is_monotone() {
        let mut prev = 0;
        for k in 0..=10_000 {
            let v = exploit_length(k, 83, 2000.0, 15.0, 2.0, 3).unwrap();
            assert!(v >= prev);
            prev = v;
        }
        assert!(prev > 1);
    }

    #[test]
    fn init_length_matches_formula() {
        // 15^1.5 * sqrt(2) = 82.16
        assert_eq!(init_length(1.0, 15.0, 2.0, 3), 83);
        assert_eq!(init_length(1.0, 8.0, 1.0, 3), 23);
        let (p, r) = schedule_scale(&[15, 15, 15], &[2, 2, 2]);
        assert!((p - 15.0).abs() < 1e-12 && r == 2.0);
    }

    fn drive(pol: &mut EpochGreedyPolicy, steps: usize) -> Vec<Phase> {
        let env = synth_env(5, 1, 1.0, 1.0, 0, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut phases = Vec::new();
        for _ in 0..steps {
            let (arm, ph) = pol.select(None, &mut rng).unwrap();
            let y = env.pull(&arm, &mut rng).unwrap();
            pol.observe(&arm, y, ph, &mut rng).unwrap();
            phases.push(ph);
        }
        phases
    }

    #[test]
    fn schedule_sequence() {
        let mut cfg = EpochGreedyConfig::new(vec![1, 1, 1]);
        // 0.26 * 5^1.5 = 2.9 -> s1 = 3; tiny C2 -> blocks of 1
        cfg.init_constant = 0.26;
        cfg.exploit_constant = 1e-9;
        let mut pol = EpochGreedyPolicy::new(&[5, 5, 5], 0, cfg).unwrap();
        assert_eq!(pol.init_len(), 3);
        use Phase::*;
        assert_eq!(
            drive(&mut pol, 9),
            vec![Initialize, Initialize, Initialize, Explore, Exploit, Explore, Exploit, Explore, Exploit]
        );
    }

    #[test]
    fn history_counts_only_random_steps() {
        let mut cfg = EpochGreedyConfig::new(vec![1, 1, 1]);
        cfg.exploit_constant = 400.0;
        let mut pol = EpochGreedyPolicy::new(&[5, 5, 5], 0, cfg).unwrap();
        let phases = drive(&mut pol, 200);
        let random = phases
            .iter()
            .filter(|p| matches!(p, Phase::Initialize | Phase::Explore))
            .count();
        assert_eq!(pol.history_len(), random);
        assert!(phases.contains(&Phase::Exploit));
    }

    #[test]
    fn epoch_counters_advance() {
        let mut cfg = EpochGreedyConfig::new(vec![1, 1, 1]);
        cfg.exploit_constant = 300.0;
        let mut pol = EpochGreedyPolicy::new(&[5, 5, 5], 0, cfg).unwrap();
        let env = synth_env(5, 1, 1.0, 1.0, 0, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut seen_epochs = 0;
        for _ in 0..300 {
            let (arm, ph) = pol.select(None, &mut rng).unwrap();
            let before = pol.epoch();
            let y = env.pull(&arm, &mut rng).unwrap();
            pol.observe(&arm, y, ph, &mut rng).unwrap();
            if ph == Phase::Explore {
                assert_eq!(pol.exploit_left(), pol.block_len(pol.epoch()).unwrap());
            }
            if pol.epoch() != before {
                assert_eq!(pol.epoch(), before + 1);
                seen_epochs += 1;
            }
        }
        assert!(seen_epochs > 2);
    }

    #[test]
    fn noiseless_exploit_finds_oracle() {
        let env = synth_env(5, 1, 1.0, 0.0, 0, 4).unwrap();
        let mut cfg = EpochGreedyConfig::new(vec![1, 1, 1]);
        cfg.init_constant = 100.0;
        let mut pol = EpochGreedyPolicy::new(env.dims(), 0, cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        loop {
            let (arm, ph) = pol.select(None, &mut rng).unwrap();
            if ph == Phase::Exploit {
                assert_eq!(arm, env.oracle(None).unwrap().0);
                break;
            }
            let y = env.pull(&arm, &mut rng).unwrap();
            pol.observe(&arm, y, ph, &mut rng).unwrap();
        }
    }

    #[test]
    fn contextual_exploit_uses_the_slice() {
        let env = synth_tucker_env(&[4, 5, 5], &[1, 1, 1], 1.0, 0.0, 1, 6).unwrap();
        let mut cfg = EpochGreedyConfig::new(vec![1, 1, 1]);
        cfg.init_constant = 100.0;
        let mut pol = EpochGreedyPolicy::new(env.dims(), 1, cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for t in 0..3000 {
            let ctx = env.context_for_step(t, &mut rng).unwrap();
            let (arm, ph) = pol.select(ctx.as_deref(), &mut rng).unwrap();
            assert_eq!(arm.indices()[0], ctx.as_ref().unwrap()[0]);
            if ph == Phase::Exploit {
                let est = pol.estimate_values.as_ref().unwrap();
                let c = ctx.as_ref().unwrap()[0];
                let mut best = (0, f64::NEG_INFINITY);
                for j in 0..5 {
                    for k in 0..5 {
                        if est.at(&[c, j, k]) > best.1 {
                            best = (j * 5 + k, est.at(&[c, j, k]));
                        }
                    }
                }
                assert_eq!(arm.indices()[1] * 5 + arm.indices()[2], best.0);
            }
            let y = env.pull(&arm, &mut rng).unwrap();
            pol.observe(&arm, y, ph, &mut rng).unwrap();
        }
    }
}
