//! Tensor ensemble sampling.
//!
//! `M` Tucker models are drawn from a Gaussian row prior. Each step a model is
//! picked uniformly, refit to its own perturbed copy of the reward history by
//! alternating closed-form row and core solves, and played greedily. Every
//! model's history receives the new reward plus its own Gaussian perturbation.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::policy::{check_context, Phase, Policy};
use crate::tensor::{argmax_first, increment, marginal_multiply, Arm, DenseTensor, Matrix, TuckerDecomp};

/// Ridge on the core solve; only there to keep the normal equations invertible.
pub const CORE_RIDGE: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct EnsemblePrior {
    /// Per-mode prior mean rows (`p_k × r_k`); `None` means all zeros.
    pub mean: Option<Vec<Matrix>>,
    /// Per-mode prior standard deviation of factor rows.
    pub prior_std: Vec<f64>,
    /// Reward noise standard deviation used in the fit.
    pub reward_std: f64,
    /// Standard deviation of the per-model reward perturbation.
    pub perturbation_std: f64,
    /// Number of models.
    pub size: usize,
}

impl EnsemblePrior {
    pub fn new(order: usize) -> Self {
        EnsemblePrior {
            mean: None,
            prior_std: vec![1.0; order],
            reward_std: 1.0,
            perturbation_std: 1.0,
            size: 100,
        }
    }

    fn validate(&self, dims: &[usize], ranks: &[usize]) -> Result<()> {
        if self.size == 0 {
            return Err(Error::Domain("ensemble size must be at least 1".into()));
        }
        if !(self.reward_std > 0.0) {
            return Err(Error::Domain("reward_std must be positive".into()));
        }
        if !(self.perturbation_std >= 0.0) {
            return Err(Error::Domain("perturbation_std must be nonnegative".into()));
        }
        if self.prior_std.len() != dims.len() || self.prior_std.iter().any(|s| !(*s >= 0.0)) {
            return Err(Error::Domain(format!(
                "prior_std needs {} nonnegative entries",
                dims.len()
            )));
        }
        if let Some(mean) = &self.mean {
            if mean.len() != dims.len()
                || mean
                    .iter()
                    .zip(dims.iter().zip(ranks))
                    .any(|(m, (&p, &r))| m.shape() != (p, r))
            {
                return Err(Error::Shape("prior mean shapes do not match dims × ranks".into()));
            }
        }
        Ok(())
    }
}

/// Sweep counts of the lazy refit.
#[derive(Clone, Debug)]
pub struct FitSchedule {
    /// Sweeps the first time a model is fit.
    pub initial_sweeps: usize,
    /// Sweeps on every later fit (warm started).
    pub sweeps_per_step: usize,
    /// Stop a fit early once a sweep lowers the objective by no more than this (0 disables).
    pub tolerance: f64,
}

impl Default for FitSchedule {
    fn default() -> Self {
        FitSchedule {
            initial_sweeps: 5,
            sweeps_per_step: 1,
            tolerance: 0.0,
        }
    }
}

/// All models plus the shared and per-model reward histories.
#[derive(Clone, Debug)]
pub struct EnsembleState {
    dims: Vec<usize>,
    ranks: Vec<usize>,
    prior: EnsemblePrior,
    models: Vec<TuckerDecomp>,
    /// Initial factor draws; they act as each model's prior means in the fit.
    anchors: Vec<Vec<Matrix>>,
    fitted: Vec<bool>,
    arms: Vec<Vec<usize>>,
    rewards: Vec<f64>,
    perturbed: Vec<Vec<f64>>,
    /// `by_row[k][i]`: indices of observations whose mode-`k` index is `i`.
    by_row: Vec<Vec<Vec<usize>>>,
}

/// Draws the ensemble: factor rows from the prior, columns normalized, core all ones.
pub fn init_ensemble(
    prior: &EnsemblePrior,
    dims: &[usize],
    ranks: &[usize],
    rng: &mut ChaCha8Rng,
) -> Result<EnsembleState> {
    if dims.len() != ranks.len() || ranks.iter().zip(dims).any(|(&r, &p)| r == 0 || r > p) {
        return Err(Error::Shape(format!("ranks {ranks:?} invalid for dims {dims:?}")));
    }
    prior.validate(dims, ranks)?;
    let mut models = Vec::with_capacity(prior.size);
    let mut anchors = Vec::with_capacity(prior.size);
    for _ in 0..prior.size {
        let factors: Vec<Matrix> = (0..dims.len())
            .map(|k| {
                let (p, r) = (dims[k], ranks[k]);
                let sd = prior.prior_std[k];
                let mut u = Matrix::from_fn(p, r, |i, j| {
                    let mu = prior.mean.as_ref().map_or(0.0, |m| m[k][(i, j)]);
                    let z: f64 = rng.sample(StandardNormal);
                    mu + sd * z
                });
                for mut col in u.column_iter_mut() {
                    let n = col.norm();
                    if n > 0.0 {
                        col /= n;
                    }
                }
                u
            })
            .collect();
        let core = DenseTensor::from_fn(ranks, |_| 1.0);
        anchors.push(factors.clone());
        models.push(TuckerDecomp::new(core, factors)?);
    }
    Ok(EnsembleState {
        dims: dims.to_vec(),
        ranks: ranks.to_vec(),
        prior: prior.clone(),
        fitted: vec![false; prior.size],
        perturbed: vec![Vec::new(); prior.size],
        models,
        anchors,
        arms: Vec::new(),
        rewards: Vec::new(),
        by_row: dims.iter().map(|&p| vec![Vec::new(); p]).collect(),
    })
}

/// Contraction of the core with the rows `rows[l]` of every mode except `skip`;
/// returns a vector over the skipped mode's rank.
fn contract_except(core: &DenseTensor, rows: &[&[f64]], skip: usize) -> Vec<f64> {
    let ranks = core.dims();
    let mut out = vec![0.0; ranks[skip]];
    let mut idx = vec![0usize; ranks.len()];
    for &s in core.values() {
        let mut w = s;
        for (l, &a) in idx.iter().enumerate() {
            if l != skip {
                w *= rows[l][a];
            }
        }
        out[idx[skip]] += w;
        increment(&mut idx, ranks);
    }
    out
}

/// Kronecker row `z[a] = prod_l rows[l][a_l]` in core layout order.
fn kron_rows(ranks: &[usize], rows: &[&[f64]]) -> Vec<f64> {
    let mut z = vec![1.0];
    for (l, &r) in ranks.iter().enumerate() {
        let mut next = Vec::with_capacity(z.len() * r);
        for &a in &z {
            next.extend(rows[l][..r].iter().map(|&b| a * b));
        }
        z = next;
    }
    z
}

fn row(u: &Matrix, i: usize) -> Vec<f64> {
    u.row(i).iter().copied().collect()
}

/// Regularized least-squares row of mode `mode`:
/// `(σ⁻² Σ v vᵀ + σ_k⁻² I)⁻¹ (σ⁻² Σ y v + σ_k⁻² prior_row)` over the listed
/// observations, where `v` contracts the core with the other modes' rows.
#[allow(clippy::too_many_arguments)]
pub fn als_row_update(
    model: &TuckerDecomp,
    arms: &[Vec<usize>],
    rewards: &[f64],
    hits: &[usize],
    mode: usize,
    reward_std: f64,
    prior_std: f64,
    prior_row: &[f64],
) -> Result<Vec<f64>> {
    let r = model.ranks()[mode];
    if prior_row.len() != r {
        return Err(Error::Shape(format!("prior row has {} entries, rank is {r}", prior_row.len())));
    }
    if prior_std == 0.0 {
        return Ok(prior_row.to_vec());
    }
    let inv_noise = 1.0 / (reward_std * reward_std);
    let inv_prior = 1.0 / (prior_std * prior_std);
    let mut gram = DMatrix::<f64>::identity(r, r) * inv_prior;
    let mut rhs = DVector::from_column_slice(prior_row) * inv_prior;
    let row_cache: Vec<Vec<Vec<f64>>> = model
        .factors
        .iter()
        .map(|u| (0..u.nrows()).map(|i| row(u, i)).collect())
        .collect();
    for &s in hits {
        let rows: Vec<&[f64]> = arms[s]
            .iter()
            .enumerate()
            .map(|(l, &i)| row_cache[l][i].as_slice())
            .collect();
        let v = DVector::from_vec(contract_except(&model.core, &rows, mode));
        gram += &v * v.transpose() * inv_noise;
        rhs += &v * (rewards[s] * inv_noise);
    }
    solve_spd(gram, rhs).map(|x| x.iter().copied().collect())
}

fn solve_spd(a: DMatrix<f64>, b: DVector<f64>) -> Result<DVector<f64>> {
    match a.clone().cholesky() {
        Some(ch) => Ok(ch.solve(&b)),
        None => a
            .lu()
            .solve(&b)
            .ok_or_else(|| Error::Numeric("singular normal equations".into())),
    }
}

impl EnsembleState {
    pub fn size(&self) -> usize {
        self.models.len()
    }

    pub fn model(&self, m: usize) -> &TuckerDecomp {
        &self.models[m]
    }

    pub fn anchor(&self, m: usize) -> &[Matrix] {
        &self.anchors[m]
    }

    pub fn history_len(&self) -> usize {
        self.rewards.len()
    }

    pub fn shared_rewards(&self) -> &[f64] {
        &self.rewards
    }

    pub fn perturbed_rewards(&self, m: usize) -> &[f64] {
        &self.perturbed[m]
    }

    pub fn is_fitted(&self, m: usize) -> bool {
        self.fitted[m]
    }

    /// Appends `(arm, y)` to the shared history and `(arm, y + ω_m)` to every
    /// model's history, `ω_m ~ N(0, perturbation_std²)`.
    pub fn perturb_and_record(&mut self, arm: &Arm, y: f64, rng: &mut ChaCha8Rng) -> Result<()> {
        arm.check(&self.dims)?;
        let s = self.rewards.len();
        for (k, &i) in arm.indices().iter().enumerate() {
            self.by_row[k][i].push(s);
        }
        self.arms.push(arm.indices().to_vec());
        self.rewards.push(y);
        let sd = self.prior.perturbation_std;
        for hist in &mut self.perturbed {
            let z: f64 = rng.sample(StandardNormal);
            hist.push(y + sd * z);
        }
        Ok(())
    }

    /// Objective minimized by [`Self::map_fit`] for model `m`:
    /// `σ⁻² Σ (ỹ - f)² + Σ_k σ_k⁻² ‖U_k - U_k⁽⁰⁾‖²_F + CORE_RIDGE ‖S‖²_F`.
    pub fn objective(&self, m: usize) -> f64 {
        let model = &self.models[m];
        let inv_noise = 1.0 / (self.prior.reward_std * self.prior.reward_std);
        let mut total = 0.0;
        for (arm, &y) in self.arms.iter().zip(&self.perturbed[m]) {
            let rows: Vec<Vec<f64>> = arm
                .iter()
                .enumerate()
                .map(|(l, &i)| row(&model.factors[l], i))
                .collect();
            let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
            let z = kron_rows(&self.ranks, &refs);
            let f: f64 = z.iter().zip(model.core.values()).map(|(a, b)| a * b).sum();
            total += inv_noise * (y - f) * (y - f);
        }
        for (k, (u, u0)) in model.factors.iter().zip(&self.anchors[m]).enumerate() {
            let sd = self.prior.prior_std[k];
            if sd > 0.0 {
                total += (u - u0).norm_squared() / (sd * sd);
            }
        }
        total + CORE_RIDGE * model.core.values().iter().map(|v| v * v).sum::<f64>()
    }

    /// Replaces every row of mode `k` of model `m` by its closed-form update.
    pub fn update_mode(&mut self, m: usize, k: usize) -> Result<()> {
        let p = self.dims[k];
        let mut new_rows = Vec::with_capacity(p);
        for i in 0..p {
            let prior_row = row(&self.anchors[m][k], i);
            new_rows.push(als_row_update(
                &self.models[m],
                &self.arms,
                &self.perturbed[m],
                &self.by_row[k][i],
                k,
                self.prior.reward_std,
                self.prior.prior_std[k],
                &prior_row,
            )?);
        }
        let u = &mut self.models[m].factors[k];
        for (i, r) in new_rows.iter().enumerate() {
            for (j, &v) in r.iter().enumerate() {
                u[(i, j)] = v;
            }
        }
        Ok(())
    }

    /// Least-squares core with factors fixed.
    pub fn update_core(&mut self, m: usize) -> Result<()> {
        let model = &self.models[m];
        let q: usize = self.ranks.iter().product();
        let inv_noise = 1.0 / (self.prior.reward_std * self.prior.reward_std);
        let mut gram = DMatrix::<f64>::identity(q, q) * CORE_RIDGE;
        let mut rhs = DVector::<f64>::zeros(q);
        for (arm, &y) in self.arms.iter().zip(&self.perturbed[m]) {
            let rows: Vec<Vec<f64>> = arm
                .iter()
                .enumerate()
                .map(|(l, &i)| row(&model.factors[l], i))
                .collect();
            let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
            let z = DVector::from_vec(kron_rows(&self.ranks, &refs));
            gram += &z * z.transpose() * inv_noise;
            rhs += &z * (y * inv_noise);
        }
        let s = solve_spd(gram, rhs)?;
        self.models[m].core = DenseTensor::new(self.ranks.clone(), s.iter().copied().collect())?;
        Ok(())
    }

    /// Alternating sweeps (every mode's rows, then the core). Returns the
    /// objective after the last sweep when it was evaluated.
    pub fn map_fit(&mut self, m: usize, sweeps: usize, tolerance: f64) -> Result<Option<f64>> {
        if self.rewards.is_empty() {
            return Ok(None);
        }
        let mut last = if tolerance > 0.0 { Some(self.objective(m)) } else { None };
        for _ in 0..sweeps {
            for k in 0..self.dims.len() {
                self.update_mode(m, k)?;
            }
            self.update_core(m)?;
            if let Some(prev) = last {
                let now = self.objective(m);
                last = Some(now);
                if prev - now <= tolerance {
                    break;
                }
            }
        }
        self.fitted[m] = true;
        Ok(last)
    }

    /// Greedy arm of model `m`: argmax of its reconstruction over the decision
    /// modes with the context rows fixed. Ties go to the lowest offset.
    pub fn act(&self, m: usize, context: Option<&[usize]>) -> Result<Arm> {
        let model = &self.models[m];
        let ctx = context.unwrap_or(&[]);
        let mut cur = model.core.clone();
        for (k, u) in model.factors.iter().enumerate() {
            let mat = if k < ctx.len() {
                u.rows(ctx[k], 1).into_owned()
            } else {
                u.clone()
            };
            cur = marginal_multiply(&cur, &mat, k)?;
        }
        let (local, _) = argmax_first(cur.values());
        let decision = Arm::from_offset(local, &self.dims[ctx.len()..]);
        Ok(Arm::join(ctx, decision.indices()))
    }
}

/// Ensemble sampling as a [`Policy`].
pub struct EnsemblePolicy {
    state: EnsembleState,
    context_dim: usize,
    schedule: FitSchedule,
    sampled: Vec<u64>,
}

impl EnsemblePolicy {
    pub fn new(
        dims: &[usize],
        ranks: &[usize],
        context_dim: usize,
        prior: &EnsemblePrior,
        schedule: FitSchedule,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self> {
        let state = init_ensemble(prior, dims, ranks, rng)?;
        Ok(EnsemblePolicy {
            sampled: vec![0; state.size()],
            state,
            context_dim,
            schedule,
        })
    }

    pub fn state(&self) -> &EnsembleState {
        &self.state
    }

    /// How often each model has been sampled.
    pub fn sample_counts(&self) -> &[u64] {
        &self.sampled
    }
}

impl Policy for EnsemblePolicy {
    fn name(&self) -> &'static str {
        "ensemble"
    }

    fn select(&mut self, context: Option<&[usize]>, rng: &mut ChaCha8Rng) -> Result<(Arm, Phase)> {
        check_context(&self.state.dims, self.context_dim, context)?;
        let m = rng.random_range(0..self.state.size());
        self.sampled[m] += 1;
        let sweeps = if self.state.is_fitted(m) {
            self.schedule.sweeps_per_step
        } else {
            self.schedule.initial_sweeps
        };
        self.state.map_fit(m, sweeps, self.schedule.tolerance)?;
        Ok((self.state.act(m, context)?, Phase::Sample))
    }

    fn observe(&mut self, arm: &Arm, reward: f64, _phase: Phase, rng: &mut ChaCha8Rng) -> Result<()> {
        self.state.perturb_and_record(arm, reward, rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::{synth_env, Environment};
    use crate::tensor::tucker_reconstruct;
    use rand::SeedableRng;

    fn prior(order: usize, m: usize, pert: f64) -> EnsemblePrior {
        EnsemblePrior {
            size: m,
            perturbation_std: pert,
            ..EnsemblePrior::new(order)
        }
    }

    fn random_history(state: &mut EnsembleState, t: usize, rng: &mut ChaCha8Rng) {
        let dims = state.dims.clone();
        for _ in 0..t {
            let arm = Arm::new(dims.iter().map(|&p| rng.random_range(0..p)).collect());
            let y = rng.random_range(-2.0..2.0);
            state.perturb_and_record(&arm, y, rng).unwrap();
        }
    }

    #[test]
    fn init_columns_are_unit_norm_and_core_is_ones() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let st = init_ensemble(&prior(3, 10, 1.0), &[5, 4, 6], &[2, 3, 2], &mut rng).unwrap();
        for m in 0..10 {
            for u in &st.model(m).factors {
                for c in u.column_iter() {
                    assert!((c.norm() - 1.0).abs() <= 1e-12);
                }
            }
            assert!(st.model(m).core.values().iter().all(|&v| v == 1.0));
            assert_eq!(st.anchor(m), st.model(m).factors.as_slice());
        }
    }

    #[test]
    fn degenerate_prior_gives_identical_models() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mean: Vec<Matrix> = [(4, 2), (3, 2)]
            .iter()
            .map(|&(p, r)| Matrix::from_fn(p, r, |i, j| (i + 2 * j + 1) as f64))
            .collect();
        let mut pr = prior(2, 4, 0.0);
        pr.prior_std = vec![0.0, 0.0];
        pr.mean = Some(mean.clone());
        let st = init_ensemble(&pr, &[4, 3], &[2, 2], &mut rng).unwrap();
        for m in 0..4 {
            for (u, mu) in st.model(m).factors.iter().zip(&mean) {
                for (c, cm) in u.column_iter().zip(mu.column_iter()) {
                    assert!((c - cm / cm.norm()).amax() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn same_seed_same_ensemble() {
        let a = init_ensemble(&prior(3, 5, 1.0), &[4, 4, 4], &[2, 2, 2], &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let b = init_ensemble(&prior(3, 5, 1.0), &[4, 4, 4], &[2, 2, 2], &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        for m in 0..5 {
            assert_eq!(a.model(m), b.model(m));
        }
    }

    #[test]
    fn perturbation_is_centered_and_histories_stay_aligned() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut st = init_ensemble(&prior(2, 10_000, 0.5), &[2, 2], &[1, 1], &mut rng).unwrap();
        st.perturb_and_record(&Arm::new(vec![0, 1]), 3.0, &mut rng).unwrap();
        let mean = (0..10_000).map(|m| st.perturbed_rewards(m)[0] - 3.0).sum::<f64>() / 1e4;
        assert!(mean.abs() <= 4.0 * 0.5 / 100.0);
        st.perturb_and_record(&Arm::new(vec![1, 1]), 1.0, &mut rng).unwrap();
        assert!((0..10_000).all(|m| st.perturbed_rewards(m).len() == st.history_len()));

        let mut st = init_ensemble(&prior(2, 3, 0.0), &[2, 2], &[1, 1], &mut rng).unwrap();
        random_history(&mut st, 20, &mut rng);
        for m in 0..3 {
            assert_eq!(st.perturbed_rewards(m), st.shared_rewards());
        }
    }

    #[test]
    fn row_without_data_returns_prior() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let st = init_ensemble(&prior(3, 1, 1.0), &[3, 3, 3], &[2, 2, 2], &mut rng).unwrap();
        let got = als_row_update(st.model(0), &[], &[], &[], 1, 1.0, 0.7, &[0.3, -0.2]).unwrap();
        assert!((got[0] - 0.3).abs() < 1e-15 && (got[1] + 0.2).abs() < 1e-15);
    }

    #[test]
    fn scalar_row_update_by_hand() {
        // order 2, ranks 1: f = s * u * v. One observation y at (0, 0).
        let core = DenseTensor::new(vec![1, 1], vec![2.0]).unwrap();
        let model = TuckerDecomp::new(core, vec![Matrix::from_element(1, 1, 0.5), Matrix::from_element(1, 1, 1.5)]).unwrap();
        let (sigma, sk, mu, y) = (0.5f64, 2.0f64, 0.1f64, 4.0f64);
        let got = als_row_update(&model, &[vec![0, 0]], &[y], &[0], 0, sigma, sk, &[mu]).unwrap();
        let v = 2.0 * 1.5;
        let expect = (v * y / sigma.powi(2) + mu / sk.powi(2)) / (v * v / sigma.powi(2) + 1.0 / sk.powi(2));
        assert!((got[0] - expect).abs() < 1e-12);
    }

    #[test]
    fn row_update_zeroes_the_restricted_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..30 {
            let mut st = init_ensemble(&prior(3, 1, 0.3), &[4, 3, 5], &[2, 2, 2], &mut rng).unwrap();
            random_history(&mut st, 40, &mut rng);
            st.update_core(0).unwrap();
            let k = rng.random_range(0..3);
            let i = rng.random_range(0..st.dims[k]);
            st.update_mode(0, k).unwrap();
            for j in 0..2 {
                let h = 1e-5;
                let base = st.models[0].factors[k][(i, j)];
                st.models[0].factors[k][(i, j)] = base + h;
                let up = st.objective(0);
                st.models[0].factors[k][(i, j)] = base - h;
                let down = st.objective(0);
                st.models[0].factors[k][(i, j)] = base;
                let grad = (up - down) / (2.0 * h);
                assert!(grad.abs() <= 1e-6, "gradient {grad}");
            }
        }
    }

    #[test]
    fn objective_never_increases() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let mut st = init_ensemble(&prior(3, 1, 0.5), &[4, 5, 3], &[2, 2, 2], &mut rng).unwrap();
            random_history(&mut st, 60, &mut rng);
            let mut prev = st.objective(0);
            for _ in 0..5 {
                for k in 0..3 {
                    st.update_mode(0, k).unwrap();
                    let now = st.objective(0);
                    assert!(now <= prev + 1e-10, "{prev} -> {now}");
                    prev = now;
                }
                st.update_core(0).unwrap();
                let now = st.objective(0);
                assert!(now <= prev + 1e-10, "{prev} -> {now}");
                prev = now;
            }
        }
    }

    #[test]
    fn empty_history_leaves_model_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut st = init_ensemble(&prior(3, 2, 1.0), &[3, 3, 3], &[1, 1, 1], &mut rng).unwrap();
        let before = st.model(1).clone();
        assert_eq!(st.map_fit(1, 5, 0.0).unwrap(), None);
        assert_eq!(st.model(1), &before);
        assert!(!st.is_fitted(1));
    }

    #[test]
    fn fixed_point_on_model_generated_data() {
        // Data equal to the model's own predictions, with a prior so weak that
        // the fit is pure least squares at an exact zero-residual optimum.
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut pr = prior(3, 1, 0.0);
        pr.prior_std = vec![1e6; 3];
        let mut st = init_ensemble(&pr, &[4, 4, 4], &[1, 1, 1], &mut rng).unwrap();
        let truth = tucker_reconstruct(st.model(0)).unwrap();
        for off in 0..64 {
            let arm = Arm::from_offset(off, &[4, 4, 4]);
            let y = truth.get(&arm).unwrap();
            st.perturb_and_record(&arm, y, &mut rng).unwrap();
        }
        let before = st.model(0).clone();
        st.map_fit(0, 1, 0.0).unwrap();
        for (a, b) in st.model(0).factors.iter().zip(&before.factors) {
            assert!((a - b).amax() <= 1e-8);
        }
    }

    #[test]
    fn collapse_without_perturbation() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let mut pr = prior(3, 3, 0.0);
        pr.prior_std = vec![0.0; 3];
        pr.mean = Some(vec![Matrix::from_fn(3, 1, |i, _| 1.0 + i as f64); 3]);
        let mut st = init_ensemble(&pr, &[3, 3, 3], &[1, 1, 1], &mut rng).unwrap();
        random_history(&mut st, 15, &mut rng);
        for m in 0..3 {
            st.map_fit(m, 3, 0.0).unwrap();
        }
        assert_eq!(st.model(0), st.model(1));
        assert_eq!(st.model(1), st.model(2));
    }

    #[test]
    fn act_matches_slice_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let st = init_ensemble(&prior(3, 1, 1.0), &[3, 4, 5], &[2, 2, 2], &mut rng).unwrap();
            let rec = tucker_reconstruct(st.model(0)).unwrap();
            let c = rng.random_range(0..3);
            let mut best = (0, 0, f64::NEG_INFINITY);
            for j in 0..4 {
                for k in 0..5 {
                    if rec.at(&[c, j, k]) > best.2 {
                        best = (j, k, rec.at(&[c, j, k]));
                    }
                }
            }
            assert_eq!(st.act(0, Some(&[c])).unwrap().indices(), &[c, best.0, best.1]);
            let global = Environment::new(rec, 0.0, 0, 0).unwrap().oracle(None).unwrap().0;
            assert_eq!(st.act(0, None).unwrap(), global);
        }
    }

    #[test]
    fn model_equal_to_truth_plays_oracle() {
        let env = synth_env(4, 1, 1.0, 0.0, 0, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let mut st = init_ensemble(&prior(3, 1, 0.0), &[4, 4, 4], &[1, 1, 1], &mut rng).unwrap();
        st.models[0] = env.latent().unwrap().clone();
        assert_eq!(st.act(0, None).unwrap(), env.oracle(None).unwrap().0);
    }

    #[test]
    fn models_are_sampled_uniformly() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let mut pol = EnsemblePolicy::new(&[2, 2], &[1, 1], 0, &prior(2, 4, 0.0), FitSchedule::default(), &mut rng).unwrap();
        let n = 100_000u64;
        for _ in 0..n {
            pol.select(None, &mut rng).unwrap();
        }
        let p = 0.25f64;
        let tol = 4.0 * (p * (1.0 - p) / n as f64).sqrt();
        for &c in pol.sample_counts() {
            assert!((c as f64 / n as f64 - p).abs() <= tol);
        }
    }
}
