//! Tensor elimination.
//!
//! Uniform sampling feeds a completion estimate of the mode subspaces. Each
//! arm is then rotated into the basis `[Û_j, Û_j⊥]`, which turns the problem
//! into a linear bandit whose parameter is nearly zero outside its first `q`
//! coordinates. The remaining budget runs doubling phases of max-width
//! sampling with a split ridge penalty, eliminating arms whose upper
//! confidence bound falls below the best lower bound.
//!
//! The commit phase never forms the `P × P` design matrix. Because the
//! rotated arms are orthonormal, `aᵀ Λ⁻¹ b` has a closed form in the
//! projectors `I - Û_j Û_jᵀ`, and the matrix `M = [aᵀ V⁻¹ b]` over active arms
//! is tracked with rank-one updates. Predictions `aᵀβ̂` are `M` applied to
//! per-arm reward sums.

use nalgebra::{DMatrix, DVector};
use rand_chacha::ChaCha8Rng;

use crate::completion::{complete, CompletionOptions, Observation};
use crate::error::{Error, Result};
use crate::policy::epoch_greedy::{init_length, schedule_scale};
use crate::policy::{check_context, uniform_arm, Phase, Policy};
use crate::tensor::{
    complete_basis, flat_offset, marginal_multiply, matricize, Arm, BlockedLayout, DenseTensor, Matrix,
    TuckerDecomp,
};

#[derive(Clone, Debug)]
pub struct EliminationConfig {
    /// Total horizon `n`.
    pub horizon: usize,
    pub ranks: Vec<usize>,
    /// Scales the initialization length (same formula as epoch-greedy).
    pub init_constant: f64,
    /// Multiplier on the theoretical exploration length.
    pub exploration_multiplier: f64,
    /// Multiplier on the confidence width.
    pub width_multiplier: f64,
    /// Ridge weight on the first `q` rotated coordinates.
    pub lambda1: f64,
    /// Ridge weight on the rest; `None` picks `N / (q ln(1 + N/λ1))` with `N` the commit budget.
    pub lambda2: Option<f64>,
    /// Confidence level; `None` picks `1 / (n P)`.
    pub delta: Option<f64>,
    /// Recompute the active-arm matrix from scratch every this many commit pulls (0 disables).
    pub refresh_stride: usize,
    pub completion: CompletionOptions,
}

impl EliminationConfig {
    pub fn new(horizon: usize, ranks: Vec<usize>) -> Self {
        EliminationConfig {
            horizon,
            completion: CompletionOptions::new(ranks.clone()),
            ranks,
            init_constant: 1.0,
            exploration_multiplier: 0.002,
            width_multiplier: 0.01,
            lambda1: 0.1,
            lambda2: None,
            delta: None,
            refresh_stride: 0,
        }
    }
}

/// Theoretical exploration length scaled by `c0` and clamped to `[1, n - s1 - 1]`:
/// `c0 n^(2/(d+2)) (r^d / prod σ_j) p^((d²+d)/2) ln^(d/2) p`.
pub fn exploration_length(
    n: usize,
    s1: usize,
    p: f64,
    r: f64,
    d: usize,
    sigma_min: &[f64],
    c0: f64,
) -> Result<usize> {
    if let Some(s) = sigma_min.iter().find(|s| !(**s > 0.0)) {
        return Err(Error::Domain(format!("singular values must be positive, got {s}")));
    }
    if n < s1 + 2 {
        return Err(Error::Domain(format!("horizon {n} leaves no room after {s1} initialization steps")));
    }
    let df = d as f64;
    let log_value = c0.ln() + 2.0 / (df + 2.0) * (n as f64).ln() + df * r.ln()
        - sigma_min.iter().map(|s| s.ln()).sum::<f64>()
        + (df * df + df) / 2.0 * p.ln()
        + df / 2.0 * p.ln().ln();
    let upper = n - s1 - 1;
    if log_value >= (upper as f64).ln() {
        return Ok(upper);
    }
    Ok((log_value.exp().ceil() as usize).clamp(1, upper))
}

/// Confidence width `c (2 sqrt(14 ln(2/δ)) + sqrt(λ1) ‖head‖ + sqrt(λ2) ‖tail‖)`.
pub fn xi_width(delta: f64, lambda1: f64, lambda2: f64, norm_head: f64, norm_tail: f64, c: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain(format!("delta must lie in (0, 1), got {delta}")));
    }
    if !(lambda1 > 0.0 && lambda2 > 0.0) {
        return Err(Error::Domain("ridge weights must be positive".into()));
    }
    Ok(c * (2.0 * (14.0 * (2.0 / delta).ln()).sqrt()
        + lambda1.sqrt() * norm_head
        + lambda2.sqrt() * norm_tail))
}

/// Split ridge estimate `(Σ a aᵀ + Λ)⁻¹ Σ y a` with `Λ = diag(λ1 × q, λ2 × (P - q))`.
pub fn ridge_blocked(history: &[(Vec<f64>, f64)], dim: usize, q: usize, lambda1: f64, lambda2: f64) -> Result<Vec<f64>> {
    let mut design = RidgeDesign::new(dim, q, lambda1, lambda2)?;
    for (a, y) in history {
        design.push(a, *y)?;
    }
    design.refresh()?;
    Ok(design.beta())
}

/// Default `λ2 = N / (q ln(1 + N/λ1))`.
pub fn default_lambda2(budget: usize, q: usize, lambda1: f64) -> f64 {
    let n = budget as f64;
    n / (q as f64 * (1.0 + n / lambda1).ln())
}

/// Commit steps `[2^(k-1), min(2^k - 1, budget)]` of phase `k ≥ 1`.
pub fn phase_bounds(k: u32, budget: usize) -> (usize, usize) {
    let start = 1usize << (k - 1);
    let end = ((1usize << k) - 1).min(budget);
    (start, end)
}

/// `Y = X ×_j W_jᵀ` with `W_j = [Û_j, Û_j⊥]`.
pub fn rotate_tensor(x: &DenseTensor, bases: &[Matrix]) -> Result<DenseTensor> {
    let mut y = x.clone();
    for (j, w) in bases.iter().enumerate() {
        y = marginal_multiply(&y, &w.transpose(), j)?;
    }
    Ok(y)
}

/// Rotated arm: the blocked vectorization of `∘_j W_jᵀ e_{i_j}`, so that
/// `⟨rotated arm, vec(Y)⟩ = X[arm]`.
pub fn rotated_action(bases: &[Matrix], layout: &BlockedLayout, arm: &Arm) -> Result<Vec<f64>> {
    arm.check(layout.dims())?;
    let rows: Vec<Vec<f64>> = bases
        .iter()
        .zip(arm.indices())
        .map(|(w, &i)| w.row(i).iter().copied().collect())
        .collect();
    let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
    layout.vectorize(&DenseTensor::outer(&refs))
}

/// Every rotated arm (indexed by canonical offset) and `q`.
pub fn build_rotated_actions(factors: &[Matrix]) -> Result<(Vec<Vec<f64>>, usize)> {
    let dims: Vec<usize> = factors.iter().map(|u| u.nrows()).collect();
    let ranks: Vec<usize> = factors.iter().map(|u| u.ncols()).collect();
    let bases = factors.iter().map(complete_basis).collect::<Result<Vec<_>>>()?;
    let layout = BlockedLayout::new(&dims, &ranks)?;
    let total: usize = dims.iter().product();
    let actions = (0..total)
        .map(|off| rotated_action(&bases, &layout, &Arm::from_offset(off, &dims)))
        .collect::<Result<Vec<_>>>()?;
    Ok((actions, layout.head_len()))
}

/// Dense split-ridge design: `V = Λ + Σ a aᵀ` with its inverse kept by
/// rank-one updates.
#[derive(Clone, Debug)]
pub struct RidgeDesign {
    q: usize,
    lambda1: f64,
    lambda2: f64,
    gram: Matrix,
    inverse: Matrix,
    moment: DVector<f64>,
}

impl RidgeDesign {
    pub fn new(dim: usize, q: usize, lambda1: f64, lambda2: f64) -> Result<Self> {
        if q > dim {
            return Err(Error::Shape(format!("head length {q} exceeds dimension {dim}")));
        }
        if !(lambda1 > 0.0 && lambda2 > 0.0) {
            return Err(Error::Domain("ridge weights must be positive".into()));
        }
        let diag = DVector::from_fn(dim, |i, _| if i < q { lambda1 } else { lambda2 });
        Ok(RidgeDesign {
            q,
            lambda1,
            lambda2,
            gram: Matrix::from_diagonal(&diag),
            inverse: Matrix::from_diagonal(&diag.map(|v| 1.0 / v)),
            moment: DVector::zeros(dim),
        })
    }

    pub fn dim(&self) -> usize {
        self.moment.len()
    }

    pub fn head_len(&self) -> usize {
        self.q
    }

    pub fn ridge(&self) -> (f64, f64) {
        (self.lambda1, self.lambda2)
    }

    pub fn gram(&self) -> &Matrix {
        &self.gram
    }

    pub fn inverse(&self) -> &Matrix {
        &self.inverse
    }

    pub fn push(&mut self, a: &[f64], y: f64) -> Result<()> {
        if a.len() != self.dim() {
            return Err(Error::Shape(format!("action of length {} for dimension {}", a.len(), self.dim())));
        }
        let a = DVector::from_column_slice(a);
        self.gram += &a * a.transpose();
        self.moment += &a * y;
        let va = &self.inverse * &a;
        let denom = 1.0 + a.dot(&va);
        self.inverse -= &va * va.transpose() / denom;
        Ok(())
    }

    /// Replaces the running inverse by a fresh factorization of `V`.
    pub fn refresh(&mut self) -> Result<()> {
        self.inverse = self
            .gram
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Numeric("design matrix lost positive definiteness".into()))?
            .inverse();
        Ok(())
    }

    pub fn beta(&self) -> Vec<f64> {
        (&self.inverse * &self.moment).iter().copied().collect()
    }

    /// `sqrt(aᵀ V⁻¹ a)`.
    pub fn width(&self, a: &[f64]) -> f64 {
        let a = DVector::from_column_slice(a);
        a.dot(&(&self.inverse * &a)).max(0.0).sqrt()
    }
}

/// Indices kept by the elimination rule: `a` survives when
/// `pred_a + w_a ξ ≥ max_b (pred_b - w_b ξ)`. The arm with the largest upper
/// bound is always kept.
pub fn eliminate(preds: &[f64], widths: &[f64], xi: f64) -> Vec<usize> {
    let ucb: Vec<f64> = preds.iter().zip(widths).map(|(p, w)| p + w * xi).collect();
    let best_lcb = preds
        .iter()
        .zip(widths)
        .map(|(p, w)| p - w * xi)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut top = 0;
    for (i, &u) in ucb.iter().enumerate() {
        if u > ucb[top] {
            top = i;
        }
    }
    (0..preds.len()).filter(|&i| ucb[i] >= best_lcb || i == top).collect()
}

/// `aᵀ V⁻¹ b` among active arms during one phase, with `V = Λ + Σ a aᵀ`.
#[derive(Clone, Debug)]
struct ActiveDesign {
    /// Row-major `|A| × |A|`.
    m: Vec<f64>,
    n: usize,
}

impl ActiveDesign {
    /// `M0[a,b] = δ_ab / λ2 + (1/λ1 - 1/λ2)(δ_ab - prod_j P_j[a_j, b_j])`
    /// where `P_j = I - Û_j Û_jᵀ` and the product is the tail part of `⟨a, b⟩`.
    fn initial(arms: &[Vec<usize>], projectors: &[Matrix], lambda1: f64, lambda2: f64) -> Self {
        let n = arms.len();
        let mut m = vec![0.0; n * n];
        let (inv1, inv2) = (1.0 / lambda1, 1.0 / lambda2);
        for a in 0..n {
            for b in a..n {
                let mut tail = 1.0;
                for (j, pj) in projectors.iter().enumerate() {
                    tail *= pj[(arms[a][j], arms[b][j])];
                }
                let delta = if a == b { 1.0 } else { 0.0 };
                let v = delta * inv2 + (inv1 - inv2) * (delta - tail);
                m[a * n + b] = v;
                m[b * n + a] = v;
            }
        }
        ActiveDesign { m, n }
    }

    fn at(&self, a: usize, b: usize) -> f64 {
        self.m[a * self.n + b]
    }

    /// Sherman-Morrison update for one more pull of active arm `j`.
    fn pull(&mut self, j: usize) {
        let n = self.n;
        let col: Vec<f64> = (0..n).map(|a| self.m[a * n + j]).collect();
        let scale = 1.0 / (1.0 + col[j]);
        for (a, &ca) in col.iter().enumerate() {
            let f = ca * scale;
            let row = &mut self.m[a * n..(a + 1) * n];
            for (x, &cb) in row.iter_mut().zip(&col) {
                *x -= f * cb;
            }
        }
    }

    /// Woodbury recomputation from `M0` and pull counts.
    fn recompute(initial: &ActiveDesign, counts: &[u32]) -> Result<ActiveDesign> {
        let n = initial.n;
        let pulled: Vec<usize> = (0..n).filter(|&a| counts[a] > 0).collect();
        if pulled.is_empty() {
            return Ok(initial.clone());
        }
        let s = pulled.len();
        let b = DMatrix::from_fn(n, s, |a, k| initial.at(a, pulled[k]));
        let mut inner = DMatrix::from_fn(s, s, |k, l| initial.at(pulled[k], pulled[l]));
        for (k, &a) in pulled.iter().enumerate() {
            inner[(k, k)] += 1.0 / counts[a] as f64;
        }
        let solved = inner
            .cholesky()
            .ok_or_else(|| Error::Numeric("phase design lost positive definiteness".into()))?
            .solve(&b.transpose());
        let correction = &b * solved;
        let mut m = initial.m.clone();
        for a in 0..n {
            for c in 0..n {
                m[a * n + c] -= correction[(a, c)];
            }
        }
        Ok(ActiveDesign { m, n })
    }
}

/// Commit-phase bookkeeping.
#[derive(Clone, Debug)]
struct CommitState {
    projectors: Vec<Matrix>,
    lambda1: f64,
    lambda2: f64,
    xi: f64,
    budget: usize,
    /// Canonical offsets of active arms, increasing.
    active: Vec<usize>,
    active_arms: Vec<Vec<usize>>,
    design: ActiveDesign,
    sums: Vec<f64>,
    counts: Vec<u32>,
    phase: u32,
    /// Commit steps completed.
    done: usize,
    since_refresh: usize,
}

impl CommitState {
    fn start_phase(&mut self) {
        self.design = ActiveDesign::initial(&self.active_arms, &self.projectors, self.lambda1, self.lambda2);
        self.sums = vec![0.0; self.active.len()];
        self.counts = vec![0; self.active.len()];
        self.since_refresh = 0;
    }

    fn predictions(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.active.len();
        let preds = (0..n)
            .map(|a| (0..n).map(|b| self.design.at(a, b) * self.sums[b]).sum())
            .collect();
        let widths = (0..n).map(|a| self.design.at(a, a).max(0.0).sqrt()).collect();
        (preds, widths)
    }

    fn finish_phase(&mut self) {
        let (preds, widths) = self.predictions();
        let keep = eliminate(&preds, &widths, self.xi);
        self.active = keep.iter().map(|&i| self.active[i]).collect();
        self.active_arms = keep.iter().map(|&i| self.active_arms[i].clone()).collect();
    }
}

/// Quantities fixed when the commit phase begins.
#[derive(Clone, Debug)]
pub struct CommitSetup {
    pub factors: Vec<Matrix>,
    pub head_len: usize,
    pub budget: usize,
    pub lambda1: f64,
    pub lambda2: f64,
    pub delta: f64,
    pub xi: f64,
}

pub struct EliminationPolicy {
    dims: Vec<usize>,
    config: EliminationConfig,
    p_eff: f64,
    r_eff: f64,
    s1: usize,
    n1: Option<usize>,
    sigma_hat: Option<Vec<f64>>,
    steps: usize,
    history: Vec<Observation>,
    setup: Option<CommitSetup>,
    commit: Option<CommitState>,
    eliminated: Vec<usize>,
}

impl EliminationPolicy {
    pub fn new(dims: &[usize], context_dim: usize, config: EliminationConfig) -> Result<Self> {
        if context_dim > 0 {
            return Err(Error::Contract("elimination does not support context modes".into()));
        }
        if config.ranks.len() != dims.len() || config.ranks.iter().zip(dims).any(|(&r, &p)| r == 0 || r > p) {
            return Err(Error::Shape(format!("ranks {:?} invalid for dims {dims:?}", config.ranks)));
        }
        if !(config.init_constant > 0.0 && config.exploration_multiplier > 0.0 && config.width_multiplier > 0.0) {
            return Err(Error::Domain("elimination multipliers must be positive".into()));
        }
        if !(config.lambda1 > 0.0) || config.lambda2.is_some_and(|l| !(l > 0.0)) {
            return Err(Error::Domain("ridge weights must be positive".into()));
        }
        if let Some(d) = config.delta {
            if !(d > 0.0 && d < 1.0) {
                return Err(Error::Domain(format!("delta must lie in (0, 1), got {d}")));
            }
        }
        let (p_eff, r_eff) = schedule_scale(dims, &config.ranks);
        let s1 = init_length(config.init_constant, p_eff, r_eff, dims.len());
        if config.horizon < s1 + 2 {
            return Err(Error::Domain(format!(
                "horizon {} is too short for {s1} initialization steps plus exploration and commit",
                config.horizon
            )));
        }
        Ok(EliminationPolicy {
            dims: dims.to_vec(),
            config,
            p_eff,
            r_eff,
            s1,
            n1: None,
            sigma_hat: None,
            steps: 0,
            history: Vec::new(),
            setup: None,
            commit: None,
            eliminated: Vec::new(),
        })
    }

    pub fn init_len(&self) -> usize {
        self.s1
    }

    /// Exploration length, known once initialization is over.
    pub fn explore_len(&self) -> Option<usize> {
        self.n1
    }

    /// Smallest retained singular value per mode of the first estimate.
    pub fn sigma_hat(&self) -> Option<&[f64]> {
        self.sigma_hat.as_deref()
    }

    pub fn setup(&self) -> Option<&CommitSetup> {
        self.setup.as_ref()
    }

    /// Current commit phase index (1-based).
    pub fn phase_index(&self) -> Option<u32> {
        self.commit.as_ref().map(|c| c.phase)
    }

    /// Canonical offsets of the active arms (all arms before the commit phase).
    pub fn active_offsets(&self) -> Vec<usize> {
        match &self.commit {
            Some(c) => c.active.clone(),
            None => (0..self.dims.iter().product()).collect(),
        }
    }

    /// Offsets removed so far, in removal order.
    pub fn eliminated(&self) -> &[usize] {
        &self.eliminated
    }

    fn finish_initialization(&mut self) -> Result<()> {
        let est = complete(&self.history, &self.dims, &self.config.completion)?;
        let sigma = smallest_singular_values(&est)?;
        let floored: Vec<f64> = sigma.iter().map(|&s| s.max(f64::MIN_POSITIVE)).collect();
        self.n1 = Some(exploration_length(
            self.config.horizon,
            self.s1,
            self.p_eff,
            self.r_eff,
            self.dims.len(),
            &floored,
            self.config.exploration_multiplier,
        )?);
        self.sigma_hat = Some(sigma);
        Ok(())
    }

    fn start_commit(&mut self) -> Result<()> {
        let est = complete(&self.history, &self.dims, &self.config.completion)?;
        let layout = BlockedLayout::new(&self.dims, &self.config.ranks)?;
        let q = layout.head_len();
        let total = layout.len();
        let budget = self.config.horizon - self.steps;
        let lambda1 = self.config.lambda1;
        let lambda2 = self
            .config
            .lambda2
            .unwrap_or_else(|| default_lambda2(budget, q.max(1), lambda1));
        let delta = self
            .config
            .delta
            .unwrap_or(1.0 / (self.config.horizon as f64 * total as f64));
        // Rotating the estimate by its own factors leaves only the core in the head.
        let head_norm = est.core.values().iter().map(|v| v * v).sum::<f64>().sqrt();
        let xi = xi_width(delta, lambda1, lambda2, head_norm, 0.0, self.config.width_multiplier)?;
        let projectors: Vec<Matrix> = est
            .factors
            .iter()
            .map(|u| Matrix::identity(u.nrows(), u.nrows()) - u * u.transpose())
            .collect();
        let active: Vec<usize> = (0..total).collect();
        let active_arms: Vec<Vec<usize>> = active
            .iter()
            .map(|&off| Arm::from_offset(off, &self.dims).indices().to_vec())
            .collect();
        let mut state = CommitState {
            projectors,
            lambda1,
            lambda2,
            xi,
            budget,
            active,
            active_arms,
            design: ActiveDesign { m: Vec::new(), n: 0 },
            sums: Vec::new(),
            counts: Vec::new(),
            phase: 1,
            done: 0,
            since_refresh: 0,
        };
        state.start_phase();
        self.commit = Some(state);
        self.setup = Some(CommitSetup {
            factors: est.factors,
            head_len: q,
            budget,
            lambda1,
            lambda2,
            delta,
            xi,
        });
        Ok(())
    }

    fn commit_observe(&mut self, arm: &Arm, reward: f64) -> Result<()> {
        let off = flat_offset(arm, &self.dims)?;
        let refresh_stride = self.config.refresh_stride;
        let c = self.commit.as_mut().expect("commit state exists in the commit phase");
        let j = c
            .active
            .binary_search(&off)
            .map_err(|_| Error::Contract(format!("arm {arm} is not active")))?;
        c.design.pull(j);
        c.sums[j] += reward;
        c.counts[j] += 1;
        c.done += 1;
        c.since_refresh += 1;
        if refresh_stride > 0 && c.since_refresh >= refresh_stride {
            let init = ActiveDesign::initial(&c.active_arms, &c.projectors, c.lambda1, c.lambda2);
            c.design = ActiveDesign::recompute(&init, &c.counts)?;
            c.since_refresh = 0;
        }
        let (_, end) = phase_bounds(c.phase, c.budget);
        if c.done == end && c.done < c.budget {
            let before = c.active.clone();
            c.finish_phase();
            let kept = &c.active;
            self.eliminated
                .extend(before.iter().filter(|o| kept.binary_search(o).is_err()));
            c.phase += 1;
            c.start_phase();
        }
        Ok(())
    }
}

/// `r_j`-th singular value of each mode unfolding of the estimate.
///
/// With orthonormal factors these are the singular values of the core's unfoldings.
pub fn smallest_singular_values(est: &TuckerDecomp) -> Result<Vec<f64>> {
    (0..est.core.order())
        .map(|j| {
            let m = matricize(&est.core, j)?;
            let mut sv: Vec<f64> = m.singular_values().iter().copied().collect();
            sv.sort_by(|a, b| b.total_cmp(a));
            Ok(sv.get(est.ranks()[j] - 1).copied().unwrap_or(0.0))
        })
        .collect()
}

impl Policy for EliminationPolicy {
    fn name(&self) -> &'static str {
        "elimination"
    }

    fn select(&mut self, context: Option<&[usize]>, rng: &mut ChaCha8Rng) -> Result<(Arm, Phase)> {
        check_context(&self.dims, 0, context)?;
        if self.steps < self.s1 {
            return Ok((uniform_arm(&self.dims, None, rng), Phase::Initialize));
        }
        let n1 = self.n1.expect("exploration length is set after initialization");
        if self.steps < self.s1 + n1 {
            return Ok((uniform_arm(&self.dims, None, rng), Phase::Explore));
        }
        let c = self.commit.as_ref().expect("commit state exists in the commit phase");
        let mut best = 0;
        for a in 1..c.active.len() {
            if c.design.at(a, a) > c.design.at(best, best) {
                best = a;
            }
        }
        Ok((Arm::from_offset(c.active[best], &self.dims), Phase::Commit))
    }

    fn observe(&mut self, arm: &Arm, reward: f64, phase: Phase, _rng: &mut ChaCha8Rng) -> Result<()> {
        match phase {
            Phase::Initialize | Phase::Explore => {
                arm.check(&self.dims)?;
                self.history.push(Observation::new(arm.clone(), reward));
                self.steps += 1;
                if self.steps == self.s1 {
                    self.finish_initialization()?;
                }
                if self.n1.is_some_and(|n1| self.steps == self.s1 + n1) {
                    self.start_commit()?;
                }
                Ok(())
            }
            Phase::Commit => {
                self.commit_observe(arm, reward)?;
                self.steps += 1;
                Ok(())
            }
            other => Err(Error::Contract(format!("elimination cannot observe a {other} step"))),
        }
    }
}
