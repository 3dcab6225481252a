//! Vectorized UCB: every cell of the arm box is an independent arm.

use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::policy::{check_context, Phase, Policy};
use crate::tensor::{flat_offset, Arm};

/// UCB1 over `n_arms` flat arms.
#[derive(Clone, Debug)]
pub struct UcbState {
    pub counts: Vec<u64>,
    pub means: Vec<f64>,
    pub t: u64,
    pub alpha: f64,
}

impl UcbState {
    pub fn new(n_arms: usize, alpha: f64) -> Self {
        UcbState {
            counts: vec![0; n_arms],
            means: vec![0.0; n_arms],
            t: 0,
            alpha,
        }
    }

    pub fn index(&self, arm: usize) -> f64 {
        let n = self.counts[arm] as f64;
        self.means[arm] + self.alpha * (2.0 * (self.t as f64).ln() / n).sqrt()
    }

    /// Lowest unpulled arm if any, otherwise the first arm with the largest index.
    pub fn next_arm(&self) -> usize {
        if let Some(a) = self.counts.iter().position(|&c| c == 0) {
            return a;
        }
        let mut best = 0;
        let mut best_val = f64::NEG_INFINITY;
        for a in 0..self.counts.len() {
            let v = self.index(a);
            if v > best_val {
                best = a;
                best_val = v;
            }
        }
        best
    }

    pub fn update(&mut self, arm: usize, reward: f64) {
        self.counts[arm] += 1;
        self.means[arm] += (reward - self.means[arm]) / self.counts[arm] as f64;
        self.t += 1;
    }
}

/// Vectorized UCB policy. With context modes, one independent [`UcbState`]
/// is kept per context cell over that cell's decision slice.
pub struct ContextualUcb {
    dims: Vec<usize>,
    context_dim: usize,
    alpha: f64,
    slice: usize,
    states: Vec<Option<UcbState>>,
}

impl ContextualUcb {
    pub fn new(dims: &[usize], context_dim: usize, alpha: f64) -> Self {
        let cells: usize = dims[..context_dim].iter().product();
        ContextualUcb {
            dims: dims.to_vec(),
            context_dim,
            alpha,
            slice: dims[context_dim..].iter().product(),
            states: vec![None; cells],
        }
    }

    fn cell(&self, arm_or_ctx: &[usize]) -> usize {
        let mut c = 0;
        for (&i, &p) in arm_or_ctx.iter().zip(&self.dims[..self.context_dim]) {
            c = c * p + i;
        }
        c
    }

    pub fn state(&self, context: Option<&[usize]>) -> Option<&UcbState> {
        self.states[self.cell(context.unwrap_or(&[]))].as_ref()
    }
}

impl Policy for ContextualUcb {
    fn name(&self) -> &'static str {
        "vectorized_ucb"
    }

    fn select(&mut self, context: Option<&[usize]>, _rng: &mut ChaCha8Rng) -> Result<(Arm, Phase)> {
        check_context(&self.dims, self.context_dim, context)?;
        let ctx = context.unwrap_or(&[]);
        let cell = self.cell(ctx);
        let (slice, alpha) = (self.slice, self.alpha);
        let state = self.states[cell].get_or_insert_with(|| UcbState::new(slice, alpha));
        let local = state.next_arm();
        let decision = Arm::from_offset(local, &self.dims[self.context_dim..]);
        Ok((Arm::join(ctx, decision.indices()), Phase::Index))
    }

    fn observe(&mut self, arm: &Arm, reward: f64, _phase: Phase, _rng: &mut ChaCha8Rng) -> Result<()> {
        let off = flat_offset(arm, &self.dims)?;
        let cell = self.cell(arm.indices());
        let (slice, alpha) = (self.slice, self.alpha);
        let state = self.states[cell].get_or_insert_with(|| UcbState::new(slice, alpha));
        state.update(off % slice, reward);
        Ok(())
    }
}
