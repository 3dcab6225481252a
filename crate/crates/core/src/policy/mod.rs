//! Decision policies.
//!
//! Every policy is driven through the same loop: the harness passes the
//! realized context (if any) to [`Policy::select`], pulls the returned arm,
//! and feeds the reward back through [`Policy::observe`] together with the
//! phase tag that `select` emitted.

use std::fmt;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::environment::Environment;
use crate::error::{Error, Result};
use crate::tensor::Arm;

pub mod elimination;
pub mod ensemble;
pub mod epoch_greedy;
pub mod ucb;

pub use elimination::{EliminationConfig, EliminationPolicy};
pub use ensemble::{EnsemblePolicy, EnsemblePrior};
pub use epoch_greedy::{EpochGreedyConfig, EpochGreedyPolicy};
pub use ucb::{ContextualUcb, UcbState};

/// What a step was used for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Phase {
    /// Uniform sampling before the first estimate.
    Initialize,
    /// Uniform sampling that feeds later estimates.
    Explore,
    /// Greedy play on the current estimate.
    Exploit,
    /// Confidence-width sampling on the reduced linear problem.
    Commit,
    /// Greedy play on a sampled ensemble member.
    Sample,
    /// Index policy step.
    Index,
    /// Debug oracle step.
    Oracle,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Initialize => "initialize",
            Phase::Explore => "explore",
            Phase::Exploit => "exploit",
            Phase::Commit => "commit",
            Phase::Sample => "sample",
            Phase::Index => "index",
            Phase::Oracle => "oracle",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub trait Policy: Send {
    fn name(&self) -> &'static str;

    /// Chooses the next arm. With a context, the returned arm starts with it.
    fn select(&mut self, context: Option<&[usize]>, rng: &mut ChaCha8Rng) -> Result<(Arm, Phase)>;

    /// Reports the reward of the arm returned by the last `select`.
    fn observe(&mut self, arm: &Arm, reward: f64, phase: Phase, rng: &mut ChaCha8Rng) -> Result<()>;
}

/// Uniform arm over the decision modes, prefixed by the context.
pub(crate) fn uniform_arm(dims: &[usize], context: Option<&[usize]>, rng: &mut ChaCha8Rng) -> Arm {
    let ctx = context.unwrap_or(&[]);
    let decision: Vec<usize> = dims[ctx.len()..]
        .iter()
        .map(|&p| rng.random_range(0..p))
        .collect();
    Arm::join(ctx, &decision)
}

pub(crate) fn check_context(dims: &[usize], context_dim: usize, context: Option<&[usize]>) -> Result<()> {
    let got = context.map_or(0, <[usize]>::len);
    if got != context_dim {
        return Err(Error::Contract(format!(
            "policy expects {context_dim} context coordinates, got {got}"
        )));
    }
    if let Some(c) = context {
        for (&i, &p) in c.iter().zip(dims) {
            if i >= p {
                return Err(Error::Range(format!("context index {} exceeds {p}", i + 1)));
            }
        }
    }
    Ok(())
}

/// Debug policy that always plays the environment's best arm.
pub struct OraclePolicy {
    env: Environment,
}

impl OraclePolicy {
    pub fn new(env: Environment) -> Self {
        OraclePolicy { env }
    }
}

impl Policy for OraclePolicy {
    fn name(&self) -> &'static str {
        "oracle"
    }

    fn select(&mut self, context: Option<&[usize]>, _rng: &mut ChaCha8Rng) -> Result<(Arm, Phase)> {
        Ok((self.env.oracle(context)?.0, Phase::Oracle))
    }

    fn observe(&mut self, _arm: &Arm, _reward: f64, _phase: Phase, _rng: &mut ChaCha8Rng) -> Result<()> {
        Ok(())
    }
}
