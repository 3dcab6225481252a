//! Stochastic low-rank tensor bandits.

pub mod completion;
pub mod environment;
pub mod error;
pub mod harness;
pub mod policy;
pub mod rng;
pub mod tensor;

pub use completion::{complete, load_observations, parse_observations, CompletionOptions, Observation};
pub use environment::{load_env, synth_env, synth_tucker_env, Environment, RegretTrace};
pub use error::{Error, Result};
pub use policy::{Phase, Policy};
pub use tensor::{Arm, BlockedLayout, DenseTensor, Matrix, TuckerDecomp};
