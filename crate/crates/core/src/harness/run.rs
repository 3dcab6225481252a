//! Replicated runs and their trace and summary files.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::completion::CompletionOptions;
use crate::environment::{load_contexts, synth_tucker_env, Environment, RegretTrace};
use crate::error::{Error, Result};
use crate::harness::config::{check_ranks, EnvSource, ExperimentConfig, PolicyKind};
use crate::policy::ensemble::FitSchedule;
use crate::policy::{
    ContextualUcb, EliminationConfig, EliminationPolicy, EnsemblePolicy, EnsemblePrior, EpochGreedyConfig,
    EpochGreedyPolicy, OraclePolicy, Phase, Policy,
};
use crate::rng::{derive_seed, stream, Purpose};
use crate::tensor::{Arm, DenseTensor};

pub const TRACE_HEADER: &str = "replication,t,policy,phase,arm,inst_regret,cum_regret";

/// Builds the environment of each replication.
#[derive(Clone, Debug)]
pub enum EnvFactory {
    /// A fresh synthetic truth per replication.
    Synthetic {
        dims: Vec<usize>,
        ranks: Vec<usize>,
        w: f64,
        noise_std: f64,
        context_dim: usize,
        seed: u64,
    },
    /// The same loaded environment for every replication.
    Fixed(Environment),
}

impl EnvFactory {
    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self> {
        match &cfg.source {
            EnvSource::Synthetic { dims, w } => Ok(EnvFactory::Synthetic {
                dims: dims.clone(),
                ranks: cfg.ranks.clone(),
                w: *w,
                noise_std: cfg.noise_std,
                context_dim: cfg.context_dim,
                seed: cfg.seed,
            }),
            EnvSource::File { tensor, contexts } => {
                let truth = DenseTensor::load(tensor).map_err(|e| match e {
                    Error::Io { path, source } => {
                        Error::config("tensor_file", format!("cannot read {}: {source}", path.display()))
                    }
                    other => other,
                })?;
                check_ranks(truth.dims(), &cfg.ranks)?;
                if cfg.context_dim >= truth.order() {
                    return Err(Error::config("context_dim", "must leave a decision mode"));
                }
                let mut env = Environment::new(truth, cfg.noise_std, cfg.context_dim, cfg.seed)?;
                if let Some(path) = contexts {
                    if cfg.context_dim == 0 {
                        return Err(Error::config("context_file", "needs context_dim >= 1"));
                    }
                    let list = load_contexts(path).map_err(|e| match e {
                        Error::Io { path, source } => {
                            Error::config("context_file", format!("cannot read {}: {source}", path.display()))
                        }
                        other => other,
                    })?;
                    if list.iter().any(|c| c.len() != cfg.context_dim) {
                        return Err(Error::config(
                            "context_file",
                            format!("every line needs {} indices", cfg.context_dim),
                        ));
                    }
                    env = env.with_replay(list).map_err(|e| Error::config("context_file", e.to_string()))?;
                }
                Ok(EnvFactory::Fixed(env))
            }
        }
    }

    pub fn build(&self, replication: usize) -> Result<Environment> {
        match self {
            EnvFactory::Synthetic {
                dims,
                ranks,
                w,
                noise_std,
                context_dim,
                seed,
            } => synth_tucker_env(
                dims,
                ranks,
                *w,
                *noise_std,
                *context_dim,
                derive_seed(*seed, replication as u64, Purpose::Truth),
            ),
            EnvFactory::Fixed(env) => Ok(env.clone()),
        }
    }
}

/// The configured policy for one replication.
pub fn build_policy(cfg: &ExperimentConfig, env: &Environment, rng: &mut ChaCha8Rng) -> Result<Box<dyn Policy>> {
    let p = &cfg.params;
    let dims = env.dims();
    let completion = CompletionOptions {
        ranks: cfg.ranks.clone(),
        tolerance: p.completion_tolerance,
        max_iterations: p.completion_max_iterations,
    };
    Ok(match cfg.policy {
        PolicyKind::EpochGreedy => Box::new(EpochGreedyPolicy::new(
            dims,
            env.context_dim(),
            EpochGreedyConfig {
                ranks: cfg.ranks.clone(),
                init_constant: p.init_constant,
                exploit_constant: p.exploit_constant,
                completion,
            },
        )?),
        PolicyKind::Elimination => Box::new(EliminationPolicy::new(
            dims,
            env.context_dim(),
            EliminationConfig {
                horizon: cfg.horizon,
                ranks: cfg.ranks.clone(),
                init_constant: p.init_constant,
                exploration_multiplier: p.exploration_multiplier,
                width_multiplier: p.width_multiplier,
                lambda1: p.lambda1,
                lambda2: p.lambda2,
                delta: p.delta,
                refresh_stride: p.refresh_stride,
                completion,
            },
        )?),
        PolicyKind::Ensemble => Box::new(EnsemblePolicy::new(
            dims,
            &cfg.ranks,
            env.context_dim(),
            &EnsemblePrior {
                mean: None,
                prior_std: vec![p.prior_std; dims.len()],
                reward_std: p.reward_std,
                perturbation_std: p.perturbation_variance.sqrt(),
                size: p.ensemble_size,
            },
            FitSchedule {
                initial_sweeps: p.initial_sweeps,
                sweeps_per_step: p.sweeps_per_step,
                tolerance: 0.0,
            },
            rng,
        )?),
        PolicyKind::VectorizedUcb => Box::new(ContextualUcb::new(dims, env.context_dim(), p.ucb_alpha)),
        PolicyKind::Oracle => Box::new(OraclePolicy::new(env.clone())),
    })
}

/// Everything recorded in one replication.
#[derive(Clone, Debug)]
pub struct ReplicationResult {
    pub replication: usize,
    pub policy: &'static str,
    pub arms: Vec<Arm>,
    pub phases: Vec<Phase>,
    pub trace: RegretTrace,
}

/// Runs `steps` rounds of the select / pull / record / observe loop.
pub fn simulate(
    env: &Environment,
    policy: &mut dyn Policy,
    steps: usize,
    master_seed: u64,
    replication: usize,
    mut policy_rng: ChaCha8Rng,
) -> Result<ReplicationResult> {
    let rep = replication as u64;
    let mut noise_rng = stream(master_seed, rep, Purpose::Noise);
    let mut context_rng = stream(master_seed, rep, Purpose::Context);
    let mut out = ReplicationResult {
        replication,
        policy: policy.name(),
        arms: Vec::with_capacity(steps),
        phases: Vec::with_capacity(steps),
        trace: RegretTrace::new(),
    };
    for t in 0..steps {
        let context = env.context_for_step(t, &mut context_rng)?;
        let (arm, phase) = policy.select(context.as_deref(), &mut policy_rng)?;
        if let Some(c) = &context {
            if !arm.indices().starts_with(c) {
                return Err(Error::Contract(format!("{} ignored context at step {}", policy.name(), t + 1)));
            }
        }
        let reward = env.pull(&arm, &mut noise_rng)?;
        out.trace.record(env, context.as_deref(), &arm)?;
        policy.observe(&arm, reward, phase, &mut policy_rng)?;
        out.arms.push(arm);
        out.phases.push(phase);
    }
    Ok(out)
}

pub fn run_replication(cfg: &ExperimentConfig, factory: &EnvFactory, replication: usize) -> Result<ReplicationResult> {
    let env = factory.build(replication)?;
    let mut rng = stream(cfg.seed, replication as u64, Purpose::Policy);
    let mut policy = build_policy(cfg, &env, &mut rng)?;
    simulate(&env, policy.as_mut(), cfg.horizon, cfg.seed, replication, rng)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub t: usize,
    pub mean: f64,
    pub std: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub policy: String,
    pub horizon: usize,
    pub replications: usize,
    pub seed: u64,
    pub checkpoints: Vec<Checkpoint>,
    pub final_regrets: Vec<f64>,
    pub wall_clock_seconds: f64,
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub results: Vec<ReplicationResult>,
    pub summary: RunSummary,
}

/// Mean and sample standard deviation (0 for a single value).
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Steps written to a checkpointed trace: multiples of `stride` plus the last step.
pub fn checkpoint_steps(horizon: usize, stride: usize) -> Vec<usize> {
    let mut steps: Vec<usize> = (1..=horizon).filter(|t| t % stride == 0).collect();
    if steps.last() != Some(&horizon) {
        steps.push(horizon);
    }
    steps
}

pub fn summarize(results: &[ReplicationResult], cfg: &ExperimentConfig, seconds: f64) -> RunSummary {
    let checkpoints = checkpoint_steps(cfg.horizon, cfg.checkpoint_stride)
        .into_iter()
        .map(|t| {
            let vals: Vec<f64> = results.iter().map(|r| r.trace.cumulative[t - 1]).collect();
            let (mean, std) = mean_std(&vals);
            Checkpoint { t, mean, std }
        })
        .collect();
    RunSummary {
        policy: cfg.policy.as_str().to_string(),
        horizon: cfg.horizon,
        replications: results.len(),
        seed: cfg.seed,
        checkpoints,
        final_regrets: results.iter().map(|r| r.trace.total()).collect(),
        wall_clock_seconds: seconds,
    }
}

/// Runs every replication, in parallel on `threads` workers when given.
/// Results come back ordered by replication whatever the schedule.
pub fn run_experiment(cfg: &ExperimentConfig, threads: Option<usize>) -> Result<RunOutput> {
    let start = Instant::now();
    let factory = EnvFactory::from_config(cfg)?;
    let work = || {
        (0..cfg.replications)
            .into_par_iter()
            .map(|rep| run_replication(cfg, &factory, rep))
            .collect::<Result<Vec<_>>>()
    };
    let results = match threads {
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k.max(1))
            .build()
            .map_err(|e| Error::Numeric(format!("cannot start worker pool: {e}")))?
            .install(work)?,
        None => work()?,
    };
    let summary = summarize(&results, cfg, start.elapsed().as_secs_f64());
    Ok(RunOutput { results, summary })
}

/// Trace CSV text: one row per checkpoint step (or per step with `full`).
pub fn trace_csv(results: &[ReplicationResult], stride: usize, full: bool) -> String {
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    for r in results {
        let n = r.trace.len();
        let steps = if full {
            (1..=n).collect()
        } else {
            checkpoint_steps(n, stride)
        };
        for t in steps {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.replication,
                t,
                r.policy,
                r.phases[t - 1],
                r.arms[t - 1],
                r.trace.instantaneous[t - 1],
                r.trace.cumulative[t - 1]
            );
        }
    }
    out
}

/// Writes `trace.csv` and `summary.json` into `dir`.
pub fn write_outputs(output: &RunOutput, dir: &Path, stride: usize, full: bool) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let trace = dir.join("trace.csv");
    std::fs::write(&trace, trace_csv(&output.results, stride, full)).map_err(|e| Error::io(&trace, e))?;
    let summary = dir.join("summary.json");
    let json = serde_json::to_string_pretty(&output.summary).expect("summary serializes");
    std::fs::write(&summary, json + "\n").map_err(|e| Error::io(&summary, e))?;
    Ok(())
}
