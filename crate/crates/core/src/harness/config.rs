//! Experiment configuration files.
//!
//! Flat `key = value` lines; `#` starts a comment. List values are comma
//! separated. Unknown keys are rejected with the closest known key as a hint.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};

/// Every accepted key. `n` is an alias of `horizon`.
pub const KNOWN_KEYS: &[&str] = &[
    "p",
    "order",
    "dims",
    "r",
    "ranks",
    "w",
    "noise_std",
    "context_dim",
    "seed",
    "horizon",
    "n",
    "replications",
    "tensor_file",
    "context_file",
    "policy",
    "output",
    "checkpoint_stride",
    "init_constant",
    "exploit_constant",
    "exploration_multiplier",
    "width_multiplier",
    "lambda1",
    "lambda2",
    "delta",
    "refresh_stride",
    "ensemble_size",
    "perturbation_variance",
    "prior_std",
    "reward_std",
    "initial_sweeps",
    "sweeps_per_step",
    "ucb_alpha",
    "completion_tolerance",
    "completion_max_iterations",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PolicyKind {
    EpochGreedy,
    Elimination,
    Ensemble,
    VectorizedUcb,
    Oracle,
}

impl PolicyKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PolicyKind::EpochGreedy => "epoch_greedy",
            PolicyKind::Elimination => "elimination",
            PolicyKind::Ensemble => "ensemble",
            PolicyKind::VectorizedUcb => "vectorized_ucb",
            PolicyKind::Oracle => "oracle",
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PolicyKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Ok(match s {
            "epoch_greedy" => PolicyKind::EpochGreedy,
            "elimination" => PolicyKind::Elimination,
            "ensemble" => PolicyKind::Ensemble,
            "vectorized_ucb" => PolicyKind::VectorizedUcb,
            "oracle" => PolicyKind::Oracle,
            _ => {
                return Err(format!(
                    "unknown policy `{s}` (expected epoch_greedy, elimination, ensemble, vectorized_ucb or oracle)"
                ))
            }
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum EnvSource {
    /// Synthetic Tucker tensor with diagonal core of strength `w`.
    Synthetic { dims: Vec<usize>, w: f64 },
    /// Reward tensor read from a file, optionally with replayed contexts.
    File {
        tensor: PathBuf,
        contexts: Option<PathBuf>,
    },
}

/// Policy hyperparameters. Each policy reads the fields it uses.
#[derive(Clone, Debug, PartialEq)]
pub struct PolicyParams {
    pub init_constant: f64,
    pub exploit_constant: f64,
    pub exploration_multiplier: f64,
    pub width_multiplier: f64,
    pub lambda1: f64,
    pub lambda2: Option<f64>,
    pub delta: Option<f64>,
    pub refresh_stride: usize,
    pub ensemble_size: usize,
    pub perturbation_variance: f64,
    pub prior_std: f64,
    pub reward_std: f64,
    pub initial_sweeps: usize,
    pub sweeps_per_step: usize,
    pub ucb_alpha: f64,
    pub completion_tolerance: f64,
    pub completion_max_iterations: usize,
}

impl Default for PolicyParams {
    fn default() -> Self {
        PolicyParams {
            init_constant: 1.0,
            exploit_constant: 10.0,
            exploration_multiplier: 0.002,
            width_multiplier: 0.01,
            lambda1: 0.1,
            lambda2: None,
            delta: None,
            refresh_stride: 0,
            ensemble_size: 100,
            perturbation_variance: 1.0,
            prior_std: 1.0,
            reward_std: 1.0,
            initial_sweeps: 5,
            sweeps_per_step: 1,
            ucb_alpha: 1.0,
            completion_tolerance: 1e-6,
            completion_max_iterations: 50,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub source: EnvSource,
    pub ranks: Vec<usize>,
    pub noise_std: f64,
    pub context_dim: usize,
    pub seed: u64,
    pub horizon: usize,
    pub replications: usize,
    pub policy: PolicyKind,
    pub params: PolicyParams,
    pub output: Option<PathBuf>,
    pub checkpoint_stride: usize,
}

/// Raw `key -> value` pairs.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConfigMap {
    entries: BTreeMap<String, String>,
    base_dir: Option<PathBuf>,
}

impl ConfigMap {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(n + 1, format!("expected `key = value`, got `{line}`")))?;
            let key = canonical_key(key.trim())?;
            let value = value.trim();
            if value.is_empty() {
                return Err(Error::config(key, "missing value"));
            }
            if entries.insert(key.clone(), value.to_string()).is_some() {
                return Err(Error::config(key, format!("given twice (line {})", n + 1)));
            }
        }
        Ok(ConfigMap {
            entries,
            base_dir: None,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config("config", format!("cannot read {}: {e}", path.display())))?;
        let mut map = Self::parse(&text).map_err(|e| e.with_path(path))?;
        map.base_dir = path.parent().map(Path::to_path_buf);
        Ok(map)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    /// Sets a key after the same validation as in a file.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = canonical_key(key)?;
        self.entries.insert(key, value.trim().to_string());
        Ok(())
    }

    pub fn remove(&mut self, key: &str) -> Option<String> {
        self.entries.remove(key)
    }

    fn resolve(&self, p: &str) -> PathBuf {
        let path = PathBuf::from(p);
        match &self.base_dir {
            Some(dir) if path.is_relative() => dir.join(path),
            _ => path,
        }
    }

    fn parsed<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: fmt::Display,
    {
        self.get(key)
            .map(|v| v.parse::<T>().map_err(|e| Error::config(key, format!("`{v}`: {e}"))))
            .transpose()
    }

    fn list(&self, key: &str) -> Result<Option<Vec<usize>>> {
        self.get(key)
            .map(|v| {
                v.split(',')
                    .map(|tok| {
                        tok.trim()
                            .parse::<usize>()
                            .map_err(|e| Error::config(key, format!("`{}`: {e}", tok.trim())))
                    })
                    .collect()
            })
            .transpose()
    }
}

/// Maps aliases to their canonical key and rejects unknown keys.
pub fn canonical_key(key: &str) -> Result<String> {
    if key == "n" {
        return Ok("horizon".into());
    }
    if KNOWN_KEYS.contains(&key) {
        return Ok(key.to_string());
    }
    let hint = KNOWN_KEYS
        .iter()
        .map(|k| (strsim::jaro_winkler(key, k), k))
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .filter(|(score, _)| *score >= 0.8)
        .map(|(_, k)| format!("; did you mean `{k}`?"))
        .unwrap_or_default();
    Err(Error::config(key, format!("unknown key{hint}")))
}

fn positive(key: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::config(key, format!("must be positive, got {v}")))
    }
}

fn nonnegative(key: &str, v: f64) -> Result<f64> {
    if v >= 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::config(key, format!("must be nonnegative, got {v}")))
    }
}

fn at_least_one(key: &str, v: usize) -> Result<usize> {
    if v >= 1 {
        Ok(v)
    } else {
        Err(Error::config(key, "must be at least 1"))
    }
}

impl ExperimentConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_map(&ConfigMap::load(path)?)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::from_map(&ConfigMap::parse(text)?)
    }

    pub fn from_map(map: &ConfigMap) -> Result<Self> {
        let tensor = map.get("tensor_file").map(|p| map.resolve(p));
        let contexts = map.get("context_file").map(|p| map.resolve(p));
        let order: Option<usize> = map.parsed("order")?;
        let source = match tensor {
            Some(tensor) => {
                for key in ["p", "dims", "w", "order"] {
                    if map.get(key).is_some() {
                        return Err(Error::config(key, "not used together with tensor_file"));
                    }
                }
                EnvSource::File { tensor, contexts }
            }
            None => {
                if contexts.is_some() {
                    return Err(Error::config("context_file", "needs tensor_file"));
                }
                let dims = match (map.parsed::<usize>("p")?, map.list("dims")?) {
                    (Some(_), Some(_)) => return Err(Error::config("dims", "give either p or dims")),
                    (Some(p), None) => vec![p; order.unwrap_or(3)],
                    (None, Some(d)) => {
                        if order.is_some_and(|o| o != d.len()) {
                            return Err(Error::config("order", "disagrees with dims"));
                        }
                        d
                    }
                    (None, None) => return Err(Error::config("p", "missing (or give dims or tensor_file)")),
                };
                if dims.is_empty() || dims.contains(&0) {
                    return Err(Error::config("dims", "every dimension must be at least 1"));
                }
                let w = positive("w", map.parsed("w")?.ok_or_else(|| Error::config("w", "missing"))?)?;
                EnvSource::Synthetic { dims, w }
            }
        };
        let ranks = match (map.parsed::<usize>("r")?, map.list("ranks")?) {
            (Some(_), Some(_)) => return Err(Error::config("ranks", "give either r or ranks")),
            (Some(r), None) => match &source {
                EnvSource::Synthetic { dims, .. } => vec![r; dims.len()],
                EnvSource::File { .. } => vec![r; order.unwrap_or(3)],
            },
            (None, Some(rs)) => rs,
            (None, None) => return Err(Error::config("r", "missing (or give ranks)")),
        };
        if let EnvSource::Synthetic { dims, .. } = &source {
            check_ranks(dims, &ranks)?;
        }
        let horizon = at_least_one("horizon", map.parsed("horizon")?.ok_or_else(|| Error::config("horizon", "missing"))?)?;
        let policy: PolicyKind = map.parsed("policy")?.ok_or_else(|| Error::config("policy", "missing"))?;
        let context_dim = map.parsed("context_dim")?.unwrap_or(0);
        if context_dim >= ranks.len() {
            return Err(Error::config("context_dim", format!("must leave a decision mode (order is {})", ranks.len())));
        }
        if policy == PolicyKind::Elimination && context_dim > 0 {
            return Err(Error::config("policy", "elimination does not support context modes"));
        }
        let d = PolicyParams::default();
        let params = PolicyParams {
            init_constant: positive("init_constant", map.parsed("init_constant")?.unwrap_or(d.init_constant))?,
            exploit_constant: positive("exploit_constant", map.parsed("exploit_constant")?.unwrap_or(d.exploit_constant))?,
            exploration_multiplier: positive(
                "exploration_multiplier",
                map.parsed("exploration_multiplier")?.unwrap_or(d.exploration_multiplier),
            )?,
            width_multiplier: positive("width_multiplier", map.parsed("width_multiplier")?.unwrap_or(d.width_multiplier))?,
            lambda1: positive("lambda1", map.parsed("lambda1")?.unwrap_or(d.lambda1))?,
            lambda2: map.parsed("lambda2")?.map(|v| positive("lambda2", v)).transpose()?,
            delta: match map.parsed::<f64>("delta")? {
                Some(v) if !(v > 0.0 && v < 1.0) => return Err(Error::config("delta", "must lie in (0, 1)")),
                other => other,
            },
            refresh_stride: map.parsed("refresh_stride")?.unwrap_or(d.refresh_stride),
            ensemble_size: at_least_one("ensemble_size", map.parsed("ensemble_size")?.unwrap_or(d.ensemble_size))?,
            perturbation_variance: nonnegative(
                "perturbation_variance",
                map.parsed("perturbation_variance")?.unwrap_or(d.perturbation_variance),
            )?,
            prior_std: nonnegative("prior_std", map.parsed("prior_std")?.unwrap_or(d.prior_std))?,
            reward_std: positive("reward_std", map.parsed("reward_std")?.unwrap_or(d.reward_std))?,
            initial_sweeps: map.parsed("initial_sweeps")?.unwrap_or(d.initial_sweeps),
            sweeps_per_step: map.parsed("sweeps_per_step")?.unwrap_or(d.sweeps_per_step),
            ucb_alpha: nonnegative("ucb_alpha", map.parsed("ucb_alpha")?.unwrap_or(d.ucb_alpha))?,
            completion_tolerance: positive(
                "completion_tolerance",
                map.parsed("completion_tolerance")?.unwrap_or(d.completion_tolerance),
            )?,
            completion_max_iterations: map.parsed("completion_max_iterations")?.unwrap_or(d.completion_max_iterations),
        };
        Ok(ExperimentConfig {
            source,
            ranks,
            noise_std: nonnegative("noise_std", map.parsed("noise_std")?.unwrap_or(1.0))?,
            context_dim,
            seed: map.parsed("seed")?.unwrap_or(0),
            horizon,
            replications: at_least_one("replications", map.parsed("replications")?.unwrap_or(1))?,
            policy,
            params,
            output: map.get("output").map(|p| map.resolve(p)),
            checkpoint_stride: at_least_one("checkpoint_stride", map.parsed("checkpoint_stride")?.unwrap_or(10))?,
        })
    }
}

/// Ranks must match the order and lie in `[1, p_j]`.
pub fn check_ranks(dims: &[usize], ranks: &[usize]) -> Result<()> {
    if ranks.len() != dims.len() {
        return Err(Error::config(
            "ranks",
            format!("{} ranks for an order-{} tensor", ranks.len(), dims.len()),
        ));
    }
    for (j, (&r, &p)) in ranks.iter().zip(dims).enumerate() {
        if r == 0 || r > p {
            return Err(Error::config("ranks", format!("rank {r} on mode {} must lie in [1, {p}]", j + 1)));
        }
    }
    Ok(())
}
