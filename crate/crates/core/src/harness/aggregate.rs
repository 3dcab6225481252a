//! Cross-run comparison of trace files.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::harness::run::{mean_std, Checkpoint, TRACE_HEADER};

/// Cumulative regret curves of one policy in one run directory.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceSet {
    pub label: String,
    /// `replication -> [(t, cum_regret)]` in file order.
    pub curves: BTreeMap<usize, Vec<(usize, f64)>>,
}

impl TraceSet {
    pub fn horizon(&self) -> usize {
        self.curves
            .values()
            .filter_map(|c| c.last().map(|&(t, _)| t))
            .max()
            .unwrap_or(0)
    }

    pub fn final_regrets(&self) -> Vec<f64> {
        self.curves.values().filter_map(|c| c.last().map(|&(_, v)| v)).collect()
    }

    /// Mean and standard deviation at every step present in all replications.
    pub fn checkpoints(&self) -> Vec<Checkpoint> {
        let mut per_t: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
        for c in self.curves.values() {
            for &(t, v) in c {
                per_t.entry(t).or_default().push(v);
            }
        }
        per_t
            .into_iter()
            .filter(|(_, v)| v.len() == self.curves.len())
            .map(|(t, v)| {
                let (mean, std) = mean_std(&v);
                Checkpoint { t, mean, std }
            })
            .collect()
    }
}

/// Parses a trace CSV, one [`TraceSet`] per policy, labelled `prefix:policy`.
pub fn parse_traces(text: &str, prefix: &str) -> Result<Vec<TraceSet>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == TRACE_HEADER => {}
        _ => return Err(Error::parse(1, format!("expected header `{TRACE_HEADER}`"))),
    }
    let mut sets: BTreeMap<String, BTreeMap<usize, Vec<(usize, f64)>>> = BTreeMap::new();
    for (n, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            return Err(Error::parse(n + 1, format!("expected 7 fields, got {}", fields.len())));
        }
        let bad = |what: &str| Error::parse(n + 1, format!("bad {what}"));
        let rep: usize = fields[0].parse().map_err(|_| bad("replication"))?;
        let t: usize = fields[1].parse().map_err(|_| bad("step"))?;
        let cum: f64 = fields[6].parse().map_err(|_| bad("cum_regret"))?;
        sets.entry(fields[2].to_string()).or_default().entry(rep).or_default().push((t, cum));
    }
    Ok(sets
        .into_iter()
        .map(|(policy, curves)| TraceSet {
            label: format!("{prefix}:{policy}"),
            curves,
        })
        .collect())
}

/// Reads `<dir>/trace.csv`.
pub fn load_trace_dir(dir: &Path) -> Result<Vec<TraceSet>> {
    let path = dir.join("trace.csv");
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    parse_traces(&text, &dir.display().to_string()).map_err(|e| e.with_path(&path))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Welch {
    pub t: f64,
    pub df: f64,
    pub p_value: f64,
}

/// Welch two-sample t-test of `mean(a) - mean(b)`, two-sided.
pub fn welch_t(a: &[f64], b: &[f64]) -> Result<Welch> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::InsufficientData("Welch test needs two values per group".into()));
    }
    let (ma, sa) = mean_std(a);
    let (mb, sb) = mean_std(b);
    let (va, vb) = (sa * sa / a.len() as f64, sb * sb / b.len() as f64);
    let se2 = va + vb;
    if se2 == 0.0 {
        let t = if ma == mb { 0.0 } else { (ma - mb).signum() * f64::INFINITY };
        let p_value = if ma == mb { 1.0 } else { 0.0 };
        return Ok(Welch { t, df: f64::NAN, p_value });
    }
    let t = (ma - mb) / se2.sqrt();
    let df = se2 * se2 / (va * va / (a.len() as f64 - 1.0) + vb * vb / (b.len() as f64 - 1.0));
    let dist = StudentsT::new(0.0, 1.0, df).map_err(|e| Error::Numeric(format!("t distribution: {e}")))?;
    Ok(Welch {
        t,
        df,
        p_value: 2.0 * dist.cdf(-t.abs()),
    })
}

/// Percentage by which `mean(b)` is below `mean(a)`.
pub fn reduction_percent(a: &[f64], b: &[f64]) -> f64 {
    let (ma, _) = mean_std(a);
    let (mb, _) = mean_std(b);
    100.0 * (ma - mb) / ma
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GroupReport {
    pub label: String,
    pub replications: usize,
    pub horizon: usize,
    pub final_mean: f64,
    pub final_std: f64,
    pub checkpoints: Vec<Checkpoint>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Comparison {
    pub baseline: String,
    pub candidate: String,
    /// How much lower the candidate's mean final regret is, in percent of the baseline's.
    pub reduction_percent: f64,
    pub welch: Option<Welch>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AggregateReport {
    pub groups: Vec<GroupReport>,
    pub comparisons: Vec<Comparison>,
}

/// Summaries of every set plus all pairwise comparisons.
pub fn aggregate(sets: &[TraceSet]) -> Result<AggregateReport> {
    if sets.is_empty() {
        return Err(Error::InsufficientData("no traces to aggregate".into()));
    }
    let horizon = sets[0].horizon();
    if let Some(s) = sets.iter().find(|s| s.horizon() != horizon) {
        return Err(Error::Domain(format!(
            "mismatched horizons: {} ends at {horizon}, {} ends at {}",
            sets[0].label,
            s.label,
            s.horizon()
        )));
    }
    let groups = sets
        .iter()
        .map(|s| {
            let finals = s.final_regrets();
            let (final_mean, final_std) = mean_std(&finals);
            GroupReport {
                label: s.label.clone(),
                replications: finals.len(),
                horizon,
                final_mean,
                final_std,
                checkpoints: s.checkpoints(),
            }
        })
        .collect();
    let mut comparisons = Vec::new();
    for i in 0..sets.len() {
        for j in i + 1..sets.len() {
            let (a, b) = (sets[i].final_regrets(), sets[j].final_regrets());
            comparisons.push(Comparison {
                baseline: sets[i].label.clone(),
                candidate: sets[j].label.clone(),
                reduction_percent: reduction_percent(&a, &b),
                welch: welch_t(&a, &b).ok(),
            });
        }
    }
    Ok(AggregateReport { groups, comparisons })
}

/// Loads every directory, aggregates, and writes the JSON report.
pub fn aggregate_dirs(dirs: &[PathBuf], report: &Path) -> Result<AggregateReport> {
    let mut sets = Vec::new();
    for d in dirs {
        sets.extend(load_trace_dir(d)?);
    }
    let rep = aggregate(&sets)?;
    let json = serde_json::to_string_pretty(&rep).expect("report serializes");
    std::fs::write(report, json + "\n").map_err(|e| Error::io(report, e))?;
    Ok(rep)
}
