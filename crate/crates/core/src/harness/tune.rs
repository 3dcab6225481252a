//! Grid search over policy hyperparameters.
//!
//! Every grid point reuses the configured master seed, so all points see the
//! same truths, noise and contexts (common random numbers).

use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::harness::config::{canonical_key, ConfigMap, ExperimentConfig};
use crate::harness::run::run_experiment;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchMode {
    /// Every combination of values.
    Cartesian,
    /// One key at a time in file order, fixing each key's best value before the next.
    Sequential,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    pub mode: SearchMode,
    /// Keys with their candidate values, in file order.
    pub axes: Vec<(String, Vec<String>)>,
}

impl Grid {
    /// `key = v1, v2, ...` lines plus an optional `mode = cartesian|sequential`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut mode = SearchMode::Cartesian;
        let mut axes: Vec<(String, Vec<String>)> = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, values) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(n + 1, format!("expected `key = v1, v2, ...`, got `{line}`")))?;
            let key = key.trim();
            if key == "mode" {
                mode = match values.trim() {
                    "cartesian" => SearchMode::Cartesian,
                    "sequential" => SearchMode::Sequential,
                    other => return Err(Error::config("mode", format!("expected cartesian or sequential, got `{other}`"))),
                };
                continue;
            }
            let key = canonical_key(key)?;
            let vals: Vec<String> = values.split(',').map(|v| v.trim().to_string()).collect();
            if vals.iter().any(String::is_empty) {
                return Err(Error::config(key, "empty grid value"));
            }
            if axes.iter().any(|(k, _)| *k == key) {
                return Err(Error::config(key, "given twice in the grid"));
            }
            axes.push((key, vals));
        }
        if axes.is_empty() {
            return Err(Error::config("grid", "no keys to tune"));
        }
        Ok(Grid { mode, axes })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config("grid", format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| e.with_path(path))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridPoint {
    pub params: Vec<(String, String)>,
    pub mean_final_regret: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TuneReport {
    pub mode: SearchMode,
    pub points: Vec<GridPoint>,
    pub best: Vec<(String, String)>,
    pub best_mean_final_regret: f64,
}

impl TuneReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn evaluate(base: &ConfigMap, params: &[(String, String)], threads: Option<usize>) -> Result<f64> {
    let mut map = base.clone();
    for (k, v) in params {
        map.set(k, v)?;
    }
    let cfg = ExperimentConfig::from_map(&map)?;
    let out = run_experiment(&cfg, threads)?;
    let finals = &out.summary.final_regrets;
    Ok(finals.iter().sum::<f64>() / finals.len() as f64)
}

/// Index of the smallest value; the first one wins ties.
fn argmin(points: &[GridPoint]) -> usize {
    let mut best = 0;
    for (i, p) in points.iter().enumerate() {
        if p.mean_final_regret < points[best].mean_final_regret {
            best = i;
        }
    }
    best
}

/// Evaluates the grid on top of `base` and returns every point plus the best.
pub fn grid_search(base: &ConfigMap, grid: &Grid, threads: Option<usize>) -> Result<TuneReport> {
    ExperimentConfig::from_map(base)?;
    let mut points = Vec::new();
    let best = match grid.mode {
        SearchMode::Cartesian => {
            let mut combos: Vec<Vec<(String, String)>> = vec![Vec::new()];
            for (key, vals) in &grid.axes {
                combos = combos
                    .into_iter()
                    .flat_map(|c| {
                        vals.iter().map(move |v| {
                            let mut next = c.clone();
                            next.push((key.clone(), v.clone()));
                            next
                        })
                    })
                    .collect();
            }
            for params in combos {
                let mean_final_regret = evaluate(base, &params, threads)?;
                points.push(GridPoint {
                    params,
                    mean_final_regret,
                });
            }
            points[argmin(&points)].clone()
        }
        SearchMode::Sequential => {
            let mut fixed: Vec<(String, String)> = Vec::new();
            let mut last = None;
            for (key, vals) in &grid.axes {
                let start = points.len();
                for v in vals {
                    let mut params = fixed.clone();
                    params.push((key.clone(), v.clone()));
                    let mean_final_regret = evaluate(base, &params, threads)?;
                    points.push(GridPoint {
                        params,
                        mean_final_regret,
                    });
                }
                let winner = points[start + argmin(&points[start..])].clone();
                fixed = winner.params.clone();
                last = Some(winner);
            }
            last.expect("grid has at least one key")
        }
    };
    Ok(TuneReport {
        mode: grid.mode,
        points,
        best: best.params,
        best_mean_final_regret: best.mean_final_regret,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = "p = 4\nr = 1\nw = 1\nn = 60\nreplications = 2\npolicy = vectorized_ucb\nseed = 3\n";

    #[test]
    fn grid_parsing() {
        let g = Grid::parse("# grid\nmode = sequential\nwidth_multiplier = 0.01, 0.05\nexploration_multiplier = 0.1\n").unwrap();
        assert_eq!(g.mode, SearchMode::Sequential);
        assert_eq!(g.axes[0], ("width_multiplier".into(), vec!["0.01".into(), "0.05".into()]));
        assert!(Grid::parse("lamda1 = 1").unwrap_err().to_string().contains("lambda1"));
        assert!(Grid::parse("").is_err());
        assert!(Grid::parse("mode = random\nucb_alpha = 1").is_err());
    }

    #[test]
    fn single_point_grid_returns_it() {
        let base = ConfigMap::parse(BASE).unwrap();
        let r = grid_search(&base, &Grid::parse("ucb_alpha = 0.5").unwrap(), Some(1)).unwrap();
        assert_eq!(r.points.len(), 1);
        assert_eq!(r.best, vec![("ucb_alpha".to_string(), "0.5".to_string())]);
    }

    #[test]
    fn table_recomputes_and_argmin_is_correct() {
        let base = ConfigMap::parse(BASE).unwrap();
        let grid = Grid::parse("ucb_alpha = 0, 0.3, 1, 3").unwrap();
        let r = grid_search(&base, &grid, Some(2)).unwrap();
        for p in &r.points {
            assert_eq!(p.mean_final_regret, evaluate(&base, &p.params, Some(1)).unwrap());
        }
        let min = r.points.iter().map(|p| p.mean_final_regret).fold(f64::INFINITY, f64::min);
        let first = r.points.iter().find(|p| p.mean_final_regret == min).unwrap();
        assert_eq!(r.best, first.params);
        assert_eq!(r, grid_search(&base, &grid, Some(1)).unwrap());
    }

    #[test]
    fn cartesian_and_sequential_sizes() {
        let base = ConfigMap::parse("p = 3\nr = 1\nw = 1\nn = 20\npolicy = ensemble\nensemble_size = 2\n").unwrap();
        let text = "perturbation_variance = 0, 1, 2\nprior_std = 0.5, 1\n";
        let cart = grid_search(&base, &Grid::parse(text).unwrap(), None).unwrap();
        assert_eq!(cart.points.len(), 6);
        let seq = grid_search(&base, &Grid::parse(&format!("mode = sequential\n{text}")).unwrap(), None).unwrap();
        assert_eq!(seq.points.len(), 5);
        assert_eq!(seq.best.len(), 2);
        let first_best = &seq.points[..3]
            .iter()
            .min_by(|a, b| a.mean_final_regret.total_cmp(&b.mean_final_regret))
            .unwrap()
            .params[0];
        assert_eq!(&seq.best[0], first_best);
    }
}
