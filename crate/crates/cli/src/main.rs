use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tensor_bandits::harness::{
    aggregate_dirs, grid_search, run_experiment, write_outputs, ConfigMap, ExperimentConfig, Grid,
};
use tensor_bandits::tensor::{norms, tucker_reconstruct};
use tensor_bandits::{complete, load_observations, CompletionOptions, DenseTensor, Error};

/// Simulate, tune and compare low-rank tensor bandit policies.
#[derive(Parser)]
#[command(name = "tensor-bandits", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run replicated simulations and write trace.csv and summary.json.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides the `output` key).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads for replications.
        #[arg(long)]
        threads: Option<usize>,
        /// Write every step instead of checkpoints.
        #[arg(long)]
        full_trace: bool,
    },
    /// Grid-search hyperparameters and print the table as JSON.
    Tune {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        grid: PathBuf,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Compare trace directories and write a JSON report.
    Aggregate {
        #[arg(required = true)]
        dirs: Vec<PathBuf>,
        #[arg(long)]
        report: PathBuf,
    },
    /// Complete a tensor from observed entries and report the error against it.
    Complete {
        #[arg(long)]
        tensor: PathBuf,
        #[arg(long)]
        obs: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        ranks: Vec<usize>,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Config file with the `TB_SEED` override applied.
fn load_config(path: &PathBuf) -> Result<ConfigMap, Error> {
    let mut map = ConfigMap::load(path)?;
    if let Ok(seed) = std::env::var("TB_SEED") {
        map.set("seed", &seed)?;
    }
    Ok(map)
}

fn execute(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run {
            config,
            out,
            threads,
            full_trace,
        } => {
            let cfg = ExperimentConfig::from_map(&load_config(&config)?)?;
            let dir = out.or_else(|| cfg.output.clone()).unwrap_or_else(|| PathBuf::from("out"));
            let output = run_experiment(&cfg, threads)?;
            write_outputs(&output, &dir, cfg.checkpoint_stride, full_trace)?;
            let finals = &output.summary.final_regrets;
            println!(
                "{}: {} replications, mean final regret {:.4}, traces in {}",
                cfg.policy,
                finals.len(),
                finals.iter().sum::<f64>() / finals.len() as f64,
                dir.display()
            );
        }
        Command::Tune { config, grid, threads } => {
            let base = load_config(&config)?;
            let grid = Grid::load(&grid)?;
            println!("{}", grid_search(&base, &grid, threads)?.to_json());
        }
        Command::Aggregate { dirs, report } => {
            let rep = aggregate_dirs(&dirs, &report)?;
            for g in &rep.groups {
                println!("{}: mean final regret {:.4} (sd {:.4})", g.label, g.final_mean, g.final_std);
            }
        }
        Command::Complete { tensor, obs, ranks, out } => {
            let truth = DenseTensor::load(&tensor)?;
            let observations = load_observations(&obs)?;
            let est = complete(&observations, truth.dims(), &CompletionOptions::new(ranks))?;
            let x = tucker_reconstruct(&est)?;
            x.save(&out)?;
            let diff: Vec<f64> = x.values().iter().zip(truth.values()).map(|(a, b)| a - b).collect();
            let err = norms(&DenseTensor::new(truth.dims().to_vec(), diff)?).0;
            println!("observations: {}", observations.len());
            println!("relative_error: {}", err / norms(&truth).0);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config_error() { 1 } else { 2 })
        }
    }
}
