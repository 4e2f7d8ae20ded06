use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use pressure_lab::harness::{self, run_criterion, Experiment, ExperimentConfig, CRITERIA};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "pressure-lab", version, about = "Hölder regularity experiments for the Euler pressure")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment, from a config file or from a preset with overrides.
    Run {
        #[arg(long, conflicts_with = "experiment")]
        config: Option<PathBuf>,
        #[arg(long, required_unless_present = "config")]
        experiment: Option<Experiment>,
        /// Replaces the preset theta list (repeatable).
        #[arg(long)]
        theta: Vec<f64>,
        /// Replaces the preset grid sizes (repeatable).
        #[arg(long)]
        grid: Vec<usize>,
        /// Replaces the preset seeds (repeatable).
        #[arg(long)]
        seed: Vec<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// List experiment names with a one-line description.
    ListExperiments,
    /// Run the acceptance suite.
    Verify {
        #[arg(long, default_value = "verify-out")]
        out: PathBuf,
        /// Run only these criteria (repeatable).
        #[arg(long)]
        only: Vec<u8>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match try_main() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn try_main() -> Result<bool> {
    match Cli::parse().command {
        Command::Run { config, experiment, theta, grid, seed, out } => {
            let cfg = match (config, experiment) {
                (Some(path), _) => ExperimentConfig::load(&path).with_context(|| format!("loading {}", path.display()))?,
                (None, Some(e)) => {
                    let mut cfg = ExperimentConfig::preset(e, out);
                    if !theta.is_empty() {
                        cfg.thetas = theta;
                    }
                    if !grid.is_empty() {
                        cfg.grids = grid;
                    }
                    if !seed.is_empty() {
                        cfg.seeds = seed;
                    }
                    cfg
                }
                (None, None) => bail!("either --config or --experiment is required"),
            };
            let result = harness::run(&cfg)?;
            for c in &result.checks {
                println!("{c}");
            }
            for f in &result.failures {
                println!("FAIL job θ={:?} seed={}: [{}] {}", f.theta, f.seed, f.code, f.message);
            }
            println!("{} rows written to {} (config {})", result.report.rows.len(), cfg.output_dir.display(), result.config_hash);
            Ok(result.passed())
        }
        Command::ListExperiments => {
            for e in Experiment::ALL {
                println!("{:<22} {}", e.name(), e.description());
            }
            Ok(true)
        }
        Command::Verify { out, only } => {
            let mut all = true;
            for c in CRITERIA.iter().filter(|c| only.is_empty() || only.contains(&c.number)) {
                let outcome = match run_criterion(c.number, &out) {
                    Ok(o) => o,
                    Err(e) => {
                        println!("FAIL {:>2} {}: error [{}] {e}", c.number, c.title, e.code());
                        all = false;
                        continue;
                    }
                };
                let verdict = if outcome.passed() { "pass" } else { "FAIL" };
                println!("{verdict} {:>2} {}", c.number, c.title);
                for check in &outcome.checks {
                    println!("     {check}");
                }
                all &= outcome.passed();
            }
            Ok(all)
        }
    }
}
