use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::info;

use specon_sim::harness::{self, Grid, ScenarioConfig};
use specon_sim::Error;

/// Discrete-event simulator for converged-aware container scheduling of training jobs.
///
/// Log verbosity is read from SPECON_LOG (e.g. `SPECON_LOG=debug`).
#[derive(Debug, Parser)]
#[command(version, long_about = None)]
struct Cli {
    /// Override the seed given in the scenario file
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one scenario with the policy named in its file
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a scenario under both policies and tabulate the difference
    Compare {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare over a grid of monitor parameters
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        grid: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load(path: &Path, seed: Option<u64>) -> Result<ScenarioConfig, Error> {
    let config = ScenarioConfig::load(path)?;
    Ok(match seed {
        Some(s) => config.with_seed(s),
        None => config,
    })
}

fn execute(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run { config, out } => {
            let config = load(&config, cli.seed)?;
            let report = harness::run(&config)?;
            report.write_to(&out)?;
            info!(
                "{} ({}): average {:.3}s, makespan {:.3}s",
                report.label, report.policy, report.summary.average_completion, report.summary.makespan
            );
        }
        Command::Compare { config, out } => {
            let config = load(&config, cli.seed)?;
            let cmp = harness::compare(&config)?;
            cmp.write_to(&out)?;
            let s = cmp.summary;
            println!(
                "{}: reduced {:.1}% overall {:.1}% best {:.1}% makespan {:.1}%",
                cmp.parameters, s.reduced, s.overall, s.best, s.makespan
            );
        }
        Command::Sweep { config, grid, out } => {
            let config = load(&config, cli.seed)?;
            let grid = Grid::load(&grid)?;
            let rows = harness::sweep(&config, &grid)?;
            harness::write_sweep(&out, &rows)?;
            for r in &rows {
                let s = r.median;
                println!(
                    "{}: reduced {:.1}% overall {:.1}% best {:.1}% makespan {:.1}%",
                    r.parameters, s.reduced, s.overall, s.best, s.makespan
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SPECON_LOG", "warn")).init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ (Error::Config(_) | Error::NoWorkers | Error::UnknownProfile(_))) => {
            eprintln!("config error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
