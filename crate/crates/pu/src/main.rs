use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use pu::report;
use pu::runner;
use pu::ExperimentConfig;

#[derive(Parser)]
#[command(
    name = "pu-enhanced",
    version,
    about = "Benchmark PU classifiers on synthetic or tabular data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a TOML config.
    Run {
        config: PathBuf,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (default: all cores).
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long)]
        quiet: bool,
    },
}

fn run(
    config: PathBuf,
    seed: Option<u64>,
    out: Option<PathBuf>,
    jobs: Option<usize>,
    quiet: bool,
) -> anyhow::Result<bool> {
    let mut cfg = ExperimentConfig::load(&config)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let out = out.unwrap_or_else(|| cfg.output.clone());
    let rows = runner::execute(&cfg, jobs)?;
    let paths = report::write_reports(&out, &rows, cfg.record_timing)
        .with_context(|| format!("writing reports to {}", out.display()))?;
    if !quiet {
        for cell in report::aggregate(&rows) {
            let n = cell.n.map(|n| format!(" n={n}")).unwrap_or_default();
            match cell.f1 {
                Some(f1) => eprintln!(
                    "{:<24} c={}{n}  F1 {:.3} (se {:.3})  ok {}/{}",
                    cell.classifier,
                    cell.c,
                    f1.mean,
                    f1.se,
                    cell.succeeded,
                    cell.succeeded + cell.failed
                ),
                None => eprintln!(
                    "{:<24} c={}{n}  all {} replications failed",
                    cell.classifier, cell.c, cell.failed
                ),
            }
        }
        eprintln!("wrote {}", paths.raw.display());
    }
    Ok(runner::any_cell_succeeded(&rows))
}

fn main() -> ExitCode {
    let Cli {
        command:
            Command::Run {
                config,
                seed,
                out,
                jobs,
                quiet,
            },
    } = Cli::parse();
    match run(config, seed, out, jobs, quiet) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: every cell failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
