use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};
use rayon::prelude::*;

use nrdf_lab::check::run_checks;
use nrdf_lab::{run_experiment, RunOutcome, ScenarioConfig, Value};

#[derive(Parser)]
#[command(
    name = "nrdf-lab",
    version,
    about = "Normalized Ricci-DeTurck flow experiments"
)]
struct Cli {
    /// Root directory for run outputs; each run writes to `<out>/<name>/`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Suppress progress and summary output.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one config file.
    Run { config: PathBuf },
    /// Run every `*.cfg` file in a directory in parallel.
    Sweep { dir: PathBuf },
    /// Run the built-in oracle and invariant suite.
    Check,
}

fn summary_line(outcome: &RunOutcome) -> String {
    let m = &outcome.manifest;
    let text = |k: &str| match m.get(k) {
        Some(Value::Text(s)) => s.clone(),
        Some(v) => v.as_f64().map_or("null".into(), |x| format!("{x:.3e}")),
        None => "-".into(),
    };
    format!(
        "{}: {} t={} sup_u={} renvol={} kappa_hat={} -> {}",
        outcome.experiment.config.name,
        text("termination"),
        text("final_t"),
        text("final_sup_u"),
        text("final_renvol"),
        text("decay_kappa_hat"),
        outcome.dir.display()
    )
}

fn run_one(path: &Path, out: Option<&Path>) -> anyhow::Result<RunOutcome> {
    let config = ScenarioConfig::from_file(path)?;
    run_experiment(&config, out).with_context(|| format!("run {}", path.display()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out = cli.out.as_deref();
    let say = |line: &str| {
        if !cli.quiet {
            println!("{line}");
        }
    };
    match &cli.command {
        Command::Run { config } => match run_one(config, out) {
            Ok(outcome) => {
                say(&summary_line(&outcome));
                if outcome.experiment.halted() {
                    ExitCode::from(2)
                } else {
                    ExitCode::SUCCESS
                }
            }
            Err(e) => {
                eprintln!("error: {e:#}");
                ExitCode::FAILURE
            }
        },
        Command::Sweep { dir } => {
            let mut paths: Vec<PathBuf> = match std::fs::read_dir(dir) {
                Ok(entries) => entries
                    .filter_map(|e| e.ok().map(|e| e.path()))
                    .filter(|p| p.extension().is_some_and(|x| x == "cfg"))
                    .collect(),
                Err(e) => {
                    eprintln!("error: cannot read {}: {e}", dir.display());
                    return ExitCode::FAILURE;
                }
            };
            paths.sort();
            if paths.is_empty() {
                eprintln!("error: no .cfg files in {}", dir.display());
                return ExitCode::FAILURE;
            }
            let results: Vec<_> = paths.par_iter().map(|p| (p, run_one(p, out))).collect();
            let mut code = ExitCode::SUCCESS;
            for (path, result) in results {
                match result {
                    Ok(outcome) => {
                        say(&summary_line(&outcome));
                        if outcome.experiment.halted() {
                            code = ExitCode::from(2);
                        }
                    }
                    Err(e) => {
                        eprintln!("error: {}: {e:#}", path.display());
                        code = ExitCode::FAILURE;
                    }
                }
            }
            code
        }
        Command::Check => {
            let results = run_checks();
            for r in &results {
                say(&format!(
                    "{} {}: {}",
                    if r.passed { "PASS" } else { "FAIL" },
                    r.name,
                    r.detail
                ));
            }
            if results.iter().all(|r| r.passed) {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
