use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rlif_lab::config::ExperimentConfig;
use rlif_lab::io::{export_heatmap, write_matrix_csv};
use rlif_lab::run::run_experiment;
use rlif_lab::server::{serve, ServeConfig};
use rlif_lab::theory_suite::{run_suite, Suite};
use rlif_lab::{LabError, Result};

/// Exit code for a theory sweep that found a bound violation.
const EXIT_VIOLATION: u8 = 3;

#[derive(Parser)]
#[command(name = "rlif-lab", version, about = "Tabular RLIF experiments, theory sweeps and live sessions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every (algorithm, seed) cell of an experiment config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Worker threads.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Run this single seed instead of the configured list.
        #[arg(long)]
        seed_override: Option<u64>,
        /// Output directory (overrides `output_dir`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a seeded theory sweep: thm1, cor1, lemma1, bandit, metric or all.
    VerifyTheory {
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 200)]
        cases: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write violating cases here as JSON instead of stderr.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the value matrix of one round of a run artifact as CSV.
    ExportHeatmap {
        /// A `<algorithm>_seed<n>.json` artifact written by `run`.
        #[arg(long)]
        run: PathBuf,
        #[arg(long)]
        round: usize,
        /// Output CSV (stdout when absent).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Serve live sessions over WebSocket.
    Serve {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides the configured bind address.
        #[arg(long)]
        bind: Option<String>,
    },
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
    let filter = tracing_subscriber::EnvFilter::try_from_env("RLIF_LAB_LOG")
        .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("warn"));
    tracing_subscriber::fmt()
        .with_env_filter(filter)
        .with_writer(std::io::stderr)
        .init();
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn dispatch(command: Command) -> Result<u8> {
    match command {
        Command::Run {
            config,
            jobs,
            seed_override,
            out,
        } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(seed) = seed_override {
                cfg.seeds = vec![seed];
            }
            let out_dir = out.unwrap_or_else(|| cfg.output_dir.clone());
            let summary = run_experiment(&cfg, jobs, &out_dir)?;
            println!("{:<10} {:>5} {:>22} {:>22}", "algorithm", "seeds", "final return", "final rate");
            for row in summary {
                println!(
                    "{:<10} {:>5} {:>12.4} ± {:<7.4} {:>12.4} ± {:<7.4}",
                    row.algorithm.name(),
                    row.seeds,
                    row.final_return_mean,
                    row.final_return_std,
                    row.final_rate_mean,
                    row.final_rate_std
                );
            }
            println!("artifacts in {}", out_dir.display());
            Ok(0)
        }
        Command::VerifyTheory { suite, cases, seed, out } => {
            let suite: Suite = suite.parse()?;
            let reports = run_suite(suite, cases, seed)?;
            let mut violations = Vec::new();
            for r in &reports {
                println!(
                    "{}: {}/{} passed, worst margin {:.3e}",
                    serde_json::to_value(r.suite)?.as_str().unwrap_or("?"),
                    r.passed,
                    r.applicable,
                    r.worst_margin
                );
                violations.extend(r.violations.iter().cloned());
            }
            if violations.is_empty() {
                return Ok(0);
            }
            let text = serde_json::to_string_pretty(&violations)?;
            match out {
                Some(path) => std::fs::write(&path, text).map_err(|e| LabError::io(&path, e))?,
                None => eprintln!("{text}"),
            }
            Ok(EXIT_VIOLATION)
        }
        Command::ExportHeatmap { run, round, out } => {
            let matrix = export_heatmap(&run, round)?;
            match out {
                Some(path) => write_to(&path, &matrix)?,
                None => write_matrix_csv(std::io::stdout().lock(), &matrix)?,
            }
            Ok(0)
        }
        Command::Serve { config, bind } => {
            let mut cfg = match config {
                Some(path) => {
                    let text = std::fs::read_to_string(&path).map_err(|e| LabError::Config {
                        path: path.clone(),
                        message: e.to_string(),
                    })?;
                    serde_json::from_str::<ServeConfig>(&text).map_err(|e| LabError::Config {
                        path,
                        message: e.to_string(),
                    })?
                }
                None => ServeConfig::default(),
            };
            if let Some(bind) = bind {
                cfg.bind = bind;
            }
            let runtime = tokio::runtime::Runtime::new().map_err(|e| LabError::Runtime(e.to_string()))?;
            runtime.block_on(serve(cfg))?;
            Ok(0)
        }
    }
}

fn write_to(path: &Path, matrix: &[Vec<f64>]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| LabError::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    write_matrix_csv(&mut w, matrix)?;
    w.flush().map_err(|e| LabError::io(path, e))
}
