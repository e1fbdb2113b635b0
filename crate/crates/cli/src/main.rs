//! `autoprep`: predict, apply and evaluate data-preparation plans for a
//! directory of CSV tables.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use autoprep_core::pipeline::{cmd_apply, cmd_eval, cmd_predict, PredictOptions, SolveMode};
use autoprep_core::scoring::ScorerConfig;
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "autoprep", version, about = "Predict table transformations and joins for a multi-table project")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mode {
    Optimistic,
    Precise,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Predict a plan for every CSV file in a directory.
    Predict {
        project_dir: PathBuf,
        #[arg(long, value_enum, default_value = "optimistic")]
        mode: Mode,
        /// Steps per table, NoOps included.
        #[arg(long, default_value_t = 2)]
        depth: usize,
        /// Scorer weights (TOML); defaults to the bundled ones.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Accepted for reproducible scripts; the solver is deterministic.
        #[arg(long)]
        seed: Option<u64>,
        /// Precise-mode rounds; defaults to the config value.
        #[arg(long)]
        max_iter: Option<usize>,
        /// Also solve exactly when small enough and report the gap.
        #[arg(long)]
        oracle: bool,
        /// Write the plan here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Apply a plan and write the transformed tables plus relationships.json.
    Apply {
        project_dir: PathBuf,
        plan: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score predicted plans against truth: two files, or two directories
    /// matched by file stem.
    Eval {
        predicted: PathBuf,
        truth: PathBuf,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), String> {
    match out {
        Some(path) => std::fs::write(path, format!("{text}\n")).map_err(|e| format!("{}: {e}", path.display())),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<(), (i32, String)> {
    let general = |e: String| (1, e);
    match cli.command {
        Command::Predict { project_dir, mode, depth, config, seed, max_iter, oracle, out } => {
            if let Some(seed) = seed {
                log::debug!("seed {seed} ignored: prediction is deterministic");
            }
            let config = match config {
                Some(path) => ScorerConfig::load(&path).map_err(|e| general(e.to_string()))?,
                None => ScorerConfig::default(),
            };
            let mode = match mode {
                Mode::Optimistic => SolveMode::Optimistic,
                Mode::Precise => SolveMode::Precise,
            };
            let options = PredictOptions { mode, depth, config, max_iter, oracle };
            let plan = cmd_predict(&project_dir, &options).map_err(|e| (e.exit_code(), e.to_string()))?;
            emit(&plan.to_json(), out.as_deref()).map_err(general)
        }
        Command::Apply { project_dir, plan, out } => {
            cmd_apply(&project_dir, &plan, &out).map_err(|e| (e.exit_code(), e.to_string()))
        }
        Command::Eval { predicted, truth, out } => {
            let report = cmd_eval(&predicted, &truth).map_err(|e| (e.exit_code(), e.to_string()))?;
            let text = serde_json::to_string_pretty(&report).expect("report serializes");
            emit(&text, out.as_deref()).map_err(general)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    // Usage errors exit 1 so that 2 keeps its meaning of "too few tables".
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, message)) => {
            eprintln!("error: {message}");
            ExitCode::from(code as u8)
        }
    }
}
