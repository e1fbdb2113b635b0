//! End-to-end commands: predict a plan for a project directory, apply a plan,
//! evaluate plans against ground truth.
//!
//! Every command error maps to a process exit code via
//! [`CommandError::exit_code`].

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eval::{evaluate, EvalReport};
use crate::graph::{build_search_graph, GraphError};
use crate::ops::{apply_sequence, OpError};
use crate::plan::{plan_from_solution, PlanJoin, PrepPlan};
use crate::scoring::{Scorer, ScorerConfig, ScoringError};
use crate::solver::{
    brute_force_oracle, solve_optimistic, solve_precise, RestrictedRescorer, SolverError,
};
use crate::tables::{load_csv, Table, TableError};

pub const RELATIONSHIPS_FILE: &str = "relationships.json";

#[derive(Debug, Error)]
pub enum CommandError {
    #[error("project needs at least two tables, found {found} in {dir}")]
    TooFewTables { dir: String, found: usize },
    #[error("cannot read tables: {}", .0.join("; "))]
    Ingestion(Vec<String>),
    #[error("table {table}, step {step}: {source}")]
    Apply {
        table: String,
        step: usize,
        #[source]
        source: OpError,
    },
    #[error("plan references unknown table {0:?}")]
    UnknownTable(String),
    #[error("no truth for predicted project {0:?}")]
    Unmatched(String),
    #[error("{path}: {message}")]
    Input { path: String, message: String },
    #[error(transparent)]
    Scoring(#[from] ScoringError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

impl CommandError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CommandError::TooFewTables { .. } => 2,
            CommandError::Ingestion(_) => 3,
            CommandError::Apply { .. } | CommandError::UnknownTable(_) => 4,
            CommandError::Unmatched(_) => 5,
            _ => 1,
        }
    }
}

fn input_error(path: &Path, message: impl ToString) -> CommandError {
    CommandError::Input { path: path.display().to_string(), message: message.to_string() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMode {
    Optimistic,
    Precise,
}

impl SolveMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveMode::Optimistic => "optimistic",
            SolveMode::Precise => "precise",
        }
    }
}

#[derive(Debug, Clone)]
pub struct PredictOptions {
    pub mode: SolveMode,
    pub depth: usize,
    pub config: ScorerConfig,
    /// Precise-mode rounds; defaults to the config value.
    pub max_iter: Option<usize>,
    /// Also run the brute-force oracle when within its bound.
    pub oracle: bool,
}

impl Default for PredictOptions {
    fn default() -> Self {
        PredictOptions {
            mode: SolveMode::Optimistic,
            depth: 2,
            config: ScorerConfig::default(),
            max_iter: None,
            oracle: false,
        }
    }
}

/// CSV files of a project directory, sorted by file name.
pub fn project_files(dir: &Path) -> Result<Vec<PathBuf>, CommandError> {
    let entries = std::fs::read_dir(dir).map_err(|e| input_error(dir, e))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && p.extension()
                    .map(|x| x.to_string_lossy().eq_ignore_ascii_case("csv"))
                    .unwrap_or(false)
        })
        .collect();
    files.sort();
    Ok(files)
}

/// Loads every table of a project; all unreadable files are reported at once.
pub fn load_project(dir: &Path) -> Result<Vec<Table>, CommandError> {
    let files = project_files(dir)?;
    if files.len() < 2 {
        return Err(CommandError::TooFewTables {
            dir: dir.display().to_string(),
            found: files.len(),
        });
    }
    let mut tables = Vec::with_capacity(files.len());
    let mut failures = Vec::new();
    for f in &files {
        match load_csv(f) {
            Ok(t) => tables.push(t),
            Err(e) => failures.push(e.to_string()),
        }
    }
    if !failures.is_empty() {
        return Err(CommandError::Ingestion(failures));
    }
    Ok(tables)
}

fn millis(since: Instant) -> f64 {
    since.elapsed().as_secs_f64() * 1000.0
}

/// Builds the search graph, solves it and returns the plan.
pub fn predict_tables(tables: Vec<Table>, options: &PredictOptions) -> Result<PrepPlan, CommandError> {
    let scorer = Scorer::new(options.config.clone());
    let t0 = Instant::now();
    let graph = build_search_graph(tables, options.depth, &scorer)?;
    let build_ms = millis(t0);

    let t1 = Instant::now();
    let (graph, solution, iterations) = match options.mode {
        SolveMode::Optimistic => {
            let s = solve_optimistic(&graph)?;
            (graph, s, None)
        }
        SolveMode::Precise => {
            let k = options.max_iter.unwrap_or(options.config.precise_max_iter);
            let out = solve_precise(&graph, k, &RestrictedRescorer(&scorer))?;
            (out.graph, out.solution, Some(out.iterations))
        }
    };
    let solve_ms = millis(t1);

    let mut plan = plan_from_solution(&graph, &solution);
    plan.metadata.mode = options.mode.as_str().to_string();
    plan.metadata.m = options.depth;
    plan.metadata.objective = Some(solution.probability);
    plan.metadata.cost = Some(solution.cost_raw);
    plan.metadata.iterations = iterations;
    plan.metadata.timing_ms.insert("build_graph".into(), build_ms);
    plan.metadata.timing_ms.insert("solve".into(), solve_ms);

    if options.oracle {
        let value = match brute_force_oracle(&graph, options.config.oracle_bound) {
            Ok(best) => serde_json::json!({
                "objective": best.probability,
                "cost": best.cost_raw,
                "gap": solution.cost_raw - best.cost_raw,
                "exact": solution.same_edges(&best),
            }),
            Err(e) => serde_json::json!({ "skipped": e.to_string() }),
        };
        plan.metadata.extra.insert("oracle".into(), value);
    }
    Ok(plan)
}

/// Predicts a plan for the CSV files in `project_dir`.
pub fn cmd_predict(project_dir: &Path, options: &PredictOptions) -> Result<PrepPlan, CommandError> {
    let tables = load_project(project_dir)?;
    predict_tables(tables, options)
}

/// Applies each table's steps in order.
pub fn apply_plan(tables: &[Table], plan: &PrepPlan) -> Result<Vec<Table>, CommandError> {
    for tp in &plan.tables {
        if !tables.iter().any(|t| t.name() == tp.name) {
            return Err(CommandError::UnknownTable(tp.name.clone()));
        }
    }
    tables
        .iter()
        .map(|t| match plan.table(t.name()) {
            None => Ok(t.clone()),
            Some(tp) => apply_sequence(t, &tp.steps).map_err(|(step, source)| CommandError::Apply {
                table: t.name().to_string(),
                step,
                source,
            }),
        })
        .collect()
}

/// Writes one CSV per table after applying the plan, plus the join list as
/// `relationships.json`. Tables without steps are copied byte for byte.
pub fn cmd_apply(project_dir: &Path, plan_path: &Path, out_dir: &Path) -> Result<(), CommandError> {
    let text = std::fs::read_to_string(plan_path).map_err(|e| input_error(plan_path, e))?;
    let plan = PrepPlan::from_json(&text).map_err(|e| input_error(plan_path, e))?;
    let files = project_files(project_dir)?;
    let mut tables = Vec::with_capacity(files.len());
    let mut failures = Vec::new();
    for f in &files {
        match load_csv(f) {
            Ok(t) => tables.push(t),
            Err(e) => failures.push(e.to_string()),
        }
    }
    if !failures.is_empty() {
        return Err(CommandError::Ingestion(failures));
    }
    let outputs = apply_plan(&tables, &plan)?;
    std::fs::create_dir_all(out_dir).map_err(|e| input_error(out_dir, e))?;
    for ((file, table), out) in files.iter().zip(&tables).zip(&outputs) {
        let target = out_dir.join(file.file_name().expect("csv files have names"));
        let untouched = plan.table(table.name()).is_none_or(|tp| tp.steps.is_empty());
        if untouched {
            std::fs::copy(file, &target).map_err(|e| input_error(&target, e))?;
        } else {
            out.write_csv(&target)
                .map_err(|e: TableError| input_error(&target, e))?;
        }
    }
    let rel = out_dir.join(RELATIONSHIPS_FILE);
    let joins: &Vec<PlanJoin> = &plan.joins;
    let body = serde_json::to_string_pretty(joins).expect("joins serialize");
    std::fs::write(&rel, body).map_err(|e| input_error(&rel, e))?;
    Ok(())
}

fn read_plan(path: &Path) -> Result<PrepPlan, CommandError> {
    let text = std::fs::read_to_string(path).map_err(|e| input_error(path, e))?;
    PrepPlan::from_json(&text).map_err(|e| input_error(path, e))
}

fn plan_files(dir: &Path) -> Result<BTreeMap<String, PathBuf>, CommandError> {
    let entries = std::fs::read_dir(dir).map_err(|e| input_error(dir, e))?;
    Ok(entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "json"))
        .filter_map(|p| Some((p.file_stem()?.to_string_lossy().into_owned(), p)))
        .collect())
}

/// Evaluates one predicted plan file against one truth file, or every plan in
/// a directory against the truth file with the same stem.
pub fn cmd_eval(predicted: &Path, truth: &Path) -> Result<EvalReport, CommandError> {
    let mut pairs = Vec::new();
    if predicted.is_dir() {
        if !truth.is_dir() {
            return Err(input_error(truth, "expected a directory of truth plans"));
        }
        let truths = plan_files(truth)?;
        for (name, path) in plan_files(predicted)? {
            let t = truths.get(&name).ok_or_else(|| CommandError::Unmatched(name.clone()))?;
            pairs.push((name, read_plan(&path)?, read_plan(t)?));
        }
    } else {
        let name = predicted
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        pairs.push((name, read_plan(predicted)?, read_plan(truth)?));
    }
    Ok(evaluate(&pairs))
}
