//! The transformation DSL: operator semantics and candidate enumeration.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tables::{
    normalize_cell, unique_name, ColumnKind, ProjectContext, Table, TableError,
};

/// The delimiters probed by Split candidates and Concatenate candidates.
pub const DELIMITERS: [&str; 12] = [",", "|", ".", "-", "_", "/", ":", ";", " ", "#", "@", "&"];

/// Highest Split position probed during enumeration.
pub const MAX_SELECT_POS: usize = 3;

pub const UNPIVOT_VARIABLE: &str = "variable";
pub const UNPIVOT_VALUE: &str = "value";

#[derive(Debug, Error, PartialEq)]
pub enum OpError {
    #[error("unknown column {column:?}")]
    UnknownColumn { column: String },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("pivot is ambiguous: key {key:?} has conflicting values for {pivot_value:?}")]
    PivotConflict { key: Vec<String>, pivot_value: String },
    #[error("output column {0:?} already exists")]
    OutputExists(String),
    #[error("cannot transform an empty table")]
    EmptyTable,
}

impl From<TableError> for OpError {
    fn from(err: TableError) -> Self {
        match err {
            TableError::UnknownColumn { column, .. } => OpError::UnknownColumn { column },
            other => OpError::InvalidParameter(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKind {
    Unpivot,
    Pivot,
    Transpose,
    Split,
    Concatenate,
    Substring,
    NoOp,
}

impl OperatorKind {
    pub const ALL: [OperatorKind; 7] = [
        OperatorKind::Unpivot,
        OperatorKind::Pivot,
        OperatorKind::Transpose,
        OperatorKind::Split,
        OperatorKind::Concatenate,
        OperatorKind::Substring,
        OperatorKind::NoOp,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            OperatorKind::Unpivot => "unpivot",
            OperatorKind::Pivot => "pivot",
            OperatorKind::Transpose => "transpose",
            OperatorKind::Split => "split",
            OperatorKind::Concatenate => "concatenate",
            OperatorKind::Substring => "substring",
            OperatorKind::NoOp => "no_op",
        }
    }

    pub fn is_string_op(self) -> bool {
        matches!(
            self,
            OperatorKind::Split | OperatorKind::Concatenate | OperatorKind::Substring
        )
    }

    pub fn is_reshape(self) -> bool {
        matches!(
            self,
            OperatorKind::Unpivot | OperatorKind::Pivot | OperatorKind::Transpose
        )
    }
}

impl fmt::Display for OperatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One parameterized operator.
///
/// Serialized as `{"op": "<kind>", "params": {...}}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "op", content = "params", rename_all = "snake_case")]
pub enum TransformStep {
    Unpivot {
        start_column: String,
        end_column: String,
    },
    Pivot {
        pivot_column: String,
        value_column: String,
    },
    Transpose {},
    Split {
        column: String,
        delimiter: String,
        select_pos: usize,
        output_column: String,
    },
    Concatenate {
        columns: Vec<String>,
        delimiter: String,
        output_column: String,
    },
    Substring {
        column: String,
        start: usize,
        length: usize,
        output_column: String,
    },
    NoOp {},
}

impl TransformStep {
    pub fn kind(&self) -> OperatorKind {
        match self {
            TransformStep::Unpivot { .. } => OperatorKind::Unpivot,
            TransformStep::Pivot { .. } => OperatorKind::Pivot,
            TransformStep::Transpose {} => OperatorKind::Transpose,
            TransformStep::Split { .. } => OperatorKind::Split,
            TransformStep::Concatenate { .. } => OperatorKind::Concatenate,
            TransformStep::Substring { .. } => OperatorKind::Substring,
            TransformStep::NoOp {} => OperatorKind::NoOp,
        }
    }

    pub fn is_noop(&self) -> bool {
        matches!(self, TransformStep::NoOp {})
    }

    /// The generated column this step appends, if any.
    pub fn output_column(&self) -> Option<&str> {
        match self {
            TransformStep::Split { output_column, .. }
            | TransformStep::Concatenate { output_column, .. }
            | TransformStep::Substring { output_column, .. } => Some(output_column),
            _ => None,
        }
    }

    /// Equality on operator and parameters, ignoring generated output names.
    pub fn same_action(&self, other: &TransformStep) -> bool {
        use TransformStep::*;
        match (self, other) {
            (
                Split { column: a, delimiter: d, select_pos: p, .. },
                Split { column: b, delimiter: e, select_pos: q, .. },
            ) => a == b && d == e && p == q,
            (
                Concatenate { columns: a, delimiter: d, .. },
                Concatenate { columns: b, delimiter: e, .. },
            ) => a == b && d == e,
            (
                Substring { column: a, start: s, length: l, .. },
                Substring { column: b, start: t, length: m, .. },
            ) => a == b && s == t && l == m,
            _ => self == other,
        }
    }

    /// Compact human-readable form, e.g. `split(Line-ID,"-",1)`.
    pub fn label(&self) -> String {
        match self {
            TransformStep::Unpivot { start_column, end_column } => {
                format!("unpivot({start_column}..{end_column})")
            }
            TransformStep::Pivot { pivot_column, value_column } => {
                format!("pivot({pivot_column},{value_column})")
            }
            TransformStep::Transpose {} => "transpose".to_string(),
            TransformStep::Split { column, delimiter, select_pos, .. } => {
                format!("split({column},{delimiter:?},{select_pos})")
            }
            TransformStep::Concatenate { columns, delimiter, .. } => {
                format!("concatenate({},{delimiter:?})", columns.join(","))
            }
            TransformStep::Substring { column, start, length, .. } => {
                format!("substring({column},{start},{length})")
            }
            TransformStep::NoOp {} => "no_op".to_string(),
        }
    }
}

/// Applies one step, returning a new table. The input is never modified.
pub fn apply_step(table: &Table, step: &TransformStep) -> Result<Table, OpError> {
    match step {
        TransformStep::NoOp {} => Ok(table.clone()),
        TransformStep::Unpivot { start_column, end_column } => apply_unpivot(
            table,
            start_column,
            end_column,
            UNPIVOT_VARIABLE,
            UNPIVOT_VALUE,
        ),
        TransformStep::Pivot { pivot_column, value_column } => {
            apply_pivot(table, pivot_column, value_column)
        }
        TransformStep::Transpose {} => apply_transpose(table),
        TransformStep::Split { column, delimiter, select_pos, output_column } => {
            apply_split(table, column, delimiter, *select_pos, output_column)
        }
        TransformStep::Concatenate { columns, delimiter, output_column } => {
            apply_concatenate(table, columns, delimiter, output_column)
        }
        TransformStep::Substring { column, start, length, output_column } => {
            apply_substring(table, column, *start, *length, output_column)
        }
    }
}

/// Applies steps in order; the error carries the index of the failing step.
pub fn apply_sequence(table: &Table, steps: &[TransformStep]) -> Result<Table, (usize, OpError)> {
    let mut current = table.clone();
    for (i, step) in steps.iter().enumerate() {
        current = apply_step(&current, step).map_err(|e| (i, e))?;
    }
    Ok(current)
}

/// Collapses the header range `start..=end` into `(variable, value)` pairs.
/// New column names get a numeric suffix if they collide with kept columns.
pub fn apply_unpivot(
    table: &Table,
    start_column: &str,
    end_column: &str,
    var_column_name: &str,
    value_column_name: &str,
) -> Result<Table, OpError> {
    let start = table.require_column(start_column)?;
    let end = table.require_column(end_column)?;
    if end < start + 1 {
        return Err(OpError::InvalidParameter(format!(
            "unpivot range {start_column}..{end_column} must span at least 2 columns"
        )));
    }
    let kept: Vec<usize> = (0..table.num_columns())
        .filter(|c| *c < start || *c > end)
        .collect();
    let mut headers: Vec<String> = kept.iter().map(|&c| table.column_names()[c].clone()).collect();
    let var_name = unique_name(var_column_name, &headers);
    headers.push(var_name);
    let value_name = unique_name(value_column_name, &headers);
    headers.push(value_name);

    let mut rows = Vec::with_capacity(table.num_rows() * (end - start + 1));
    for row in table.rows() {
        for c in start..=end {
            let mut out: Vec<String> = kept.iter().map(|&k| row[k].clone()).collect();
            out.push(table.column_names()[c].clone());
            out.push(row[c].clone());
            rows.push(out);
        }
    }
    Ok(Table::new(table.name(), headers, rows)?)
}

/// Lifts the distinct values of `pivot_column` into headers, filled from
/// `value_column`. All remaining columns form the row key.
pub fn apply_pivot(table: &Table, pivot_column: &str, value_column: &str) -> Result<Table, OpError> {
    let p = table.require_column(pivot_column)?;
    let v = table.require_column(value_column)?;
    if p == v {
        return Err(OpError::InvalidParameter(
            "pivot and value columns must differ".to_string(),
        ));
    }
    let keys: Vec<usize> = (0..table.num_columns()).filter(|c| *c != p && *c != v).collect();

    let mut pivot_values: Vec<String> = Vec::new();
    let mut pivot_index: HashMap<&str, usize> = HashMap::new();
    let mut key_rows: Vec<Vec<String>> = Vec::new();
    let mut key_index: HashMap<Vec<&str>, usize> = HashMap::new();
    let mut cells: HashMap<(usize, usize), &str> = HashMap::new();

    for row in table.rows() {
        let pv = row[p].as_str();
        let pi = *pivot_index.entry(pv).or_insert_with(|| {
            pivot_values.push(pv.to_string());
            pivot_values.len() - 1
        });
        let key: Vec<&str> = keys.iter().map(|&k| row[k].as_str()).collect();
        let next = key_rows.len();
        let ki = *key_index.entry(key).or_insert(next);
        if ki == next {
            key_rows.push(keys.iter().map(|&k| row[k].clone()).collect());
        }
        match cells.get(&(ki, pi)) {
            Some(existing) if *existing != row[v] => {
                return Err(OpError::PivotConflict {
                    key: key_rows[ki].clone(),
                    pivot_value: pv.to_string(),
                });
            }
            _ => {
                cells.insert((ki, pi), row[v].as_str());
            }
        }
    }

    let mut headers: Vec<String> = keys.iter().map(|&k| table.column_names()[k].clone()).collect();
    for pv in &pivot_values {
        let name = unique_name(pv, &headers);
        headers.push(name);
    }
    let rows = key_rows
        .into_iter()
        .enumerate()
        .map(|(ki, mut row)| {
            for pi in 0..pivot_values.len() {
                row.push(cells.get(&(ki, pi)).map(|s| s.to_string()).unwrap_or_default());
            }
            row
        })
        .collect();
    Ok(Table::new(table.name(), headers, rows)?)
}

/// Transposes the whole grid, header row included: the first column becomes
/// the header row and the header row becomes the first column.
///
/// Repeated values in the first column become suffixed headers, so the
/// operation is an involution only when those values are distinct.
pub fn apply_transpose(table: &Table) -> Result<Table, OpError> {
    if table.num_columns() == 0 {
        return Err(OpError::EmptyTable);
    }
    let mut headers = Vec::with_capacity(table.num_rows() + 1);
    headers.push(table.column_names()[0].clone());
    headers.extend(table.column_iter(0).map(String::from));
    let rows = (1..table.num_columns())
        .map(|c| {
            let mut row = Vec::with_capacity(table.num_rows() + 1);
            row.push(table.column_names()[c].clone());
            row.extend(table.column_iter(c).map(String::from));
            row
        })
        .collect();
    Ok(Table::new(table.name(), headers, rows)?)
}

fn append_column(table: &Table, output_column: &str, values: Vec<String>) -> Result<Table, OpError> {
    if table.column_index(output_column).is_some() {
        return Err(OpError::OutputExists(output_column.to_string()));
    }
    let mut headers = table.column_names().to_vec();
    headers.push(output_column.to_string());
    let rows = table
        .rows()
        .iter()
        .zip(values)
        .map(|(row, value)| {
            let mut row = row.clone();
            row.push(value);
            row
        })
        .collect();
    Ok(Table::new(table.name(), headers, rows)?)
}

/// Segment `select_pos` (0-based, left to right) of `cell` split on `delimiter`.
pub fn split_cell(cell: &str, delimiter: &str, select_pos: usize) -> String {
    cell.split(delimiter).nth(select_pos).unwrap_or("").to_string()
}

/// Characters `[start, start + length)` of `cell`, clipped at the end.
pub fn substring_cell(cell: &str, start: usize, length: usize) -> String {
    cell.chars().skip(start).take(length).collect()
}

pub fn apply_split(
    table: &Table,
    column: &str,
    delimiter: &str,
    select_pos: usize,
    output_column: &str,
) -> Result<Table, OpError> {
    let c = table.require_column(column)?;
    if delimiter.is_empty() {
        return Err(OpError::InvalidParameter("split delimiter must be non-empty".to_string()));
    }
    let values = table
        .column_iter(c)
        .map(|cell| split_cell(cell, delimiter, select_pos))
        .collect();
    append_column(table, output_column, values)
}

pub fn apply_substring(
    table: &Table,
    column: &str,
    start: usize,
    length: usize,
    output_column: &str,
) -> Result<Table, OpError> {
    let c = table.require_column(column)?;
    if length == 0 {
        return Err(OpError::InvalidParameter("substring length must be at least 1".to_string()));
    }
    let values = table
        .column_iter(c)
        .map(|cell| substring_cell(cell, start, length))
        .collect();
    append_column(table, output_column, values)
}

pub fn apply_concatenate(
    table: &Table,
    columns: &[String],
    delimiter: &str,
    output_column: &str,
) -> Result<Table, OpError> {
    if columns.len() < 2 {
        return Err(OpError::InvalidParameter(
            "concatenate needs at least 2 columns".to_string(),
        ));
    }
    let idx = columns
        .iter()
        .map(|c| table.require_column(c))
        .collect::<Result<Vec<_>, _>>()?;
    let values = table
        .rows()
        .iter()
        .map(|row| {
            idx.iter()
                .map(|&i| row[i].as_str())
                .collect::<Vec<_>>()
                .join(delimiter)
        })
        .collect();
    append_column(table, output_column, values)
}

/// Enumeration limits, normally taken from the scorer configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CandidateCaps {
    /// Maximum candidates per node, NoOp included.
    pub candidate_cap: usize,
    /// Maximum distinct values of a pivot column.
    pub pivot_cardinality_cap: usize,
    /// Minimum containment a string transform must reach in a target column.
    pub containment_threshold: f64,
}

impl Default for CandidateCaps {
    fn default() -> Self {
        CandidateCaps {
            candidate_cap: 8,
            pivot_cardinality_cap: 12,
            containment_threshold: 0.8,
        }
    }
}

// Sampling limits for join-directed string probing.
const PROBE_SOURCE_VALUES: usize = 64;
const PROBE_TARGET_VALUES: usize = 512;
const PROBE_WINDOWS: usize = 3;
const CONCAT_MAX_COLUMNS: usize = 8;
const CONCAT_PROBE_ROWS: usize = 8;

/// All structurally applicable candidates in generation order, NoOp first,
/// without ranking or capping.
///
/// `tree_index` names the context table this one descends from; string
/// candidates probe every other context table.
pub fn all_candidates(
    table: &Table,
    context: &ProjectContext,
    tree_index: Option<usize>,
    caps: &CandidateCaps,
) -> Vec<TransformStep> {
    let mut out = vec![TransformStep::NoOp {}];
    if table.num_columns() < 2 || table.num_rows() == 0 {
        return out;
    }
    out.extend(unpivot_candidates(table));
    out.extend(pivot_candidates(table, caps));
    out.push(TransformStep::Transpose {});
    let targets: Vec<BTreeSet<String>> = (0..context.len())
        .filter(|&j| Some(j) != tree_index)
        .flat_map(|j| context.domains(j).iter().cloned())
        .filter(|d| !d.is_empty())
        .collect();
    out.extend(string_candidates(table, &targets, caps));
    let mut seen = BTreeSet::new();
    out.retain(|s| seen.insert(s.clone()));
    out
}

/// Capped candidate list: NoOp first, then the remaining candidates ranked by
/// `rank` (descending, stable on generation order), `caps.candidate_cap` total.
pub fn enumerate_candidates<F>(
    table: &Table,
    context: &ProjectContext,
    tree_index: Option<usize>,
    caps: &CandidateCaps,
    mut rank: F,
) -> Vec<TransformStep>
where
    F: FnMut(&TransformStep) -> f64,
{
    let all = all_candidates(table, context, tree_index, caps);
    let mut rest: Vec<(f64, TransformStep)> = all
        .into_iter()
        .skip(1)
        .map(|s| (rank(&s), s))
        .collect();
    rest.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut out = vec![TransformStep::NoOp {}];
    out.extend(
        rest.into_iter()
            .take(caps.candidate_cap.saturating_sub(1))
            .map(|(_, s)| s),
    );
    out
}

fn unpivot_candidates(table: &Table) -> Vec<TransformStep> {
    let kinds = table.column_kinds();
    let names = table.column_names();
    let mut out = Vec::new();
    let mut start = 0;
    while start < kinds.len() {
        let mut end = start;
        while end + 1 < kinds.len() && kinds[end + 1] == kinds[start] {
            end += 1;
        }
        if end > start && kinds[start] != ColumnKind::Empty {
            for s in start..end {
                out.push(TransformStep::Unpivot {
                    start_column: names[s].clone(),
                    end_column: names[end].clone(),
                });
            }
        }
        start = end + 1;
    }
    out
}

fn pivot_candidates(table: &Table, caps: &CandidateCaps) -> Vec<TransformStep> {
    if table.num_columns() < 3 {
        return Vec::new();
    }
    let names = table.column_names();
    let mut out = Vec::new();
    for (p, kind) in table.column_kinds().iter().enumerate() {
        if *kind != ColumnKind::String {
            continue;
        }
        let distinct: BTreeSet<&str> = table.column_iter(p).collect();
        if distinct.len() < 2
            || distinct.len() > caps.pivot_cardinality_cap
            || distinct.len() >= table.num_rows()
        {
            continue;
        }
        for v in 0..table.num_columns() {
            if v != p {
                out.push(TransformStep::Pivot {
                    pivot_column: names[p].clone(),
                    value_column: names[v].clone(),
                });
            }
        }
    }
    out
}

/// Fraction of the distinct normalized values in `values` found in `target`.
pub fn containment<'a, I>(values: I, target: &BTreeSet<String>) -> f64
where
    I: IntoIterator<Item = &'a str>,
{
    let domain: BTreeSet<String> = values
        .into_iter()
        .map(normalize_cell)
        .filter(|v| !v.is_empty())
        .collect();
    if domain.is_empty() {
        return 0.0;
    }
    domain.iter().filter(|v| target.contains(*v)).count() as f64 / domain.len() as f64
}

fn best_containment(values: &[String], targets: &[BTreeSet<String>]) -> f64 {
    targets
        .iter()
        .map(|t| containment(values.iter().map(String::as_str), t))
        .fold(0.0, f64::max)
}

/// Distinct non-empty source values, capped for probing.
fn probe_values(table: &Table, column: usize) -> Vec<String> {
    let mut seen = BTreeSet::new();
    table
        .column_iter(column)
        .filter(|c| !c.trim().is_empty() && seen.insert(c.to_string()))
        .take(PROBE_SOURCE_VALUES)
        .map(String::from)
        .collect()
}

/// Most frequent `(start, length)` windows at which a target value appears
/// inside the source values.
fn substring_windows(values: &[String], target: &BTreeSet<String>) -> Vec<(usize, usize)> {
    let mut counts: HashMap<(usize, usize), usize> = HashMap::new();
    for value in values {
        let lowered = value.to_lowercase();
        if lowered.chars().count() != value.chars().count() {
            continue;
        }
        for t in target.iter().take(PROBE_TARGET_VALUES) {
            if t.chars().count() < 2 || t.len() >= lowered.len() {
                continue;
            }
            if let Some(byte_pos) = lowered.find(t.as_str()) {
                let start = lowered[..byte_pos].chars().count();
                *counts.entry((start, t.chars().count())).or_insert(0) += 1;
            }
        }
    }
    let mut windows: Vec<((usize, usize), usize)> = counts.into_iter().collect();
    windows.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    windows.into_iter().take(PROBE_WINDOWS).map(|(w, _)| w).collect()
}

fn string_candidates(
    table: &Table,
    targets: &[BTreeSet<String>],
    caps: &CandidateCaps,
) -> Vec<TransformStep> {
    if targets.is_empty() {
        return Vec::new();
    }
    let threshold = caps.containment_threshold;
    let names = table.column_names();
    let mut out = Vec::new();

    for (c, kind) in table.column_kinds().iter().enumerate() {
        if *kind == ColumnKind::Empty {
            continue;
        }
        let values = probe_values(table, c);
        let base: Vec<f64> = targets
            .iter()
            .map(|t| containment(values.iter().map(String::as_str), t))
            .collect();
        let lifts = |transformed: &[String]| {
            targets.iter().zip(&base).any(|(t, &b)| {
                let score = containment(transformed.iter().map(String::as_str), t);
                score >= threshold && score > b
            })
        };

        for delimiter in DELIMITERS {
            if !values.iter().any(|v| v.contains(delimiter)) {
                continue;
            }
            for pos in 0..=MAX_SELECT_POS {
                let segments: Vec<String> =
                    values.iter().map(|v| split_cell(v, delimiter, pos)).collect();
                if segments.iter().all(|s| s.is_empty()) {
                    break;
                }
                // A segment that only reaches a target after a further
                // Substring still earns the Split (the chain completes one
                // level deeper).
                let chained = || {
                    targets.iter().any(|t| {
                        substring_windows(&segments, t).into_iter().any(|(s, l)| {
                            let cut: Vec<String> =
                                segments.iter().map(|v| substring_cell(v, s, l)).collect();
                            containment(cut.iter().map(String::as_str), t) >= threshold
                        })
                    })
                };
                if lifts(&segments) || (best_containment(&segments, targets) < threshold && chained()) {
                    out.push(TransformStep::Split {
                        column: names[c].clone(),
                        delimiter: delimiter.to_string(),
                        select_pos: pos,
                        output_column: unique_name(&format!("{}_split", names[c]), names),
                    });
                }
            }
        }

        let mut windows = BTreeSet::new();
        for t in targets {
            windows.extend(substring_windows(&values, t));
        }
        for (start, length) in windows {
            let cut: Vec<String> = values.iter().map(|v| substring_cell(v, start, length)).collect();
            if lifts(&cut) {
                out.push(TransformStep::Substring {
                    column: names[c].clone(),
                    start,
                    length,
                    output_column: unique_name(&format!("{}_substring", names[c]), names),
                });
            }
        }
    }

    out.extend(concatenate_candidates(table, targets, caps));
    out
}

fn concatenate_candidates(
    table: &Table,
    targets: &[BTreeSet<String>],
    caps: &CandidateCaps,
) -> Vec<TransformStep> {
    let width = table.num_columns().min(CONCAT_MAX_COLUMNS);
    let names = table.column_names();
    let delimiters: Vec<&str> = std::iter::once("").chain(DELIMITERS).collect();
    let probe_rows = &table.rows()[..table.num_rows().min(CONCAT_PROBE_ROWS)];
    let mut out = Vec::new();
    for a in 0..width {
        for b in 0..width {
            if a == b {
                continue;
            }
            for delimiter in &delimiters {
                let joined = |row: &Vec<String>| format!("{}{}{}", row[a], delimiter, row[b]);
                let hit = probe_rows.iter().any(|row| {
                    let v = normalize_cell(&joined(row));
                    targets.iter().any(|t| t.contains(&v))
                });
                if !hit {
                    continue;
                }
                let all: Vec<String> = table.rows().iter().map(joined).collect();
                if best_containment(&all, targets) >= caps.containment_threshold {
                    out.push(TransformStep::Concatenate {
                        columns: vec![names[a].clone(), names[b].clone()],
                        delimiter: delimiter.to_string(),
                        output_column: unique_name(&format!("{}_concatenate", names[a]), names),
                    });
                }
            }
        }
    }
    out
}
