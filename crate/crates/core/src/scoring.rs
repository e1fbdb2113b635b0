//! Transformation and join probabilities.
//!
//! A transformation step is scored by a logistic model over table features:
//! the shape of the table before and after the step, and how its headers and
//! values overlap with the other tables of the project. The set of "other
//! tables" is a [`FeaturePool`]; in optimistic mode it holds every leaf of the
//! other transformation trees, in restricted mode only the surviving ones.
//!
//! Joins are scored per column pair and lifted to tables by taking the max.

use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::hash::{Hash, Hasher};
use std::path::Path;
use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ops::{
    apply_step, substring_cell, CandidateCaps, OpError, OperatorKind, TransformStep,
    DELIMITERS,
};
use crate::tables::{
    domain_of, normalize_cell, parses_as_datetime, parses_as_float, parses_as_integer, ColumnKind,
    ProjectContext, Table,
};

pub const DEFAULT_CONFIG_TOML: &str = include_str!("../config/default_scorer.toml");

#[derive(Debug, Error)]
pub enum ScoringError {
    #[error("invalid scorer config: {0}")]
    Config(String),
    #[error("no weight row for operator {0}")]
    MissingOperator(OperatorKind),
    #[error("table {0:?} is not part of the project")]
    NotInContext(String),
    #[error("{0} is not a string transformation")]
    NotStringStep(OperatorKind),
    #[error(transparent)]
    Op(#[from] OpError),
}

/// Named real-valued features.
///
/// Overlap features lie in [0, 1], counts are non-negative and
/// `column_row_ratio` is positive.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector(BTreeMap<String, f64>);

impl FeatureVector {
    pub fn new() -> Self {
        FeatureVector::default()
    }

    pub fn set(&mut self, name: impl Into<String>, value: f64) {
        self.0.insert(name.into(), value);
    }

    pub fn get(&self, name: &str) -> f64 {
        self.0.get(name).copied().unwrap_or(0.0)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.0.contains_key(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }

    fn extend_prefixed(&mut self, prefix: &str, other: &FeatureVector) {
        for (k, v) in other.iter() {
            self.set(format!("{prefix}{k}"), v);
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightRow {
    #[serde(default)]
    pub bias: f64,
    #[serde(default)]
    pub weights: BTreeMap<String, f64>,
}

impl WeightRow {
    pub fn logit(&self, features: &FeatureVector) -> f64 {
        self.bias
            + self
                .weights
                .iter()
                .map(|(name, w)| w * features.get(name))
                .sum::<f64>()
    }
}

/// A pinned probability for one step on one table, matched by fingerprint or
/// by table name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Override {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fingerprint: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<String>,
    pub step: TransformStep,
    pub probability: f64,
}

impl Override {
    fn matches(&self, table: &Table, step: &TransformStep) -> bool {
        let who = match (&self.fingerprint, &self.table) {
            (Some(fp), _) => fp == table.fingerprint(),
            (None, Some(name)) => name == table.name(),
            (None, None) => false,
        };
        who && self.step.same_action(step)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScorerConfig {
    pub version: u32,
    pub epsilon: f64,
    pub candidate_cap: usize,
    pub pivot_cardinality_cap: usize,
    pub containment_threshold: f64,
    pub join_boundary: f64,
    pub leaf_pair_budget: u64,
    pub oracle_bound: u64,
    pub precise_max_iter: usize,
    pub operators: BTreeMap<OperatorKind, WeightRow>,
    pub join: WeightRow,
    #[serde(default)]
    pub overrides: Vec<Override>,
}

impl Default for ScorerConfig {
    fn default() -> Self {
        ScorerConfig::from_toml_str(DEFAULT_CONFIG_TOML).expect("bundled config is valid")
    }
}

impl ScorerConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ScoringError> {
        let config: ScorerConfig =
            toml::from_str(text).map_err(|e| ScoringError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, ScoringError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ScoringError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ScoringError> {
        let bad = |m: &str| Err(ScoringError::Config(m.to_string()));
        if !(self.epsilon > 0.0 && self.epsilon < 0.5) {
            return bad("epsilon must lie in (0, 0.5)");
        }
        if self.candidate_cap < 1 || self.pivot_cardinality_cap < 1 {
            return bad("caps must be at least 1");
        }
        if self.join_boundary != 0.5 {
            return bad("join_boundary must be exactly 0.5");
        }
        if !(0.0..=1.0).contains(&self.containment_threshold) {
            return bad("containment_threshold must lie in [0, 1]");
        }
        if self.precise_max_iter < 1 {
            return bad("precise_max_iter must be at least 1");
        }
        for o in &self.overrides {
            if o.fingerprint.is_none() && o.table.is_none() {
                return bad("override needs a fingerprint or a table name");
            }
            if !(o.probability > 0.0 && o.probability <= 1.0) {
                return bad("override probability must lie in (0, 1]");
            }
        }
        Ok(())
    }

    pub fn caps(&self) -> CandidateCaps {
        CandidateCaps {
            candidate_cap: self.candidate_cap,
            pivot_cardinality_cap: self.pivot_cardinality_cap,
            containment_threshold: self.containment_threshold,
        }
    }

    pub fn clamp(&self, p: f64) -> f64 {
        p.clamp(self.epsilon, 1.0 - self.epsilon)
    }

    pub fn override_for(&self, table: &Table, step: &TransformStep) -> Option<f64> {
        self.overrides
            .iter()
            .find(|o| o.matches(table, step))
            .map(|o| self.clamp(o.probability))
    }
}

pub fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Header and value sets of the "other tables" a table is compared with.
///
/// Sets are deduplicated and indexed by value so max-overlap queries cost one
/// pass over the query set.
#[derive(Debug, Clone, Default)]
pub struct FeaturePool {
    domains: Vec<PoolDomain>,
    domain_index: HashMap<String, Vec<u32>>,
    header_sets: Vec<usize>,
    header_index: HashMap<String, Vec<u32>>,
}

#[derive(Debug, Clone)]
struct PoolDomain {
    values: BTreeSet<String>,
    numeric_columns: usize,
    datetime_columns: usize,
}

impl FeaturePool {
    pub fn new<'a>(tables: impl IntoIterator<Item = &'a Table>) -> Self {
        let mut pool = FeaturePool::default();
        let mut seen_tables = HashSet::new();
        let mut seen_domains: HashSet<BTreeSet<String>> = HashSet::new();
        let mut seen_headers: HashSet<BTreeSet<String>> = HashSet::new();
        for table in tables {
            if !seen_tables.insert(table.fingerprint().to_string()) {
                continue;
            }
            let headers = crate::tables::header_set(table);
            if !headers.is_empty() && seen_headers.insert(headers.clone()) {
                let id = pool.header_sets.len() as u32;
                for h in &headers {
                    pool.header_index.entry(h.clone()).or_default().push(id);
                }
                pool.header_sets.push(headers.len());
            }
            let numeric = table.column_kinds().iter().filter(|k| k.is_numeric()).count();
            let datetime = table
                .column_kinds()
                .iter()
                .filter(|k| **k == ColumnKind::Datetime)
                .count();
            for c in 0..table.num_columns() {
                let values = domain_of(table, c);
                if values.is_empty() || !seen_domains.insert(values.clone()) {
                    continue;
                }
                let id = pool.domains.len() as u32;
                for v in &values {
                    pool.domain_index.entry(v.clone()).or_default().push(id);
                }
                pool.domains.push(PoolDomain {
                    values,
                    numeric_columns: numeric,
                    datetime_columns: datetime,
                });
            }
        }
        pool
    }

    /// Pool of the raw input tables other than `index`.
    pub fn from_context(context: &ProjectContext, index: usize) -> Self {
        FeaturePool::new(context.others(index).map(|j| context.table(j).as_ref()))
    }

    pub fn is_empty(&self) -> bool {
        self.domains.is_empty() && self.header_sets.is_empty()
    }

    fn hit_counts(index: &HashMap<String, Vec<u32>>, query: &BTreeSet<String>) -> HashMap<u32, usize> {
        let mut counts = HashMap::new();
        for v in query {
            if let Some(ids) = index.get(v) {
                for id in ids {
                    *counts.entry(*id).or_insert(0) += 1;
                }
            }
        }
        counts
    }

    /// max over pool domains D of |query ∩ D| / |query|.
    pub fn max_domain_containment(&self, query: &BTreeSet<String>) -> f64 {
        if query.is_empty() {
            return 0.0;
        }
        let best = Self::hit_counts(&self.domain_index, query)
            .into_values()
            .max()
            .unwrap_or(0);
        best as f64 / query.len() as f64
    }

    /// max over pool header sets H' of |query ∩ H'| / |query|.
    pub fn max_header_containment(&self, query: &BTreeSet<String>) -> f64 {
        if query.is_empty() {
            return 0.0;
        }
        let best = Self::hit_counts(&self.header_index, query)
            .into_values()
            .max()
            .unwrap_or(0);
        best as f64 / query.len() as f64
    }

    /// The pool domain that best matches a transformed column, by
    /// (key-side, foreign-key-side) percentage.
    fn best_target(&self, values: &[String]) -> Option<(&PoolDomain, f64, f64)> {
        let query: BTreeSet<String> = values
            .iter()
            .map(|v| normalize_cell(v))
            .filter(|v| !v.is_empty())
            .collect();
        let counts = Self::hit_counts(&self.domain_index, &query);
        let mut best: Option<(u32, f64, f64)> = None;
        let mut ids: Vec<u32> = counts.keys().copied().collect();
        ids.sort_unstable();
        for id in ids {
            let domain = &self.domains[id as usize];
            let key_side = counts[&id] as f64 / domain.values.len() as f64;
            let fk_side = fk_hit_rate(values, &domain.values);
            let better = match best {
                None => true,
                Some((_, k, f)) => (key_side, fk_side) > (k, f),
            };
            if better {
                best = Some((id, key_side, fk_side));
            }
        }
        best.map(|(id, k, f)| (&self.domains[id as usize], k, f))
    }
}

/// Fraction of non-empty cells whose normalized value lies in `domain`.
fn fk_hit_rate(cells: &[String], domain: &BTreeSet<String>) -> f64 {
    let mut total = 0usize;
    let mut hits = 0usize;
    for cell in cells {
        let v = normalize_cell(cell);
        if v.is_empty() {
            continue;
        }
        total += 1;
        if domain.contains(&v) {
            hits += 1;
        }
    }
    if total == 0 {
        0.0
    } else {
        hits as f64 / total as f64
    }
}

/// Whether features are computed against all candidate leaves of the other
/// trees or only the surviving ones. The pool passed in carries the
/// difference; the mode is kept for reporting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureMode {
    Optimistic,
    Restricted,
}

fn header_is_numeric(h: &str) -> bool {
    parses_as_integer(h) || parses_as_float(h)
}

/// Table-level features of `table` against `pool`.
pub fn table_features(table: &Table, pool: &FeaturePool) -> FeatureVector {
    let mut f = FeatureVector::new();
    let cols = table.num_columns();
    f.set(
        "column_row_ratio",
        cols as f64 / table.num_rows().max(1) as f64,
    );
    let headers = crate::tables::header_set(table);
    f.set("header_overlap", pool.max_header_containment(&headers));
    let vdo = if cols == 0 {
        0.0
    } else {
        (0..cols)
            .map(|c| pool.max_domain_containment(&domain_of(table, c)))
            .sum::<f64>()
            / cols as f64
    };
    f.set("value_domain_overlap", vdo);
    f.set("headers_value_overlap", pool.max_domain_containment(&headers));

    let names = table.column_names();
    let numeric = names.iter().filter(|h| header_is_numeric(h)).count();
    let floats = names
        .iter()
        .filter(|h| parses_as_float(h) && !parses_as_integer(h))
        .count();
    let datetimes = names.iter().filter(|h| parses_as_datetime(h)).count();
    f.set("numeric_header_count", numeric as f64);
    f.set("float_header_count", floats as f64);
    f.set("datetime_header_count", datetimes as f64);
    f.set(
        "numeric_header_fraction",
        if cols == 0 { 0.0 } else { (numeric + datetimes) as f64 / cols as f64 },
    );
    f
}

/// Table-level features of an input table against the supplied pool.
///
/// The table must belong to `context` (by name).
pub fn extract_reshape_features(
    table: &Table,
    context: &ProjectContext,
    pool: &FeaturePool,
) -> Result<FeatureVector, ScoringError> {
    if context.index_of(table.name()).is_none() {
        return Err(ScoringError::NotInContext(table.name().to_string()));
    }
    Ok(table_features(table, pool))
}

fn unpivot_features(table: &Table, start: &str, end: &str, f: &mut FeatureVector) {
    let (Some(s), Some(e)) = (table.column_index(start), table.column_index(end)) else {
        return;
    };
    let len = e + 1 - s;
    f.set("unpivot_range_fraction", len as f64 / table.num_columns() as f64);
    let names = &table.column_names()[s..=e];
    let numeric = names
        .iter()
        .filter(|h| header_is_numeric(h) || parses_as_datetime(h))
        .count();
    f.set("unpivot_header_numeric_fraction", numeric as f64 / len as f64);
    let cells = table.num_rows() * len;
    let empty = table
        .rows()
        .iter()
        .flat_map(|r| r[s..=e].iter())
        .filter(|c| c.trim().is_empty())
        .count();
    f.set(
        "unpivot_sparsity",
        if cells == 0 { 0.0 } else { empty as f64 / cells as f64 },
    );
    f.set(
        "unpivot_range_string",
        if table.column_kinds()[s] == ColumnKind::String { 1.0 } else { 0.0 },
    );
}

fn string_features(
    source: &Table,
    step: &TransformStep,
    best: Option<(&PoolDomain, f64, f64)>,
    f: &mut FeatureVector,
) {
    let kind = step.kind();
    f.set(format!("type_{kind}"), 1.0);
    let (key_side, fk_side) = best.map(|(_, k, fk)| (k, fk)).unwrap_or((0.0, 0.0));
    f.set("key_side_join_pct", key_side);
    f.set("fk_side_join_pct", fk_side);
    let (numeric_cols, datetime_cols) = best
        .map(|(d, _, _)| (d.numeric_columns, d.datetime_columns))
        .unwrap_or((0, 0));
    f.set("target_numeric_columns", numeric_cols as f64);
    f.set("target_datetime_columns", datetime_cols as f64);

    let sources: Vec<&str> = match step {
        TransformStep::Split { column, .. } | TransformStep::Substring { column, .. } => {
            vec![column.as_str()]
        }
        TransformStep::Concatenate { columns, .. } => columns.iter().map(String::as_str).collect(),
        _ => Vec::new(),
    };
    let kinds: Vec<ColumnKind> = sources
        .iter()
        .filter_map(|c| source.column_index(c))
        .map(|i| source.column_kinds()[i])
        .collect();
    f.set(
        "source_numeric_column",
        if kinds.iter().any(|k| k.is_numeric()) { 1.0 } else { 0.0 },
    );
    f.set(
        "source_float_column",
        if kinds.contains(&ColumnKind::Float) { 1.0 } else { 0.0 },
    );
    f.set(
        "input_numeric_columns",
        source.column_kinds().iter().filter(|k| k.is_numeric()).count() as f64,
    );
    let delimiter = match step {
        TransformStep::Split { delimiter, .. } | TransformStep::Concatenate { delimiter, .. } => {
            Some(delimiter.as_str())
        }
        _ => None,
    };
    if let Some(d) = delimiter {
        if let Some(i) = DELIMITERS.iter().position(|x| *x == d) {
            f.set(format!("delim_{}", DELIMITER_NAMES[i]), 1.0);
        }
    }
}

const DELIMITER_NAMES: [&str; 12] = [
    "comma", "pipe", "dot", "dash", "underscore", "slash", "colon", "semicolon", "space", "hash",
    "at", "amp",
];

/// Best containment a following Substring could reach on a Split output.
fn chained_join_pct(values: &[String], pool: &FeaturePool) -> f64 {
    let mut best = 0.0f64;
    let longest = values.iter().map(|v| v.chars().count()).max().unwrap_or(0);
    // Window search is bounded by the longest segment; segments are short.
    for start in 0..longest.min(16) {
        for length in 2..=(longest - start).min(16) {
            let cut: Vec<String> = values.iter().map(|v| substring_cell(v, start, length)).collect();
            if let Some((_, key_side, _)) = pool.best_target(&cut) {
                best = best.max(key_side);
            }
        }
    }
    best
}

fn distinct_values(table: &Table, column: &str) -> Vec<String> {
    let Some(c) = table.column_index(column) else {
        return Vec::new();
    };
    let mut seen = BTreeSet::new();
    table
        .column_iter(c)
        .filter(|v| seen.insert(*v))
        .map(String::from)
        .collect()
}

/// Features of a string step against one explicit target table: join
/// percentages of the generated column with the target's best column.
pub fn extract_string_features(
    source: &Table,
    target: &Table,
    step: &TransformStep,
) -> Result<FeatureVector, ScoringError> {
    if !step.kind().is_string_op() {
        return Err(ScoringError::NotStringStep(step.kind()));
    }
    let out = apply_step(source, step)?;
    let column = step.output_column().expect("string steps name an output");
    let values = distinct_values(&out, column);
    let pool = FeaturePool::new([target]);
    let mut f = FeatureVector::new();
    string_features(source, step, pool.best_target(&values), &mut f);
    Ok(f)
}

/// All features used to score `step` on `source`, given its output `out`.
pub fn extract_step_features(
    source: &Table,
    out: &Table,
    step: &TransformStep,
    pool: &FeaturePool,
) -> FeatureVector {
    let before = table_features(source, pool);
    let after = if step.is_noop() {
        before.clone()
    } else {
        table_features(out, pool)
    };
    let mut f = FeatureVector::new();
    f.extend_prefixed("src_", &before);
    f.extend_prefixed("out_", &after);
    for name in ["value_domain_overlap", "headers_value_overlap", "header_overlap"] {
        f.set(format!("delta_{name}"), after.get(name) - before.get(name));
    }
    match step {
        TransformStep::Unpivot { start_column, end_column } => {
            unpivot_features(source, start_column, end_column, &mut f)
        }
        TransformStep::Pivot { pivot_column, value_column } => {
            let distinct = distinct_values(source, pivot_column).len();
            f.set("pivot_cardinality", distinct as f64);
            let numeric = source
                .column_index(value_column)
                .map(|i| source.column_kinds()[i].is_numeric())
                .unwrap_or(false);
            f.set("pivot_value_numeric", if numeric { 1.0 } else { 0.0 });
        }
        TransformStep::Split { .. }
        | TransformStep::Substring { .. }
        | TransformStep::Concatenate { .. } => {
            let column = step.output_column().expect("string steps name an output");
            let values = distinct_values(out, column);
            string_features(source, step, pool.best_target(&values), &mut f);
            if step.kind() == OperatorKind::Split {
                f.set("chained_join_pct", chained_join_pct(&values, pool));
            }
        }
        TransformStep::Transpose {} | TransformStep::NoOp {} => {}
    }
    f
}

/// p(step | table): override if one matches, else the clamped logistic score.
pub fn score_transform(
    step: &TransformStep,
    table: &Table,
    features: &FeatureVector,
    config: &ScorerConfig,
) -> Result<f64, ScoringError> {
    if let Some(p) = config.override_for(table, step) {
        return Ok(p);
    }
    let row = config
        .operators
        .get(&step.kind())
        .ok_or(ScoringError::MissingOperator(step.kind()))?;
    Ok(config.clamp(logistic(row.logit(features))))
}

/// Value statistics of one column used by the join model.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnProfile {
    pub kind: ColumnKind,
    /// (hash, normalized value, occurrence count) over non-empty cells,
    /// sorted by hash then value.
    pub values: Vec<(u64, String, usize)>,
    pub non_empty: usize,
    /// Hash of kind and values; equal columns share it across tables.
    pub digest: u64,
}

fn hash_of<T: Hash + ?Sized>(value: &T) -> u64 {
    let mut h = DefaultHasher::new();
    value.hash(&mut h);
    h.finish()
}

impl ColumnProfile {
    pub fn new(table: &Table, column: usize) -> Self {
        let mut counts: HashMap<String, usize> = HashMap::new();
        let mut non_empty = 0;
        for cell in table.column_iter(column) {
            let v = normalize_cell(cell);
            if v.is_empty() {
                continue;
            }
            non_empty += 1;
            *counts.entry(v).or_insert(0) += 1;
        }
        let mut values: Vec<(u64, String, usize)> =
            counts.into_iter().map(|(v, n)| (hash_of(v.as_str()), v, n)).collect();
        values.sort_unstable();
        let kind = table.column_kinds()[column];
        let digest = hash_of(&(kind, &values));
        ColumnProfile { kind, values, non_empty, digest }
    }

    pub fn distinct(&self) -> usize {
        self.values.len()
    }

    /// Distinct values per non-empty cell; 1 for a key column.
    pub fn keyness(&self) -> f64 {
        if self.non_empty == 0 {
            0.0
        } else {
            self.distinct() as f64 / self.non_empty as f64
        }
    }
}

/// Shared values of two columns, found in one merge pass.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct Overlap {
    distinct: usize,
    /// Cells of the first column whose value occurs in the second.
    cells_a: usize,
    /// Cells of the second column whose value occurs in the first.
    cells_b: usize,
}

fn overlap(a: &ColumnProfile, b: &ColumnProfile) -> Overlap {
    let mut o = Overlap::default();
    let (mut i, mut j) = (0, 0);
    while i < a.values.len() && j < b.values.len() {
        let (x, y) = (&a.values[i], &b.values[j]);
        match (x.0, &x.1).cmp(&(y.0, &y.1)) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                o.distinct += 1;
                o.cells_a += x.2;
                o.cells_b += y.2;
                i += 1;
                j += 1;
            }
        }
    }
    o
}

/// Feature values with `key` as the referenced side; `fk_cells` counts the
/// foreign-key cells found among the key values.
fn join_feature_values(
    key: &ColumnProfile,
    fk: &ColumnProfile,
    shared: usize,
    fk_cells: usize,
) -> [(&'static str, f64); 4] {
    let union = key.distinct() + fk.distinct() - shared;
    let containment = (shared as f64 / key.distinct().max(1) as f64)
        .max(shared as f64 / fk.distinct().max(1) as f64);
    let jaccard = if union == 0 { 0.0 } else { shared as f64 / union as f64 };
    let hit_rate = if fk.non_empty == 0 { 0.0 } else { fk_cells as f64 / fk.non_empty as f64 };
    let kind_match = if key.kind == fk.kind {
        1.0
    } else if key.kind.is_numeric() && fk.kind.is_numeric() {
        0.5
    } else {
        0.0
    };
    [
        ("max_containment", containment),
        ("jaccard", jaccard),
        ("key_hit", key.keyness() * hit_rate),
        ("kind_match", kind_match),
    ]
}

/// Join features with `key` as the referenced (primary-key) side.
pub fn column_join_features(key: &ColumnProfile, fk: &ColumnProfile) -> FeatureVector {
    let o = overlap(key, fk);
    let mut f = FeatureVector::new();
    for (name, value) in join_feature_values(key, fk, o.distinct, o.cells_b) {
        f.set(name, value);
    }
    f
}

fn join_probability(values: &[(&str, f64)], config: &ScorerConfig) -> f64 {
    let row = &config.join;
    let logit = values
        .iter()
        .fold(row.bias, |acc, (name, v)| acc + row.weights.get(*name).copied().unwrap_or(0.0) * v);
    config.clamp(logistic(logit))
}

fn joinable(a: &ColumnProfile, b: &ColumnProfile) -> bool {
    a.non_empty > 0 && b.non_empty > 0 && !a.kind.incompatible_with(b.kind)
}

/// M_J(key, fk): probability that `fk` references `key`.
pub fn score_column_join(key: &ColumnProfile, fk: &ColumnProfile, config: &ScorerConfig) -> f64 {
    if !joinable(key, fk) {
        return config.epsilon;
    }
    let o = overlap(key, fk);
    join_probability(&join_feature_values(key, fk, o.distinct, o.cells_b), config)
}

/// Larger of the two orientations of [`score_column_join`].
pub fn score_column_pair(a: &ColumnProfile, b: &ColumnProfile, config: &ScorerConfig) -> f64 {
    if !joinable(a, b) {
        return config.epsilon;
    }
    let o = overlap(a, b);
    let ab = join_probability(&join_feature_values(a, b, o.distinct, o.cells_b), config);
    let ba = join_probability(&join_feature_values(b, a, o.distinct, o.cells_a), config);
    ab.max(ba)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JoinScore {
    /// max over column pairs and both orientations.
    pub raw: f64,
    /// max(raw, 0.5).
    pub normalized: f64,
    /// (column of the first table, column of the second table).
    pub best_pair: (String, String),
    /// raw ≤ 0.5: no usable join between the two tables.
    pub placeholder: bool,
}

impl JoinScore {
    pub fn from_raw(raw: f64, best_pair: (String, String)) -> Self {
        JoinScore {
            raw,
            normalized: raw.max(0.5),
            best_pair,
            placeholder: raw <= 0.5,
        }
    }
}

/// Scorer with shared caches keyed by table fingerprint.
///
/// Safe to use from many threads; caches only ever gain entries and every
/// entry is a pure function of its key.
#[derive(Debug)]
pub struct Scorer {
    config: ScorerConfig,
    profiles: RwLock<HashMap<(String, usize), Arc<ColumnProfile>>>,
    joins: RwLock<HashMap<(String, String), JoinScore>>,
}

impl Scorer {
    pub fn new(config: ScorerConfig) -> Self {
        Scorer {
            config,
            profiles: RwLock::new(HashMap::new()),
            joins: RwLock::new(HashMap::new()),
        }
    }

    pub fn config(&self) -> &ScorerConfig {
        &self.config
    }

    pub fn profile(&self, table: &Table, column: usize) -> Arc<ColumnProfile> {
        let key = (table.fingerprint().to_string(), column);
        if let Some(p) = self.profiles.read().expect("cache lock").get(&key) {
            return Arc::clone(p);
        }
        let profile = Arc::new(ColumnProfile::new(table, column));
        let mut cache = self.profiles.write().expect("cache lock");
        Arc::clone(cache.entry(key).or_insert(profile))
    }

    /// Scores `step` on `source` against `pool`, applying the step first.
    pub fn score_step(
        &self,
        source: &Table,
        step: &TransformStep,
        pool: &FeaturePool,
    ) -> Result<(Table, f64), ScoringError> {
        let out = apply_step(source, step)?;
        let p = self.score_applied(source, &out, step, pool)?;
        Ok((out, p))
    }

    pub fn score_applied(
        &self,
        source: &Table,
        out: &Table,
        step: &TransformStep,
        pool: &FeaturePool,
    ) -> Result<f64, ScoringError> {
        if let Some(p) = self.config.override_for(source, step) {
            return Ok(p);
        }
        let features = extract_step_features(source, out, step, pool);
        score_transform(step, source, &features, &self.config)
    }

    /// p̃ / p of two tables: best column pair over both orientations, ties to
    /// the lowest (column of `a`, column of `b`) indices.
    pub fn table_join_score(&self, a: &Table, b: &Table) -> JoinScore {
        let key = (a.fingerprint().to_string(), b.fingerprint().to_string());
        if let Some(s) = self.joins.read().expect("cache lock").get(&key) {
            return s.clone();
        }
        let score = self.compute_table_join(a, b);
        self.joins
            .write()
            .expect("cache lock")
            .entry(key)
            .or_insert(score)
            .clone()
    }

    fn compute_table_join(&self, a: &Table, b: &Table) -> JoinScore {
        let mut best: Option<(f64, usize, usize)> = None;
        let pbs: Vec<_> = (0..b.num_columns()).map(|j| self.profile(b, j)).collect();
        for i in 0..a.num_columns() {
            let pa = self.profile(a, i);
            for (j, pb) in pbs.iter().enumerate() {
                let s = score_column_pair(&pa, pb, &self.config);
                if best.is_none_or(|(bs, _, _)| s > bs) {
                    best = Some((s, i, j));
                }
            }
        }
        match best {
            Some((raw, i, j)) => JoinScore::from_raw(
                raw,
                (a.column_names()[i].clone(), b.column_names()[j].clone()),
            ),
            None => JoinScore::from_raw(0.0, (String::new(), String::new())),
        }
    }
}

impl Default for Scorer {
    fn default() -> Self {
        Scorer::new(ScorerConfig::default())
    }
}
