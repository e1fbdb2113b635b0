//! Serializable prep plans.
//!
//! ```json
//! {
//!   "format_version": 1,
//!   "tables": [{"name": "Fertility", "steps": [{"op": "unpivot", "params": {...}}]}],
//!   "joins": [{"left_table": "Date", "left_column": "Year",
//!              "right_table": "Fertility", "right_column": "variable", "score": 0.999999}],
//!   "metadata": {"mode": "optimistic", "m": 2, ...}
//! }
//! ```
//!
//! NoOp steps are omitted; [`TablePlan::padded_steps`] restores them.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::graph::SearchGraph;
use crate::ops::TransformStep;
use crate::solver::Solution;

pub const PLAN_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrepPlan {
    pub format_version: u32,
    pub tables: Vec<TablePlan>,
    pub joins: Vec<PlanJoin>,
    #[serde(default)]
    pub metadata: PlanMetadata,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TablePlan {
    pub name: String,
    pub steps: Vec<TransformStep>,
}

impl TablePlan {
    /// Steps padded with NoOp to length `m`.
    pub fn padded_steps(&self, m: usize) -> Vec<TransformStep> {
        let mut steps = self.steps.clone();
        while steps.len() < m {
            steps.push(TransformStep::NoOp {});
        }
        steps
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanJoin {
    pub left_table: String,
    pub left_column: String,
    pub right_table: String,
    pub right_column: String,
    pub score: f64,
}

impl PlanJoin {
    /// Endpoint pair in a canonical order, for order-insensitive comparison.
    pub fn key(&self) -> ((String, String), (String, String)) {
        let l = (self.left_table.clone(), self.left_column.clone());
        let r = (self.right_table.clone(), self.right_column.clone());
        if l <= r {
            (l, r)
        } else {
            (r, l)
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PlanMetadata {
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub mode: String,
    #[serde(default)]
    pub m: usize,
    /// Product of the chosen edge probabilities.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objective: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    /// Phase durations in milliseconds.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub timing_ms: BTreeMap<String, f64>,
    #[serde(default, flatten)]
    pub extra: BTreeMap<String, serde_json::Value>,
}

impl PrepPlan {
    pub fn new(tables: Vec<TablePlan>, joins: Vec<PlanJoin>) -> Self {
        PrepPlan {
            format_version: PLAN_FORMAT_VERSION,
            tables,
            joins,
            metadata: PlanMetadata::default(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plan serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn table(&self, name: &str) -> Option<&TablePlan> {
        self.tables.iter().find(|t| t.name == name)
    }
}

/// Reads the chosen steps and joins off a solved graph. Tables follow tree
/// order; joins follow join-edge id order. Placeholder joins name the best
/// column pair found, falling back to the first columns.
pub fn plan_from_solution(graph: &SearchGraph, solution: &Solution) -> PrepPlan {
    let tables = solution
        .path_edges
        .iter()
        .enumerate()
        .map(|(t, path)| TablePlan {
            name: graph.tree_names()[t].clone(),
            steps: path
                .iter()
                .filter_map(|e| graph.transform_edge(*e).step.clone())
                .filter(|s| !s.is_noop())
                .collect(),
        })
        .collect();
    let first_column = |v: usize| {
        graph
            .vertex(v)
            .table
            .as_ref()
            .and_then(|t| t.column_names().first().cloned())
            .unwrap_or_default()
    };
    let joins = solution
        .join_edges
        .iter()
        .map(|&id| {
            let e = graph.join_edge(id);
            let (left_column, right_column) = e
                .columns
                .clone()
                .or_else(|| e.best_pair.clone())
                .unwrap_or_else(|| (first_column(e.a), first_column(e.b)));
            PlanJoin {
                left_table: graph.tree_names()[graph.vertex(e.a).tree].clone(),
                left_column,
                right_table: graph.tree_names()[graph.vertex(e.b).tree].clone(),
                right_column,
                score: e.w,
            }
        })
        .collect();
    PrepPlan::new(tables, joins)
}
