//! Transformation trees and the global search graph.
//!
//! Every input table roots a tree whose edges are candidate steps, all leaves
//! at depth `m`. Leaves of different trees are connected by join edges,
//! completed with 0.5-weight placeholders so every cross-tree leaf pair has an
//! edge. Each edge carries its probability `w` and the additive cost
//! `w_bar = -ln w`.
//!
//! Ids are dense and stable: vertices and transform edges are numbered in the
//! order they are added (depth-first preorder, trees in input order, when built
//! from tables) and join edges are sorted by endpoint ids. Pruning only flips
//! `alive` flags, so ids stay valid across precise-mode iterations.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::sync::Arc;

use rayon::prelude::*;
use thiserror::Error;

use crate::ops::{enumerate_candidates, TransformStep};
use crate::scoring::{score_column_pair, ColumnProfile, FeaturePool, JoinScore, Scorer, ScoringError};
use crate::tables::{ProjectContext, Table};

pub type VertexId = usize;
pub type EdgeId = usize;

/// Weight of a join edge between tables that do not join.
pub const PLACEHOLDER_WEIGHT: f64 = 0.5;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("project needs at least two tables")]
    TooFewTables,
    #[error("depth must be at least 1")]
    ZeroDepth,
    #[error("weight {0} is outside (0, 1]")]
    Weight(f64),
    #[error("{0}")]
    Structure(String),
    #[error("{pairs} leaf pairs exceed the budget of {budget}")]
    LeafPairBudget { pairs: u64, budget: u64 },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Scoring(#[from] ScoringError),
}

/// `-ln w`; exactly 0 for `w = 1`.
pub fn log_weight(w: f64) -> Result<f64, GraphError> {
    if !(w > 0.0 && w <= 1.0) {
        return Err(GraphError::Weight(w));
    }
    Ok(if w == 1.0 { 0.0 } else { -w.ln() })
}

#[derive(Debug, Clone)]
pub struct Vertex {
    pub id: VertexId,
    pub tree: usize,
    pub depth: usize,
    pub parent: Option<VertexId>,
    pub label: String,
    /// Materialized table; absent for hand-built graphs.
    pub table: Option<Arc<Table>>,
    pub producing_step: Option<TransformStep>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransformEdge {
    pub id: EdgeId,
    pub parent: VertexId,
    pub child: VertexId,
    pub step: Option<TransformStep>,
    pub w: f64,
    pub w_bar: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JoinEdge {
    pub id: EdgeId,
    /// Lower vertex id.
    pub a: VertexId,
    pub b: VertexId,
    /// Join columns (of `a`, of `b`); `None` for placeholders.
    pub columns: Option<(String, String)>,
    /// Highest-scoring column pair even when it is not joinable.
    pub best_pair: Option<(String, String)>,
    pub w: f64,
    pub w_bar: f64,
    pub placeholder: bool,
}

#[derive(Debug, Clone)]
pub struct SearchGraph {
    m: usize,
    tree_names: Vec<String>,
    vertices: Vec<Vertex>,
    transform_edges: Vec<TransformEdge>,
    join_edges: Vec<JoinEdge>,
    roots: Vec<VertexId>,
    children: Vec<Vec<EdgeId>>,
    in_edge: Vec<Option<EdgeId>>,
    vertex_alive: Vec<bool>,
    transform_alive: Vec<bool>,
    join_alive: Vec<bool>,
    join_index: HashMap<(VertexId, VertexId), EdgeId>,
}

impl SearchGraph {
    pub fn m(&self) -> usize {
        self.m
    }

    /// Number of trees (input tables).
    pub fn n(&self) -> usize {
        self.roots.len()
    }

    pub fn tree_names(&self) -> &[String] {
        &self.tree_names
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn vertex(&self, id: VertexId) -> &Vertex {
        &self.vertices[id]
    }

    pub fn transform_edges(&self) -> &[TransformEdge] {
        &self.transform_edges
    }

    pub fn transform_edge(&self, id: EdgeId) -> &TransformEdge {
        &self.transform_edges[id]
    }

    pub fn join_edges(&self) -> &[JoinEdge] {
        &self.join_edges
    }

    pub fn join_edge(&self, id: EdgeId) -> &JoinEdge {
        &self.join_edges[id]
    }

    /// Terminals: one root per tree, in tree order.
    pub fn roots(&self) -> &[VertexId] {
        &self.roots
    }

    pub fn is_vertex_alive(&self, id: VertexId) -> bool {
        self.vertex_alive[id]
    }

    pub fn is_transform_alive(&self, id: EdgeId) -> bool {
        self.transform_alive[id]
    }

    pub fn is_join_alive(&self, id: EdgeId) -> bool {
        self.join_alive[id]
    }

    pub fn alive_transform_edges(&self) -> impl Iterator<Item = &TransformEdge> {
        self.transform_edges.iter().filter(|e| self.transform_alive[e.id])
    }

    pub fn alive_join_edges(&self) -> impl Iterator<Item = &JoinEdge> {
        self.join_edges.iter().filter(|e| self.join_alive[e.id])
    }

    /// Live outgoing transform edges of a vertex.
    pub fn child_edges(&self, v: VertexId) -> impl Iterator<Item = &TransformEdge> {
        self.children[v]
            .iter()
            .filter(|e| self.transform_alive[**e])
            .map(|e| &self.transform_edges[*e])
    }

    /// The transform edge entering `v`, if `v` is not a root.
    pub fn parent_edge(&self, v: VertexId) -> Option<&TransformEdge> {
        self.in_edge[v].map(|e| &self.transform_edges[e])
    }

    /// Live leaves (depth m) of tree `tree`, ascending by id.
    pub fn leaves(&self, tree: usize) -> Vec<VertexId> {
        self.vertices
            .iter()
            .filter(|v| v.tree == tree && v.depth == self.m && self.vertex_alive[v.id])
            .map(|v| v.id)
            .collect()
    }

    pub fn leaf_count(&self, tree: usize) -> usize {
        self.leaves(tree).len()
    }

    /// Transform edges from the root down to `leaf`, root first.
    pub fn path_to(&self, leaf: VertexId) -> Vec<EdgeId> {
        let mut path = Vec::with_capacity(self.m);
        let mut v = leaf;
        while let Some(e) = self.in_edge[v] {
            path.push(e);
            v = self.transform_edges[e].parent;
        }
        path.reverse();
        path
    }

    /// Summed `w_bar` of the root path of `v`.
    pub fn path_cost(&self, v: VertexId) -> f64 {
        self.path_to(v)
            .iter()
            .map(|e| self.transform_edges[*e].w_bar)
            .sum()
    }

    /// The join edge between two leaves, in either order.
    pub fn join_between(&self, a: VertexId, b: VertexId) -> Option<&JoinEdge> {
        let key = (a.min(b), a.max(b));
        self.join_index
            .get(&key)
            .filter(|e| self.join_alive[**e])
            .map(|e| &self.join_edges[*e])
    }

    /// Total vertex count including pruned vertices.
    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    /// Marks a transform edge and the whole subtree below it dead, along with
    /// join edges touching dead leaves.
    pub fn remove_subtree(&mut self, edge: EdgeId) {
        let mut stack = vec![edge];
        while let Some(e) = stack.pop() {
            if !self.transform_alive[e] {
                continue;
            }
            self.transform_alive[e] = false;
            let child = self.transform_edges[e].child;
            self.vertex_alive[child] = false;
            stack.extend(self.children[child].iter().copied());
        }
        for j in 0..self.join_edges.len() {
            let je = &self.join_edges[j];
            if !self.vertex_alive[je.a] || !self.vertex_alive[je.b] {
                self.join_alive[j] = false;
            }
        }
    }

    /// Replaces the probability of a transform edge.
    pub fn set_transform_weight(&mut self, edge: EdgeId, w: f64) -> Result<(), GraphError> {
        let w_bar = log_weight(w)?;
        let e = &mut self.transform_edges[edge];
        e.w = w;
        e.w_bar = w_bar;
        Ok(())
    }

    /// Re-scores every live transform edge against the surviving leaves of the
    /// other trees (restricted features). Edges without tables are left alone.
    pub fn rescore_restricted(&mut self, scorer: &Scorer) -> Result<(), GraphError> {
        let pools: Vec<FeaturePool> = (0..self.n())
            .map(|i| {
                FeaturePool::new(
                    (0..self.n())
                        .filter(|&j| j != i)
                        .flat_map(|j| self.leaves(j))
                        .filter_map(|v| self.vertices[v].table.as_deref()),
                )
            })
            .collect();
        let updates: Vec<(EdgeId, f64)> = self
            .alive_transform_edges()
            .collect::<Vec<_>>()
            .par_iter()
            .filter_map(|e| {
                let step = e.step.as_ref()?;
                let parent = self.vertices[e.parent].table.as_deref()?;
                let child = self.vertices[e.child].table.as_deref()?;
                let tree = self.vertices[e.parent].tree;
                Some(
                    scorer
                        .score_applied(parent, child, step, &pools[tree])
                        .map(|p| (e.id, p)),
                )
            })
            .collect::<Result<_, _>>()?;
        for (e, p) in updates {
            self.set_transform_weight(e, p)?;
        }
        Ok(())
    }

    /// Line-oriented, tab-separated text dump; see [`parse_graph_text`].
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "m\t{}", self.m).unwrap();
        for (i, name) in self.tree_names.iter().enumerate() {
            writeln!(out, "tree\t{i}\t{name}").unwrap();
        }
        for v in &self.vertices {
            let parent = v.parent.map_or("-".to_string(), |p| p.to_string());
            writeln!(out, "V\t{}\t{}\t{}\t{}\t{}", v.id, v.tree, v.depth, parent, v.label).unwrap();
        }
        for e in &self.transform_edges {
            let step = e
                .step
                .as_ref()
                .map_or("-".to_string(), |s| serde_json::to_string(s).expect("step serializes"));
            writeln!(out, "T\t{}\t{}\t{:?}\t{}", e.parent, e.child, e.w, step).unwrap();
        }
        for e in &self.join_edges {
            if e.placeholder {
                continue;
            }
            let (ca, cb) = e
                .columns
                .clone()
                .map_or(("-".to_string(), "-".to_string()), |c| c);
            writeln!(out, "J\t{}\t{}\t{:?}\t{}\t{}", e.a, e.b, e.w, ca, cb).unwrap();
        }
        out
    }
}

/// Parses the text produced by [`SearchGraph::to_text`].
///
/// Records (tab-separated):
/// `m <depth>`, `tree <index> <name>`, `V <id> <tree> <depth> <parent|-> <label>`,
/// `T <parent> <child> <w> <step-json|->`, `J <a> <b> <w> <col-a|-> <col-b|->`.
/// Blank lines and lines starting with `#` are ignored. Leaf pairs without a
/// `J` record get placeholder edges.
pub fn parse_graph_text(text: &str) -> Result<SearchGraph, GraphError> {
    let mut m = None;
    let mut names: BTreeMap<usize, String> = BTreeMap::new();
    let mut vertices: Vec<(usize, usize, Option<usize>, String)> = Vec::new();
    let mut tedges: HashMap<usize, (usize, f64, Option<TransformStep>)> = HashMap::new();
    let mut jedges = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let err = |message: String| GraphError::Parse { line, message };
        let trimmed = raw.trim_end_matches('\r');
        if trimmed.trim().is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split('\t').collect();
        let num = |k: usize| -> Result<usize, GraphError> {
            fields
                .get(k)
                .ok_or_else(|| err(format!("missing field {k}")))?
                .parse()
                .map_err(|e| err(format!("field {k}: {e}")))
        };
        let float = |k: usize| -> Result<f64, GraphError> {
            fields
                .get(k)
                .ok_or_else(|| err(format!("missing field {k}")))?
                .parse()
                .map_err(|e| err(format!("field {k}: {e}")))
        };
        match fields[0] {
            "m" => m = Some(num(1)?),
            "tree" => {
                names.insert(num(1)?, fields.get(2).unwrap_or(&"").to_string());
            }
            "V" => {
                let id = num(1)?;
                if id != vertices.len() {
                    return Err(err(format!("vertex ids must be dense, expected {}", vertices.len())));
                }
                let parent = match fields.get(4) {
                    Some(&"-") => None,
                    _ => Some(num(4)?),
                };
                vertices.push((num(2)?, num(3)?, parent, fields.get(5).unwrap_or(&"").to_string()));
            }
            "T" => {
                let step = match fields.get(4) {
                    None | Some(&"-") => None,
                    Some(s) => Some(serde_json::from_str(s).map_err(|e| err(e.to_string()))?),
                };
                tedges.insert(num(2)?, (num(1)?, float(3)?, step));
            }
            "J" => {
                let cols = match (fields.get(4), fields.get(5)) {
                    (Some(a), Some(b)) if *a != "-" && *b != "-" => {
                        Some((a.to_string(), b.to_string()))
                    }
                    _ => None,
                };
                jedges.push((num(1)?, num(2)?, float(3)?, cols));
            }
            other => return Err(err(format!("unknown record {other:?}"))),
        }
    }
    let m = m.ok_or(GraphError::Parse { line: 0, message: "missing m record".into() })?;
    let n_trees = vertices.iter().map(|v| v.0 + 1).max().unwrap_or(0);
    let mut b = GraphBuilder::new(m);
    let mut ids = Vec::with_capacity(vertices.len());
    for (id, (tree, depth, parent, label)) in vertices.into_iter().enumerate() {
        let new_id = match parent {
            None => {
                if tree != b.n_trees() {
                    return Err(GraphError::Structure(format!(
                        "root {id} of tree {tree} out of order"
                    )));
                }
                let name = names.get(&tree).cloned().unwrap_or(label.clone());
                b.add_root_labeled(name, label)
            }
            Some(p) => {
                let (ep, w, step) = tedges.remove(&id).ok_or_else(|| {
                    GraphError::Structure(format!("vertex {id} has no transform edge"))
                })?;
                if ep != p {
                    return Err(GraphError::Structure(format!("edge into {id} has wrong parent")));
                }
                let pid = *ids.get(p).ok_or_else(|| {
                    GraphError::Structure(format!("parent {p} of {id} not declared first"))
                })?;
                b.add_child(pid, label, step, w)?
            }
        };
        if b.vertices[new_id].depth != depth {
            return Err(GraphError::Structure(format!("vertex {id} depth mismatch")));
        }
        ids.push(new_id);
    }
    if n_trees != b.n_trees() {
        return Err(GraphError::Structure("tree indices are not dense".into()));
    }
    for (a, bb, w, cols) in jedges {
        b.add_join(a, bb, w, cols)?;
    }
    b.build()
}

/// Incremental construction of a [`SearchGraph`].
#[derive(Debug, Clone)]
pub struct GraphBuilder {
    m: usize,
    tree_names: Vec<String>,
    vertices: Vec<Vertex>,
    transform_edges: Vec<TransformEdge>,
    joins: BTreeMap<(VertexId, VertexId), JoinEdge>,
}

impl GraphBuilder {
    pub fn new(m: usize) -> Self {
        GraphBuilder {
            m,
            tree_names: Vec::new(),
            vertices: Vec::new(),
            transform_edges: Vec::new(),
            joins: BTreeMap::new(),
        }
    }

    pub fn n_trees(&self) -> usize {
        self.tree_names.len()
    }

    /// Starts a new tree; returns its root.
    pub fn add_root(&mut self, name: impl Into<String>) -> VertexId {
        let name = name.into();
        self.add_root_labeled(name.clone(), name)
    }

    fn add_root_labeled(&mut self, name: String, label: String) -> VertexId {
        let id = self.vertices.len();
        self.vertices.push(Vertex {
            id,
            tree: self.tree_names.len(),
            depth: 0,
            parent: None,
            label,
            table: None,
            producing_step: None,
        });
        self.tree_names.push(name);
        id
    }

    pub fn add_child(
        &mut self,
        parent: VertexId,
        label: impl Into<String>,
        step: Option<TransformStep>,
        w: f64,
    ) -> Result<VertexId, GraphError> {
        let w_bar = log_weight(w)?;
        let p = self
            .vertices
            .get(parent)
            .ok_or_else(|| GraphError::Structure(format!("unknown parent {parent}")))?;
        if p.depth >= self.m {
            return Err(GraphError::Structure(format!("vertex {parent} is already at depth m")));
        }
        let id = self.vertices.len();
        let (tree, depth) = (p.tree, p.depth + 1);
        self.vertices.push(Vertex {
            id,
            tree,
            depth,
            parent: Some(parent),
            label: label.into(),
            table: None,
            producing_step: step.clone(),
        });
        self.transform_edges.push(TransformEdge {
            id: self.transform_edges.len(),
            parent,
            child: id,
            step,
            w,
            w_bar,
        });
        Ok(id)
    }

    pub fn set_table(&mut self, v: VertexId, table: Arc<Table>) {
        self.vertices[v].table = Some(table);
    }

    /// Adds (or replaces) the join edge between two leaves of different trees.
    /// `columns: None` or `w ≤ 0.5` makes it a placeholder with weight 0.5.
    pub fn add_join(
        &mut self,
        a: VertexId,
        b: VertexId,
        w: f64,
        columns: Option<(String, String)>,
    ) -> Result<(), GraphError> {
        self.add_join_with_pair(a, b, w, columns.clone(), columns)
    }

    fn add_join_with_pair(
        &mut self,
        a: VertexId,
        b: VertexId,
        w: f64,
        columns: Option<(String, String)>,
        best_pair: Option<(String, String)>,
    ) -> Result<(), GraphError> {
        log_weight(w)?;
        let (va, vb) = match (self.vertices.get(a), self.vertices.get(b)) {
            (Some(x), Some(y)) => (x, y),
            _ => return Err(GraphError::Structure(format!("join {a}-{b}: unknown vertex"))),
        };
        if va.tree == vb.tree {
            return Err(GraphError::Structure(format!("join {a}-{b} within one tree")));
        }
        if va.depth != self.m || vb.depth != self.m {
            return Err(GraphError::Structure(format!("join {a}-{b} between non-leaves")));
        }
        let placeholder = w <= PLACEHOLDER_WEIGHT;
        let (lo, hi, columns, best_pair) = if a < b {
            (a, b, columns, best_pair)
        } else {
            let swap = |c: Option<(String, String)>| c.map(|(x, y)| (y, x));
            (b, a, swap(columns), swap(best_pair))
        };
        let w = if placeholder { PLACEHOLDER_WEIGHT } else { w };
        self.joins.insert(
            (lo, hi),
            JoinEdge {
                id: 0,
                a: lo,
                b: hi,
                columns: if placeholder { None } else { columns },
                best_pair,
                w,
                w_bar: log_weight(w)?,
                placeholder,
            },
        );
        Ok(())
    }

    /// Checks uniform leaf depth, fills missing leaf pairs with placeholders
    /// and freezes the graph.
    pub fn build(mut self) -> Result<SearchGraph, GraphError> {
        if self.m == 0 {
            return Err(GraphError::ZeroDepth);
        }
        if self.tree_names.len() < 2 {
            return Err(GraphError::TooFewTables);
        }
        let n_v = self.vertices.len();
        let mut children = vec![Vec::new(); n_v];
        let mut in_edge = vec![None; n_v];
        for e in &self.transform_edges {
            children[e.parent].push(e.id);
            in_edge[e.child] = Some(e.id);
        }
        for v in &self.vertices {
            if v.depth < self.m && children[v.id].is_empty() {
                return Err(GraphError::Structure(format!(
                    "vertex {} at depth {} has no children; leaves must be at depth {}",
                    v.id, v.depth, self.m
                )));
            }
        }
        let leaves: Vec<Vec<VertexId>> = (0..self.tree_names.len())
            .map(|t| {
                self.vertices
                    .iter()
                    .filter(|v| v.tree == t && v.depth == self.m)
                    .map(|v| v.id)
                    .collect()
            })
            .collect();
        for i in 0..leaves.len() {
            for j in i + 1..leaves.len() {
                for &a in &leaves[i] {
                    for &b in &leaves[j] {
                        let key = (a.min(b), a.max(b));
                        if !self.joins.contains_key(&key) {
                            self.add_join_with_pair(a, b, PLACEHOLDER_WEIGHT, None, None)?;
                        }
                    }
                }
            }
        }
        let mut join_edges: Vec<JoinEdge> = self.joins.into_values().collect();
        let mut join_index = HashMap::with_capacity(join_edges.len());
        for (i, e) in join_edges.iter_mut().enumerate() {
            e.id = i;
            join_index.insert((e.a, e.b), i);
        }
        let roots = self
            .vertices
            .iter()
            .filter(|v| v.parent.is_none())
            .map(|v| v.id)
            .collect();
        Ok(SearchGraph {
            m: self.m,
            tree_names: self.tree_names,
            vertex_alive: vec![true; n_v],
            transform_alive: vec![true; self.transform_edges.len()],
            join_alive: vec![true; join_edges.len()],
            vertices: self.vertices,
            transform_edges: self.transform_edges,
            join_edges,
            roots,
            children,
            in_edge,
            join_index,
        })
    }
}

/// One node of a transformation tree before weights are assigned.
#[derive(Debug, Clone)]
struct TreeNode {
    parent: Option<usize>,
    depth: usize,
    step: Option<TransformStep>,
    table: Arc<Table>,
}

/// Transformation tree of `context.table(index)` up to depth `m`, in
/// depth-first preorder. Children are ranked by their score against the raw
/// other tables and capped; the NoOp child is always kept.
fn build_tree_nodes(
    context: &ProjectContext,
    index: usize,
    m: usize,
    scorer: &Scorer,
) -> Result<Vec<TreeNode>, GraphError> {
    let pool = FeaturePool::from_context(context, index);
    let caps = scorer.config().caps();
    let mut nodes = vec![TreeNode {
        parent: None,
        depth: 0,
        step: None,
        table: Arc::clone(context.table(index)),
    }];
    // Explicit stack keeps preorder without recursion: push children reversed.
    let mut stack = vec![0usize];
    let mut order = Vec::new();
    let mut expanded: Vec<TreeNode> = Vec::new();
    while let Some(i) = stack.pop() {
        order.push(i);
        let node = nodes[i].clone();
        if node.depth == m {
            continue;
        }
        let mut applied: HashMap<TransformStep, Option<(Table, f64)>> = HashMap::new();
        let mut first_error = None;
        let picked = enumerate_candidates(&node.table, context, Some(index), &caps, |step| {
            match scorer.score_step(&node.table, step, &pool) {
                Ok((out, p)) => {
                    applied.insert(step.clone(), Some((out, p)));
                    p
                }
                Err(ScoringError::Op(_)) => {
                    applied.insert(step.clone(), None);
                    f64::NEG_INFINITY
                }
                Err(e) => {
                    first_error.get_or_insert(e);
                    f64::NEG_INFINITY
                }
            }
        });
        if let Some(e) = first_error {
            return Err(e.into());
        }
        let mut kids = Vec::new();
        for step in picked {
            let table = if step.is_noop() {
                (*node.table).clone()
            } else {
                match applied.remove(&step) {
                    Some(Some((t, _))) => t,
                    _ => continue,
                }
            };
            nodes.push(TreeNode {
                parent: Some(i),
                depth: node.depth + 1,
                step: Some(step),
                table: Arc::new(table),
            });
            kids.push(nodes.len() - 1);
        }
        stack.extend(kids.into_iter().rev());
    }
    // Renumber into preorder.
    let mut position = vec![0usize; nodes.len()];
    for (new, &old) in order.iter().enumerate() {
        position[old] = new;
    }
    for &old in &order {
        let mut node = nodes[old].clone();
        node.parent = node.parent.map(|p| position[p]);
        expanded.push(node);
    }
    Ok(expanded)
}

/// Join scores for every cross-tree leaf pair, as (leaf, leaf, score).
///
/// Leaves of one tree share most of their columns, so each tree pair scores
/// its distinct column profiles once into a dense matrix and every leaf pair
/// reads its maximum from there. Ties keep the first column pair in
/// row-major order, as [`Scorer::table_join_score`] does.
fn score_leaf_joins(
    leaves: &[Vec<(VertexId, Arc<Table>)>],
    scorer: &Scorer,
) -> Vec<(VertexId, VertexId, JoinScore)> {
    // Per tree: distinct profiles, and per leaf the profile index of each column.
    type Indexed = (Vec<Arc<ColumnProfile>>, Vec<Vec<usize>>);
    let indexed: Vec<Indexed> = leaves
        .iter()
        .map(|tree| {
            let mut distinct: Vec<Arc<ColumnProfile>> = Vec::new();
            let mut seen: HashMap<u64, usize> = HashMap::new();
            let columns = tree
                .iter()
                .map(|(_, t)| {
                    (0..t.num_columns())
                        .map(|c| {
                            let p = scorer.profile(t, c);
                            *seen.entry(p.digest).or_insert_with(|| {
                                distinct.push(Arc::clone(&p));
                                distinct.len() - 1
                            })
                        })
                        .collect()
                })
                .collect();
            (distinct, columns)
        })
        .collect();
    let tree_pairs: Vec<(usize, usize)> = (0..leaves.len())
        .flat_map(|i| (i + 1..leaves.len()).map(move |j| (i, j)))
        .collect();
    tree_pairs
        .par_iter()
        .flat_map_iter(|&(i, j)| {
            let (da, ca) = &indexed[i];
            let (db, cb) = &indexed[j];
            let mut matrix = vec![f64::NAN; da.len() * db.len()];
            let mut out = Vec::with_capacity(leaves[i].len() * leaves[j].len());
            for (la, (a, ta)) in leaves[i].iter().enumerate() {
                for (lb, (b, tb)) in leaves[j].iter().enumerate() {
                    let mut best: Option<(f64, usize, usize)> = None;
                    for (x, &pa) in ca[la].iter().enumerate() {
                        for (y, &pb) in cb[lb].iter().enumerate() {
                            let cell = &mut matrix[pa * db.len() + pb];
                            if cell.is_nan() {
                                *cell = score_column_pair(&da[pa], &db[pb], scorer.config());
                            }
                            if best.is_none_or(|(s, _, _)| *cell > s) {
                                best = Some((*cell, x, y));
                            }
                        }
                    }
                    let score = match best {
                        Some((raw, x, y)) => JoinScore::from_raw(
                            raw,
                            (ta.column_names()[x].clone(), tb.column_names()[y].clone()),
                        ),
                        None => JoinScore::from_raw(0.0, (String::new(), String::new())),
                    };
                    out.push((*a, *b, score));
                }
            }
            out
        })
        .collect()
}

/// Builds the global search graph of `tables` with depth `m`.
///
/// Transform weights use optimistic features: each tree is scored against
/// every leaf of the other trees. Join edges connect every cross-tree leaf pair.
pub fn build_search_graph(
    tables: Vec<Table>,
    m: usize,
    scorer: &Scorer,
) -> Result<SearchGraph, GraphError> {
    if tables.len() < 2 {
        return Err(GraphError::TooFewTables);
    }
    if m == 0 {
        return Err(GraphError::ZeroDepth);
    }
    let context = ProjectContext::new(tables);
    let trees: Vec<Vec<TreeNode>> = (0..context.len())
        .into_par_iter()
        .map(|i| build_tree_nodes(&context, i, m, scorer))
        .collect::<Result<_, _>>()?;

    let leaf_tables: Vec<Vec<&Table>> = trees
        .iter()
        .map(|nodes| {
            nodes
                .iter()
                .filter(|n| n.depth == m)
                .map(|n| n.table.as_ref())
                .collect()
        })
        .collect();
    let leaf_counts: Vec<u64> = leaf_tables.iter().map(|l| l.len() as u64).collect();
    let mut pairs = 0u64;
    for i in 0..leaf_counts.len() {
        for j in i + 1..leaf_counts.len() {
            pairs = pairs.saturating_add(leaf_counts[i] * leaf_counts[j]);
        }
    }
    let budget = scorer.config().leaf_pair_budget;
    if pairs > budget {
        return Err(GraphError::LeafPairBudget { pairs, budget });
    }

    let weights: Vec<Vec<f64>> = trees
        .par_iter()
        .enumerate()
        .map(|(i, nodes)| {
            let pool = FeaturePool::new(
                leaf_tables
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != i)
                    .flat_map(|(_, l)| l.iter().copied()),
            );
            nodes
                .iter()
                .skip(1)
                .map(|n| {
                    let parent = &nodes[n.parent.expect("non-root")].table;
                    let step = n.step.as_ref().expect("non-root");
                    scorer.score_applied(parent, &n.table, step, &pool)
                })
                .collect::<Result<Vec<f64>, _>>()
        })
        .collect::<Result<_, _>>()?;

    let mut b = GraphBuilder::new(m);
    let mut leaf_ids: Vec<Vec<(VertexId, Arc<Table>)>> = Vec::new();
    for (i, nodes) in trees.iter().enumerate() {
        let mut ids = Vec::with_capacity(nodes.len());
        let root = b.add_root(context.table(i).name());
        b.set_table(root, Arc::clone(&nodes[0].table));
        ids.push(root);
        for (k, node) in nodes.iter().enumerate().skip(1) {
            let step = node.step.clone().expect("non-root");
            let id = b.add_child(ids[node.parent.expect("non-root")], step.label(), Some(step), weights[i][k - 1])?;
            b.set_table(id, Arc::clone(&node.table));
            ids.push(id);
        }
        leaf_ids.push(
            nodes
                .iter()
                .zip(&ids)
                .filter(|(n, _)| n.depth == m)
                .map(|(n, id)| (*id, Arc::clone(&n.table)))
                .collect(),
        );
    }

    let scores = score_leaf_joins(&leaf_ids, scorer);
    for (a, c, s) in scores {
        let pair = Some(s.best_pair.clone()).filter(|(x, y)| !x.is_empty() && !y.is_empty());
        let columns = if s.placeholder { None } else { pair.clone() };
        b.add_join_with_pair(a, c, s.normalized, columns, pair)?;
    }
    b.build()
}
