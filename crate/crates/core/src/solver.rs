//! Solving the most-probable-prep problem on a search graph.
//!
//! A valid solution picks one root-to-leaf path per tree and a spanning tree
//! of join edges over the chosen leaves. Its cost is the sum of `w_bar` over
//! all chosen edges, so minimizing cost maximizes the product of
//! probabilities.
//!
//! [`solve_optimistic`] adds a constant penalty `2p` to every edge and runs
//! Kou's Steiner-tree approximation with the tree roots as terminals. The
//! penalty makes any tree with extra edges more expensive than the baseline
//! (best leaf per tree plus a maximum spanning tree of joins), so the result is
//! either a valid solution or the baseline. [`solve_precise`] alternates
//! solving, pruning and rescoring.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};
use std::f64::consts::LN_2;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::graph::{EdgeId, GraphError, SearchGraph, VertexId};
use crate::scoring::Scorer;

/// Default number of solve/prune/rescore rounds in precise mode.
pub const DEFAULT_PRECISE_ITERATIONS: usize = 5;

/// Default cap on leaf combinations the brute-force oracle will enumerate.
pub const DEFAULT_ORACLE_BOUND: u64 = 100_000;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("structural error: {0}")]
    Structural(String),
    #[error("terminals are not connected")]
    Disconnected,
    #[error("oracle refused: {combinations} leaf combinations exceed the bound of {bound}")]
    OracleBound { combinations: u64, bound: u64 },
    #[error("invalid solution: {}", .0.join("; "))]
    Invalid(Vec<String>),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// An edge of the search graph: transform edges and join edges have
/// separate id spaces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum EdgeRef {
    Transform(EdgeId),
    Join(EdgeId),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Solution {
    /// Chosen leaf per tree.
    pub leaves: Vec<VertexId>,
    /// Transform edges per tree, root first.
    pub path_edges: Vec<Vec<EdgeId>>,
    /// Join edges, ascending by id.
    pub join_edges: Vec<EdgeId>,
    pub cost_raw: f64,
    pub cost_penalized: f64,
    pub probability: f64,
}

impl Solution {
    /// Assembles a solution from chosen leaves and join edges; costs are
    /// summed in canonical order (trees, then path order, then join ids).
    pub fn from_parts(
        graph: &SearchGraph,
        leaves: Vec<VertexId>,
        mut join_edges: Vec<EdgeId>,
        penalty: f64,
    ) -> Solution {
        join_edges.sort_unstable();
        let path_edges: Vec<Vec<EdgeId>> = leaves.iter().map(|&l| graph.path_to(l)).collect();
        let mut cost_raw = 0.0;
        let mut probability = 1.0;
        for e in path_edges.iter().flatten() {
            let edge = graph.transform_edge(*e);
            cost_raw += edge.w_bar;
            probability *= edge.w;
        }
        for e in &join_edges {
            let edge = graph.join_edge(*e);
            cost_raw += edge.w_bar;
            probability *= edge.w;
        }
        let count = path_edges.iter().map(Vec::len).sum::<usize>() + join_edges.len();
        Solution {
            leaves,
            path_edges,
            join_edges,
            cost_raw,
            cost_penalized: cost_raw + 2.0 * penalty * count as f64,
            probability,
        }
    }

    pub fn edges(&self) -> Vec<EdgeRef> {
        let mut out: Vec<EdgeRef> = self
            .path_edges
            .iter()
            .flatten()
            .map(|e| EdgeRef::Transform(*e))
            .chain(self.join_edges.iter().map(|e| EdgeRef::Join(*e)))
            .collect();
        out.sort_unstable();
        out
    }

    pub fn edge_count(&self) -> usize {
        self.path_edges.iter().map(Vec::len).sum::<usize>() + self.join_edges.len()
    }

    /// Same chosen edges, regardless of weights.
    pub fn same_edges(&self, other: &Solution) -> bool {
        self.leaves == other.leaves && self.join_edges == other.join_edges
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PenaltyContext {
    pub p: f64,
    pub best_leaves: Vec<VertexId>,
    pub best_leaf_costs: Vec<f64>,
}

/// Cheapest live leaf of `tree` by root-path cost; ties go to the lower id.
pub fn best_leaf(graph: &SearchGraph, tree: usize) -> Option<(VertexId, f64)> {
    let mut best: Option<(VertexId, f64)> = None;
    for leaf in graph.leaves(tree) {
        let cost = graph.path_cost(leaf);
        if best.is_none_or(|(_, c)| cost < c) {
            best = Some((leaf, cost));
        }
    }
    best
}

pub fn penalty_context(graph: &SearchGraph) -> Result<PenaltyContext, SolverError> {
    let mut best_leaves = Vec::with_capacity(graph.n());
    let mut best_leaf_costs = Vec::with_capacity(graph.n());
    for t in 0..graph.n() {
        let (leaf, cost) = best_leaf(graph, t)
            .ok_or_else(|| SolverError::Structural(format!("tree {t} has no live leaf")))?;
        best_leaves.push(leaf);
        best_leaf_costs.push(cost);
    }
    let p = best_leaf_costs.iter().sum::<f64>() + (graph.n() as f64 - 1.0) * LN_2;
    Ok(PenaltyContext { p, best_leaves, best_leaf_costs })
}

/// Disjoint-set forest over dense indices.
#[derive(Debug, Clone)]
struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect(), rank: vec![0; n] }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            Ordering::Less => self.parent[ra] = rb,
            Ordering::Greater => self.parent[rb] = ra,
            Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
        true
    }
}

/// Minimum spanning tree of the live join edges among `leaves` (Kruskal,
/// ties by edge id). Returns `None` if the leaves are not connected.
pub fn join_spanning_tree(graph: &SearchGraph, leaves: &[VertexId]) -> Option<Vec<EdgeId>> {
    let mut candidates = Vec::new();
    for (i, &a) in leaves.iter().enumerate() {
        for (j, &b) in leaves.iter().enumerate().skip(i + 1) {
            if let Some(e) = graph.join_between(a, b) {
                candidates.push((e.w_bar, e.id, i, j));
            }
        }
    }
    candidates.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
    let mut uf = UnionFind::new(leaves.len());
    let mut chosen = Vec::with_capacity(leaves.len().saturating_sub(1));
    for (_, id, i, j) in candidates {
        if uf.union(i, j) {
            chosen.push(id);
        }
    }
    (chosen.len() + 1 == leaves.len()).then_some(chosen)
}

/// Best leaf per tree plus the maximum-probability spanning tree of joins.
pub fn baseline_solution(graph: &SearchGraph) -> Result<Solution, SolverError> {
    let pc = penalty_context(graph)?;
    baseline_with(graph, &pc)
}

fn baseline_with(graph: &SearchGraph, pc: &PenaltyContext) -> Result<Solution, SolverError> {
    let joins = join_spanning_tree(graph, &pc.best_leaves).ok_or(SolverError::Disconnected)?;
    Ok(Solution::from_parts(graph, pc.best_leaves.clone(), joins, pc.p))
}

/// Undirected graph with non-negative edge weights, as seen by the Steiner
/// solver.
#[derive(Debug, Clone, Default)]
pub struct WeightedGraph {
    adjacency: Vec<Vec<(usize, usize)>>,
    edges: Vec<(usize, usize, f64)>,
}

impl WeightedGraph {
    pub fn new(nodes: usize) -> Self {
        WeightedGraph { adjacency: vec![Vec::new(); nodes], edges: Vec::new() }
    }

    pub fn add_edge(&mut self, u: usize, v: usize, w: f64) -> usize {
        let id = self.edges.len();
        self.edges.push((u, v, w));
        self.adjacency[u].push((v, id));
        self.adjacency[v].push((u, id));
        id
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    pub fn weight(&self, edge: usize) -> f64 {
        self.edges[edge].2
    }

    /// Single-source shortest paths: distances and the edge used to reach
    /// each node. Heap order is (distance, node) and only strict
    /// improvements replace a predecessor, so results are deterministic.
    pub fn dijkstra(&self, source: usize) -> (Vec<f64>, Vec<Option<usize>>) {
        let n = self.node_count();
        let mut dist = vec![f64::INFINITY; n];
        let mut pred = vec![None; n];
        let mut done = vec![false; n];
        let mut heap = BinaryHeap::new();
        dist[source] = 0.0;
        heap.push(Reverse((TotalF64(0.0), source)));
        while let Some(Reverse((TotalF64(d), u))) = heap.pop() {
            if done[u] {
                continue;
            }
            done[u] = true;
            for &(v, e) in &self.adjacency[u] {
                let nd = d + self.edges[e].2;
                if nd < dist[v] {
                    dist[v] = nd;
                    pred[v] = Some(e);
                    heap.push(Reverse((TotalF64(nd), v)));
                }
            }
        }
        (dist, pred)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct TotalF64(f64);

impl Eq for TotalF64 {}

impl PartialOrd for TotalF64 {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for TotalF64 {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Kruskal over a subset of edges; ties by edge id. Returns chosen edge ids.
fn kruskal(graph: &WeightedGraph, edges: impl IntoIterator<Item = usize>) -> Vec<usize> {
    let mut list: Vec<usize> = edges.into_iter().collect();
    list.sort_by(|a, b| graph.weight(*a).total_cmp(&graph.weight(*b)).then(a.cmp(b)));
    let mut uf = UnionFind::new(graph.node_count());
    list.into_iter()
        .filter(|&e| {
            let (u, v, _) = graph.edges[e];
            uf.union(u, v)
        })
        .collect()
}

/// Kou–Markowsky–Berman Steiner tree approximation.
///
/// 1. shortest paths from every terminal (metric closure over terminals);
/// 2. MST of the closure;
/// 3. replace closure edges by their shortest paths;
/// 4. MST of the subgraph formed by those path edges;
/// 5. repeatedly drop non-terminal leaves.
///
/// Returns the chosen edge ids, ascending.
pub fn kou_steiner(graph: &WeightedGraph, terminals: &[usize]) -> Result<Vec<usize>, SolverError> {
    let mut terminals: Vec<usize> = terminals.to_vec();
    terminals.sort_unstable();
    terminals.dedup();
    if terminals.len() <= 1 {
        return Ok(Vec::new());
    }
    let sp: Vec<(Vec<f64>, Vec<Option<usize>>)> =
        terminals.iter().map(|&t| graph.dijkstra(t)).collect();

    // Closure MST with Prim over the (small) complete terminal graph.
    let k = terminals.len();
    let mut in_tree = vec![false; k];
    let mut best: Vec<(f64, usize)> = vec![(f64::INFINITY, usize::MAX); k];
    in_tree[0] = true;
    for j in 1..k {
        best[j] = (sp[0].0[terminals[j]], 0);
    }
    let mut closure_edges = Vec::with_capacity(k - 1);
    for _ in 1..k {
        let mut pick: Option<usize> = None;
        for j in 0..k {
            if in_tree[j] {
                continue;
            }
            let better = match pick {
                None => true,
                Some(p) => best[j].0 < best[p].0,
            };
            if better {
                pick = Some(j);
            }
        }
        let j = pick.expect("a terminal remains");
        if !best[j].0.is_finite() {
            return Err(SolverError::Disconnected);
        }
        in_tree[j] = true;
        closure_edges.push((best[j].1, j));
        for x in 0..k {
            if !in_tree[x] {
                let d = sp[j].0[terminals[x]];
                if d < best[x].0 {
                    best[x] = (d, j);
                }
            }
        }
    }

    let mut path_edges = BTreeSet::new();
    for (i, j) in closure_edges {
        let pred = &sp[i].1;
        let mut v = terminals[j];
        while v != terminals[i] {
            let e = pred[v].ok_or(SolverError::Disconnected)?;
            path_edges.insert(e);
            let (a, b, _) = graph.edges[e];
            v = if a == v { b } else { a };
        }
    }

    let mut tree: BTreeSet<usize> = kruskal(graph, path_edges).into_iter().collect();
    let is_terminal: BTreeSet<usize> = terminals.iter().copied().collect();
    loop {
        let mut degree: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for &e in &tree {
            let (u, v, _) = graph.edges[e];
            degree.entry(u).or_default().push(e);
            degree.entry(v).or_default().push(e);
        }
        let drop: Vec<usize> = degree
            .iter()
            .filter(|(node, es)| es.len() == 1 && !is_terminal.contains(node))
            .map(|(_, es)| es[0])
            .collect();
        if drop.is_empty() {
            break;
        }
        for e in drop {
            tree.remove(&e);
        }
    }
    Ok(tree.into_iter().collect())
}

/// Result of validating an edge set against the solution rules.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Validation {
    pub valid: bool,
    pub violations: Vec<String>,
    /// Leaf reached in each tree, when the tree's edges form a proper path.
    pub leaves: Vec<Option<VertexId>>,
}

/// Checks an arbitrary edge set: one root-to-leaf path of length m per tree,
/// n−1 join edges spanning exactly the reached leaves, and the whole set a
/// tree containing every root.
///
/// Unknown ids are a structural error, distinct from invalidity.
pub fn validate_edges(graph: &SearchGraph, edges: &[EdgeRef]) -> Result<Validation, SolverError> {
    let (m, n) = (graph.m(), graph.n());
    let mut violations = Vec::new();
    let mut per_tree: Vec<Vec<EdgeId>> = vec![Vec::new(); n];
    let mut joins = Vec::new();
    let mut seen = BTreeSet::new();
    for &e in edges {
        if !seen.insert(e) {
            violations.push(format!("edge {e:?} listed twice"));
            continue;
        }
        match e {
            EdgeRef::Transform(id) => {
                if id >= graph.transform_edges().len() {
                    return Err(SolverError::Structural(format!("unknown transform edge {id}")));
                }
                if !graph.is_transform_alive(id) {
                    violations.push(format!("transform edge {id} was pruned"));
                }
                let tree = graph.vertex(graph.transform_edge(id).parent).tree;
                per_tree[tree].push(id);
            }
            EdgeRef::Join(id) => {
                if id >= graph.join_edges().len() {
                    return Err(SolverError::Structural(format!("unknown join edge {id}")));
                }
                if !graph.is_join_alive(id) {
                    violations.push(format!("join edge {id} was pruned"));
                }
                joins.push(id);
            }
        }
    }

    let total_transform: usize = per_tree.iter().map(Vec::len).sum();
    if total_transform != m * n {
        violations.push(format!(
            "{total_transform} transformation edges, expected {}",
            m * n
        ));
    }
    let mut leaves = vec![None; n];
    for (t, tree_edges) in per_tree.iter().enumerate() {
        if tree_edges.len() != m {
            violations.push(format!(
                "tree {t} has {} transformation edges, expected {m}",
                tree_edges.len()
            ));
            continue;
        }
        let mut v = graph.roots()[t];
        let mut ok = true;
        for _ in 0..m {
            let next: Vec<&EdgeId> = tree_edges
                .iter()
                .filter(|e| graph.transform_edge(**e).parent == v)
                .collect();
            if next.len() != 1 {
                ok = false;
                break;
            }
            v = graph.transform_edge(*next[0]).child;
        }
        if ok {
            leaves[t] = Some(v);
        } else {
            violations.push(format!("tree {t} edges do not form a root-to-leaf path"));
        }
    }

    if joins.len() + 1 != n {
        violations.push(format!("{} join edges, expected {}", joins.len(), n - 1));
    }
    let chosen: Vec<VertexId> = leaves.iter().flatten().copied().collect();
    let mut uf = UnionFind::new(graph.vertex_count());
    let mut cycle = false;
    for &j in &joins {
        let e = graph.join_edge(j);
        for end in [e.a, e.b] {
            if !chosen.contains(&end) {
                violations.push(format!(
                    "join endpoint not a selected leaf: join edge {j} uses vertex {end}"
                ));
            }
        }
        if !uf.union(e.a, e.b) {
            cycle = true;
        }
    }
    if cycle {
        violations.push("join edges contain a cycle".to_string());
    }
    if chosen.len() == n && n > 1 {
        let root = uf.find(chosen[0]);
        if chosen.iter().any(|&l| uf.find(l) != root) {
            violations.push("join edges do not connect all selected leaves".to_string());
        }
    }

    // Whole edge set: a tree that contains every root.
    let mut uf = UnionFind::new(graph.vertex_count());
    let mut touched = BTreeSet::new();
    let mut acyclic = true;
    for &e in seen.iter() {
        let (a, b) = match e {
            EdgeRef::Transform(id) => {
                let t = graph.transform_edge(id);
                (t.parent, t.child)
            }
            EdgeRef::Join(id) => {
                let j = graph.join_edge(id);
                (j.a, j.b)
            }
        };
        touched.insert(a);
        touched.insert(b);
        acyclic &= uf.union(a, b);
    }
    let spans_roots = graph.roots().iter().all(|r| touched.contains(r) || n == 1);
    let connected = touched
        .iter()
        .next()
        .map(|&first| {
            let root = uf.find(first);
            touched.iter().all(|&v| uf.find(v) == root)
        })
        .unwrap_or(false);
    if !(acyclic && connected && spans_roots) {
        violations.push("edge set is not a tree spanning all terminals".to_string());
    }

    violations.dedup();
    Ok(Validation { valid: violations.is_empty(), violations, leaves })
}

/// Validates a solution's edges and that its recorded leaves match them.
pub fn validate_solution(graph: &SearchGraph, solution: &Solution) -> Result<Validation, SolverError> {
    let mut v = validate_edges(graph, &solution.edges())?;
    let reached: Vec<Option<VertexId>> = solution.leaves.iter().map(|l| Some(*l)).collect();
    if v.valid && reached != v.leaves {
        v.valid = false;
        v.violations.push("recorded leaves differ from the path ends".to_string());
    }
    Ok(v)
}

/// Product objective of a valid solution: `(cost_raw, probability)`.
pub fn objective(graph: &SearchGraph, solution: &Solution) -> Result<(f64, f64), SolverError> {
    let v = validate_solution(graph, solution)?;
    if !v.valid {
        return Err(SolverError::Invalid(v.violations));
    }
    Ok((solution.cost_raw, solution.probability))
}

/// Maps live graph elements into a [`WeightedGraph`] with `penalty` added to
/// every edge weight; returns the edge-id translation.
fn penalized_view(graph: &SearchGraph, penalty: f64) -> (WeightedGraph, Vec<EdgeRef>) {
    let mut view = WeightedGraph::new(graph.vertex_count());
    let mut refs = Vec::new();
    for e in graph.alive_transform_edges() {
        view.add_edge(e.parent, e.child, e.w_bar + penalty);
        refs.push(EdgeRef::Transform(e.id));
    }
    for e in graph.alive_join_edges() {
        view.add_edge(e.a, e.b, e.w_bar + penalty);
        refs.push(EdgeRef::Join(e.id));
    }
    (view, refs)
}

/// Penalized Steiner solve with baseline fallback.
pub fn solve_optimistic(graph: &SearchGraph) -> Result<Solution, SolverError> {
    let pc = penalty_context(graph)?;
    let baseline = baseline_with(graph, &pc)?;
    let (view, refs) = penalized_view(graph, 2.0 * pc.p);
    let tree = kou_steiner(&view, graph.roots())?;
    let edges: Vec<EdgeRef> = tree.into_iter().map(|e| refs[e]).collect();
    let check = validate_edges(graph, &edges)?;
    if !check.valid {
        log::debug!("steiner tree rejected: {}", check.violations.join("; "));
        return Ok(baseline);
    }
    let leaves: Vec<VertexId> = check.leaves.into_iter().map(|l| l.expect("valid")).collect();
    let joins = edges
        .iter()
        .filter_map(|e| match e {
            EdgeRef::Join(id) => Some(*id),
            EdgeRef::Transform(_) => None,
        })
        .collect();
    let steiner = Solution::from_parts(graph, leaves, joins, pc.p);
    if steiner.cost_penalized < baseline.cost_penalized {
        Ok(steiner)
    } else {
        Ok(baseline)
    }
}

/// Removes transform edges whose best completion cannot beat `incumbent`.
///
/// The bound for edge `e` in tree `i` is the cheapest root-to-leaf cost through
/// `e` plus the best-leaf cost of every other tree, with joins counted as free.
/// Edges on the incumbent's paths are never removed. Vertices left without
/// children are removed as well.
pub fn prune_graph(graph: &SearchGraph, incumbent: &Solution) -> Result<SearchGraph, SolverError> {
    let mut g = graph.clone();
    let pc = penalty_context(graph)?;
    let protected: BTreeSet<EdgeId> = incumbent.path_edges.iter().flatten().copied().collect();
    let total_best: f64 = pc.best_leaf_costs.iter().sum();
    let tolerance = 1e-12 * incumbent.cost_raw.abs().max(1.0);

    // Cheapest live leaf cost under every vertex, deepest vertices first.
    let mut below = vec![f64::INFINITY; g.vertex_count()];
    let mut order: Vec<VertexId> = (0..g.vertex_count()).filter(|v| g.is_vertex_alive(*v)).collect();
    order.sort_by_key(|v| Reverse(g.vertex(*v).depth));
    for v in order {
        if g.vertex(v).depth == g.m() {
            below[v] = g.path_cost(v);
        } else {
            below[v] = g
                .child_edges(v)
                .map(|e| below[e.child])
                .fold(f64::INFINITY, f64::min);
        }
    }

    let doomed: Vec<EdgeId> = g
        .alive_transform_edges()
        .filter(|e| !protected.contains(&e.id))
        .filter(|e| {
            let tree = g.vertex(e.parent).tree;
            let bound = below[e.child] + total_best - pc.best_leaf_costs[tree];
            bound > incumbent.cost_raw + tolerance
        })
        .map(|e| e.id)
        .collect();
    for e in doomed {
        g.remove_subtree(e);
    }
    // Inner vertices whose children were all removed cannot reach depth m.
    loop {
        let dead_ends: Vec<EdgeId> = g
            .alive_transform_edges()
            .filter(|e| g.vertex(e.child).depth < g.m() && g.child_edges(e.child).next().is_none())
            .map(|e| e.id)
            .collect();
        if dead_ends.is_empty() {
            break;
        }
        for e in dead_ends {
            g.remove_subtree(e);
        }
    }
    Ok(g)
}

/// Recomputes transform weights between precise-mode rounds.
pub trait Rescorer {
    fn rescore(&self, graph: &mut SearchGraph) -> Result<(), SolverError>;
}

/// Keeps weights unchanged.
#[derive(Debug, Clone, Copy, Default)]
pub struct KeepWeights;

impl Rescorer for KeepWeights {
    fn rescore(&self, _graph: &mut SearchGraph) -> Result<(), SolverError> {
        Ok(())
    }
}

/// Rescores against the surviving leaves of the other trees.
#[derive(Debug, Clone, Copy)]
pub struct RestrictedRescorer<'a>(pub &'a Scorer);

impl Rescorer for RestrictedRescorer<'_> {
    fn rescore(&self, graph: &mut SearchGraph) -> Result<(), SolverError> {
        graph.rescore_restricted(self.0)?;
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct PreciseOutcome {
    pub solution: Solution,
    /// The pruned and rescored graph the solution refers to.
    pub graph: SearchGraph,
    /// Number of prune/rescore/solve rounds run.
    pub iterations: usize,
    /// Whether the last round reproduced the previous solution.
    pub converged: bool,
}

/// Solve, then repeat prune → rescore → solve until the solution stops
/// changing or `k` rounds have run.
pub fn solve_precise(
    graph: &SearchGraph,
    k: usize,
    rescorer: &dyn Rescorer,
) -> Result<PreciseOutcome, SolverError> {
    let k = k.max(1);
    let mut g = graph.clone();
    let mut current = solve_optimistic(&g)?;
    let mut iterations = 0;
    loop {
        iterations += 1;
        g = prune_graph(&g, &current)?;
        rescorer.rescore(&mut g)?;
        let previous = std::mem::replace(&mut current, solve_optimistic(&g)?);
        let converged = current.same_edges(&previous);
        if converged || iterations >= k {
            return Ok(PreciseOutcome { solution: current, graph: g, iterations, converged });
        }
    }
}

/// Exact optimum by enumerating every leaf combination; joins for a fixed
/// combination are its minimum spanning tree. Ties keep the combination that
/// comes first in lexicographic leaf-id order.
pub fn brute_force_oracle(graph: &SearchGraph, bound: u64) -> Result<Solution, SolverError> {
    let leaves: Vec<Vec<VertexId>> = (0..graph.n()).map(|t| graph.leaves(t)).collect();
    let combinations = leaves
        .iter()
        .try_fold(1u64, |acc, l| acc.checked_mul(l.len() as u64))
        .unwrap_or(u64::MAX);
    if combinations > bound {
        return Err(SolverError::OracleBound { combinations, bound });
    }
    if combinations == 0 {
        return Err(SolverError::Structural("a tree has no live leaf".to_string()));
    }
    let pc = penalty_context(graph)?;
    let decode = |mut idx: u64| -> Vec<VertexId> {
        let mut chosen = vec![0; leaves.len()];
        for t in (0..leaves.len()).rev() {
            let len = leaves[t].len() as u64;
            chosen[t] = leaves[t][(idx % len) as usize];
            idx /= len;
        }
        chosen
    };
    let best = (0..combinations)
        .into_par_iter()
        .filter_map(|idx| {
            let chosen = decode(idx);
            let joins = join_spanning_tree(graph, &chosen)?;
            let s = Solution::from_parts(graph, chosen, joins, pc.p);
            Some((s.cost_raw, idx))
        })
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .ok_or(SolverError::Disconnected)?;
    let chosen = decode(best.1);
    let joins = join_spanning_tree(graph, &chosen).ok_or(SolverError::Disconnected)?;
    Ok(Solution::from_parts(graph, chosen, joins, pc.p))
}
