//! Solver invariants on hand-built and random search graphs.

mod common;

use std::collections::{BTreeMap, BTreeSet};

use autoprep_core::graph::{build_search_graph, parse_graph_text};
use autoprep_core::ops::{OperatorKind, TransformStep};
use autoprep_core::scoring::{Override, Scorer, ScorerConfig};
use autoprep_core::solver::{
    baseline_solution, kou_steiner, prune_graph, solve_optimistic, solve_precise,
    validate_solution, KeepWeights, RestrictedRescorer, WeightedGraph,
};
use autoprep_core::pipeline::load_project;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn ln(w: f64) -> f64 {
    -w.ln()
}

#[test]
fn figure4_prune_bounds() {
    let f = common::figure4();
    let incumbent = solve_optimistic(&f.graph).unwrap();
    let cost = ln(0.8) + ln(0.8) + ln(0.4) + ln(1.0) + ln(0.9);
    assert!((incumbent.cost_raw - cost).abs() < 1e-12);
    assert!((cost - -(0.2304f64).ln()).abs() < 1e-12);
    assert!((cost - 1.47).abs() < 5e-3);

    // Cheapest completion through O2: its own edge plus the best leaf
    // elsewhere, with free joins.
    let o2_bound = ln(0.2) + ln(0.8) + ln(0.6);
    let o7_bound = ln(0.6) + ln(0.8) + ln(0.8);
    assert!(o2_bound > cost && o7_bound < cost);

    let pruned = prune_graph(&f.graph, &incumbent).unwrap();
    assert!(!pruned.is_vertex_alive(f.o2));
    assert!(pruned.is_vertex_alive(f.o7));
    for leaf in [f.o1, f.o4, f.o8] {
        assert!(pruned.is_vertex_alive(leaf));
    }
    assert!(pruned.alive_join_edges().all(|j| j.a != f.o2 && j.b != f.o2));
}

#[test]
fn example3_baseline_and_best() {
    let g = common::example3();
    let b = baseline_solution(&g).unwrap();
    assert!((b.probability - 0.8f64.powi(3) * 0.6 * 0.5).abs() < 1e-12);
    let s = solve_optimistic(&g).unwrap();
    assert!(s.probability > b.probability);
}

#[test]
fn precise_single_round_and_fixpoint() {
    let f = common::figure4();
    let out = solve_precise(&f.graph, 1, &KeepWeights).unwrap();
    assert_eq!(out.iterations, 1);
    let out = solve_precise(&f.graph, 5, &KeepWeights).unwrap();
    assert!(out.converged);
    assert_eq!(out.iterations, 1);
    let optimistic = solve_optimistic(&f.graph).unwrap();
    assert_eq!(out.solution.leaves, optimistic.leaves);
}

/// Two string tables: A, whose transpose overlaps B's columns, and B, whose
/// transpose overlaps A's columns. Only NoOp (fixed 0.9) and Transpose (driven
/// by the change in value-domain overlap) are competitive, and joins are
/// disabled. Against the optimistic pool {B, B'} half of A's columns already
/// look joinable, so transposing A gains little; once B' is pruned the gain
/// doubles and Transpose overtakes NoOp.
#[test]
fn precise_mode_flips_after_pruning_a_rival_transpose() {
    let a = common::table("A", &["name", "u", "v"], &[&["a", "b", "c"], &["d", "e", "f"]]);
    let b = common::table("B", &["c1", "c2", "c3"], &[&["u", "b", "e"], &["v", "c", "f"]]);
    let (noop_p, bias, weight) = (0.9_f64, -2.0, 9.0);
    let mut config = ScorerConfig::default();
    for (kind, row) in config.operators.iter_mut() {
        row.weights = BTreeMap::new();
        row.bias = match kind {
            OperatorKind::NoOp => (noop_p / (1.0 - noop_p)).ln(),
            OperatorKind::Transpose => bias,
            _ => -10.0,
        };
    }
    config
        .operators
        .get_mut(&OperatorKind::Transpose)
        .unwrap()
        .weights
        .insert("delta_value_domain_overlap".into(), weight);
    config.join.bias = -30.0;
    config.overrides.push(Override {
        fingerprint: None,
        table: Some("B".into()),
        step: TransformStep::Transpose {},
        probability: 0.05,
    });

    // Value-domain overlap = mean over columns of the best containment.
    // A against {B, B'}: name 0, u 1, v 1 -> 2/3; against {B}: 0, 1/2, 1/2 -> 1/3.
    // A' against either pool: 1. Transpose logit = bias + weight * delta.
    let sigma = |x: f64| 1.0 / (1.0 + (-x).exp());
    let before = sigma(bias + weight * (1.0 - 2.0 / 3.0));
    let after = sigma(bias + weight * (1.0 - 1.0 / 3.0));
    assert!(before < noop_p && after > noop_p);

    let scorer = Scorer::new(config);
    let g = build_search_graph(vec![a, b], 1, &scorer).unwrap();
    let transpose_a = |g: &autoprep_core::graph::SearchGraph| {
        g.alive_transform_edges()
            .find(|e| g.vertex(e.child).tree == 0 && e.step == Some(TransformStep::Transpose {}))
            .map(|e| (e.child, e.w))
            .unwrap()
    };
    let (leaf, w) = transpose_a(&g);
    assert!((w - before).abs() < 1e-9, "optimistic weight {w} vs {before}");

    let optimistic = solve_optimistic(&g).unwrap();
    assert_ne!(optimistic.leaves[0], leaf);

    let out = solve_precise(&g, 5, &RestrictedRescorer(&scorer)).unwrap();
    let (_, w) = transpose_a(&out.graph);
    assert!((w - after).abs() < 1e-9, "restricted weight {w} vs {after}");
    assert_eq!(out.solution.leaves[0], leaf);
    assert!(validate_solution(&out.graph, &out.solution).unwrap().valid);
}

#[test]
fn running_example_is_deterministic() {
    let scorer = Scorer::new(ScorerConfig::default());
    let tables = load_project(&common::running_example()).unwrap();
    let g1 = build_search_graph(tables.clone(), 2, &scorer).unwrap();
    let g2 = build_search_graph(tables, 2, &Scorer::new(ScorerConfig::default())).unwrap();
    assert_eq!(g1.to_text(), g2.to_text());
    let (s1, s2) = (solve_optimistic(&g1).unwrap(), solve_optimistic(&g2).unwrap());
    assert!(s1.same_edges(&s2));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn graph_text_round_trips(seed in any::<u64>(), n in 2usize..5, m in 1usize..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = common::random_graph(&mut rng, n, m, 3);
        let text = g.to_text();
        let back = parse_graph_text(&text).unwrap();
        prop_assert_eq!(back.to_text(), text);
        prop_assert_eq!(back.join_edges().len(), g.join_edges().len());
    }

    #[test]
    fn pruning_keeps_the_incumbent(seed in any::<u64>(), n in 2usize..6, m in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = common::random_graph(&mut rng, n, m, 3);
        let s = solve_optimistic(&g).unwrap();
        let pruned = prune_graph(&g, &s).unwrap();
        for e in s.path_edges.iter().flatten() {
            prop_assert!(pruned.is_transform_alive(*e));
        }
        for j in &s.join_edges {
            prop_assert!(pruned.is_join_alive(*j));
        }
        prop_assert!(validate_solution(&pruned, &s).unwrap().valid);
        let again = solve_optimistic(&pruned).unwrap();
        prop_assert!(again.cost_raw <= s.cost_raw + 1e-9);
    }

    #[test]
    fn solving_is_deterministic(seed in any::<u64>(), n in 2usize..6, m in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = common::random_graph(&mut rng, n, m, 3);
        let a = solve_optimistic(&g).unwrap();
        let b = solve_optimistic(&g.clone()).unwrap();
        prop_assert!(a.same_edges(&b));
        prop_assert_eq!(a.cost_raw, b.cost_raw);
    }

    #[test]
    fn kou_returns_a_tree_over_the_terminals(
        seed in any::<u64>(),
        nodes in 2usize..12,
        extra in 0usize..20,
        k in 2usize..6,
    ) {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut g = WeightedGraph::new(nodes);
        for v in 1..nodes {
            let u = rng.gen_range(0..v);
            g.add_edge(u, v, rng.gen_range(0.0..3.0));
        }
        for _ in 0..extra {
            let (u, v) = (rng.gen_range(0..nodes), rng.gen_range(0..nodes));
            if u != v {
                g.add_edge(u, v, rng.gen_range(0.0..3.0));
            }
        }
        let terminals: Vec<usize> = (0..k.min(nodes)).map(|_| rng.gen_range(0..nodes)).collect();
        let tree = kou_steiner(&g, &terminals).unwrap();

        let mut touched = BTreeSet::new();
        let mut degree = BTreeMap::new();
        let mut parent: Vec<usize> = (0..nodes).collect();
        fn find(p: &mut Vec<usize>, x: usize) -> usize {
            if p[x] != x {
                let r = find(p, p[x]);
                p[x] = r;
            }
            p[x]
        }
        for &e in &tree {
            let (u, v, _) = g.edges()[e];
            touched.insert(u);
            touched.insert(v);
            *degree.entry(u).or_insert(0) += 1;
            *degree.entry(v).or_insert(0) += 1;
            let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
            prop_assert!(ru != rv, "cycle through edge {}", e);
            parent[ru] = rv;
        }
        let distinct: BTreeSet<usize> = terminals.iter().copied().collect();
        if distinct.len() > 1 {
            prop_assert_eq!(tree.len(), touched.len() - 1);
            for t in &distinct {
                prop_assert!(touched.contains(t));
            }
            let root = find(&mut parent, *distinct.iter().next().unwrap());
            for t in &distinct {
                prop_assert_eq!(find(&mut parent, *t), root);
            }
            for (v, d) in degree {
                prop_assert!(d > 1 || distinct.contains(&v), "non-terminal leaf {}", v);
            }
        } else {
            prop_assert!(tree.is_empty());
        }
    }
}
