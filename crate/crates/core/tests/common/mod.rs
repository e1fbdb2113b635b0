//! Fixtures and independent reference computations shared by the integration
//! tests.
#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;

use autoprep_core::graph::{GraphBuilder, SearchGraph, VertexId};
use autoprep_core::ops::TransformStep;
use autoprep_core::tables::{load_csv, Table};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn fixture_dir(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn running_example() -> PathBuf {
    fixture_dir("running_example")
}

pub fn load_fixture(dir: &str, file: &str) -> Table {
    load_csv(&fixture_dir(dir).join(file)).expect("fixture loads")
}

pub fn table(name: &str, header: &[&str], rows: &[&[&str]]) -> Table {
    Table::new(
        name,
        header.iter().map(|s| s.to_string()).collect(),
        rows.iter().map(|r| r.iter().map(|s| s.to_string()).collect()).collect(),
    )
    .expect("valid table")
}

/// Leaf ids of the Figure-4 style fixture, by operator label.
pub struct Figure4 {
    pub graph: SearchGraph,
    pub o1: VertexId,
    pub o2: VertexId,
    pub o4: VertexId,
    pub o7: VertexId,
    pub o8: VertexId,
}

/// Three trees, m = 1: T1 {unpivot .8, transpose .2}, T2 {noop .8},
/// T4 {noop .6, transpose .4}; joins O1–O4 1.0, O1–O8 0.9, the rest
/// placeholders.
pub fn figure4() -> Figure4 {
    let mut b = GraphBuilder::new(1);
    let t1 = b.add_root("T1");
    let unpivot = TransformStep::Unpivot { start_column: "2010".into(), end_column: "2012".into() };
    let o1 = b.add_child(t1, "O1", Some(unpivot), 0.8).unwrap();
    let o2 = b.add_child(t1, "O2", Some(TransformStep::Transpose {}), 0.2).unwrap();
    let t2 = b.add_root("T2");
    let o4 = b.add_child(t2, "O4", Some(TransformStep::NoOp {}), 0.8).unwrap();
    let t4 = b.add_root("T4");
    let o7 = b.add_child(t4, "O7", Some(TransformStep::NoOp {}), 0.6).unwrap();
    let o8 = b.add_child(t4, "O8", Some(TransformStep::Transpose {}), 0.4).unwrap();
    b.add_join(o1, o4, 1.0, Some(("variable".into(), "Year".into()))).unwrap();
    b.add_join(o1, o8, 0.9, Some(("Country".into(), "Country".into()))).unwrap();
    Figure4 { graph: b.build().unwrap(), o1, o2, o4, o7, o8 }
}

/// Four trees, m = 1: three single-step tables at 0.8, a fourth choosing
/// transpose (.4) over noop (.6); joins T1–T2 1.0, T3–T2 1.0, T4t–T1 0.9.
pub fn example3() -> SearchGraph {
    let mut b = GraphBuilder::new(1);
    let leaf = |b: &mut GraphBuilder, name: &str, w: f64| {
        let r = b.add_root(name);
        b.add_child(r, "noop", None, w).unwrap()
    };
    let l1 = leaf(&mut b, "T1", 0.8);
    let l2 = leaf(&mut b, "T2", 0.8);
    let l3 = leaf(&mut b, "T3", 0.8);
    let r4 = b.add_root("T4");
    b.add_child(r4, "noop", None, 0.6).unwrap();
    let l4t = b.add_child(r4, "transpose", Some(TransformStep::Transpose {}), 0.4).unwrap();
    b.add_join(l1, l2, 1.0, None).unwrap();
    b.add_join(l3, l2, 1.0, None).unwrap();
    b.add_join(l4t, l1, 0.9, None).unwrap();
    b.build().unwrap()
}

/// Random search graph: `n` trees of uniform depth `m`, 1..=`fan_out`
/// children per inner vertex, transform weights in (0, 1) and a random subset
/// of leaf pairs joined with weights in (0.5, 1].
pub fn random_graph(rng: &mut ChaCha8Rng, n: usize, m: usize, fan_out: usize) -> SearchGraph {
    let mut b = GraphBuilder::new(m);
    let mut all_leaves: Vec<Vec<VertexId>> = Vec::new();
    for t in 0..n {
        let mut frontier = vec![b.add_root(format!("T{t}"))];
        for _ in 0..m {
            let mut next = Vec::new();
            for v in frontier {
                for _ in 0..rng.gen_range(1..=fan_out) {
                    let w = rng.gen_range(0.01..0.99);
                    next.push(b.add_child(v, "op", None, w).unwrap());
                }
            }
            frontier = next;
        }
        all_leaves.push(frontier);
    }
    let join_rate: f64 = rng.gen_range(0.05..0.6);
    for i in 0..n {
        for j in i + 1..n {
            for &a in &all_leaves[i] {
                for &c in &all_leaves[j] {
                    if rng.gen_bool(join_rate) {
                        let w = rng.gen_range(0.51..=1.0);
                        b.add_join(a, c, w, None).unwrap();
                    }
                }
            }
        }
    }
    b.build().unwrap()
}

/// Minimum total cost over all leaf choices: sum of root-to-leaf path costs
/// plus a minimum spanning tree (Prim) over the chosen leaves' join costs.
/// Written independently of the solver.
pub fn reference_optimum(graph: &SearchGraph) -> f64 {
    let n = graph.n();
    let leaves: Vec<Vec<VertexId>> = (0..n).map(|t| graph.leaves(t)).collect();
    let path_cost = |v: VertexId| -> f64 {
        let mut cost = 0.0;
        let mut cur = v;
        while let Some(e) = graph.parent_edge(cur) {
            cost += -e.w.ln();
            cur = e.parent;
        }
        cost
    };
    let join_cost = |a: VertexId, b: VertexId| -> f64 {
        graph.join_between(a, b).map_or(f64::INFINITY, |e| -e.w.ln())
    };
    let mut best = f64::INFINITY;
    let mut idx = vec![0usize; n];
    loop {
        let chosen: Vec<VertexId> = (0..n).map(|t| leaves[t][idx[t]]).collect();
        let mut total: f64 = chosen.iter().map(|&v| path_cost(v)).sum();
        // Prim over the complete graph on chosen leaves.
        let mut in_tree = vec![false; n];
        let mut dist = vec![f64::INFINITY; n];
        dist[0] = 0.0;
        for _ in 0..n {
            let u = (0..n)
                .filter(|&i| !in_tree[i])
                .min_by(|&x, &y| dist[x].total_cmp(&dist[y]))
                .unwrap();
            in_tree[u] = true;
            total += dist[u];
            for k in 0..n {
                if !in_tree[k] {
                    dist[k] = dist[k].min(join_cost(chosen[u], chosen[k]));
                }
            }
        }
        best = best.min(total);
        let mut t = 0;
        loop {
            if t == n {
                return best;
            }
            idx[t] += 1;
            if idx[t] < leaves[t].len() {
                break;
            }
            idx[t] = 0;
            t += 1;
        }
    }
}

pub fn leaf_combinations(graph: &SearchGraph) -> u64 {
    (0..graph.n()).map(|t| graph.leaf_count(t) as u64).product()
}

/// Largest fraction of `a` found in any single set of `others`.
pub fn max_containment(a: &BTreeSet<String>, others: &[BTreeSet<String>]) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    others
        .iter()
        .map(|o| a.intersection(o).count() as f64 / a.len() as f64)
        .fold(0.0, f64::max)
}

pub fn lower_set<'a>(items: impl IntoIterator<Item = &'a str>) -> BTreeSet<String> {
    items
        .into_iter()
        .map(|s| s.trim().to_lowercase())
        .filter(|s| !s.is_empty())
        .collect()
}

/// A desk-scale project of `n` tables: a long fact table keyed by entity and
/// year, an entity dimension, a year dimension, and wide or transposed
/// variants of further measures.
pub fn synthetic_project(rng: &mut ChaCha8Rng, n: usize) -> Vec<Table> {
    let entities: Vec<String> = (0..12).map(|i| format!("E{i:03}")).collect();
    let years: Vec<String> = (2001..=2008).map(|y| y.to_string()).collect();
    let mut tables = Vec::with_capacity(n);

    let rows = entities
        .iter()
        .enumerate()
        .map(|(i, e)| vec![e.clone(), format!("Entity {i}"), ["North", "South"][i % 2].to_string()])
        .collect();
    tables.push(Table::new("Entity", vec!["Code".into(), "Name".into(), "Region".into()], rows).unwrap());

    let rows = years
        .iter()
        .map(|y| vec![y.clone(), if y.parse::<u32>().unwrap() % 4 == 0 { "Yes" } else { "No" }.into()])
        .collect();
    tables.push(Table::new("Year", vec!["Year".into(), "IsLeap".into()], rows).unwrap());

    let mut k = 0;
    while tables.len() < n {
        let name = format!("Measure{k}");
        let t = match k % 3 {
            0 => {
                // Wide: one column per year.
                let mut header = vec!["Name".to_string()];
                header.extend(years.iter().cloned());
                let rows = (0..entities.len())
                    .map(|i| {
                        let mut r = vec![format!("Entity {i}")];
                        r.extend(years.iter().map(|_| format!("{:.2}", rng.gen_range(0.0..100.0))));
                        r
                    })
                    .collect();
                Table::new(name, header, rows).unwrap()
            }
            1 => {
                // Long: entity, year, value.
                let mut rows = Vec::new();
                for e in &entities {
                    for y in &years {
                        rows.push(vec![e.clone(), y.clone(), rng.gen_range(0..1000).to_string()]);
                    }
                }
                Table::new(name, vec!["Code".into(), "Year".into(), "Value".into()], rows).unwrap()
            }
            _ => {
                // Transposed: entities as headers.
                let mut header = vec!["Attribute".to_string()];
                header.extend(entities.iter().cloned());
                let rows = ["Population", "Area", "Capital"]
                    .iter()
                    .map(|a| {
                        let mut r = vec![a.to_string()];
                        r.extend(entities.iter().map(|_| rng.gen_range(1..500).to_string()));
                        r
                    })
                    .collect();
                Table::new(name, header, rows).unwrap()
            }
        };
        tables.push(t);
        k += 1;
    }
    tables
}
