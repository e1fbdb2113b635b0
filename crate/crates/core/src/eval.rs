//! Precision, recall and F1 of predicted plans against ground truth.
//!
//! A transform counts as correct only if the operator, its parameters and its
//! position in the table's (NoOp-free) sequence all match. A join counts as
//! correct if its unordered pair of (table, column) endpoints matches. Counts
//! are summed over projects before computing the ratios (micro average).

use std::collections::{BTreeMap, BTreeSet};
use std::ops::Add;

use serde::{Deserialize, Serialize};

use crate::plan::PrepPlan;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub correct: usize,
    pub predicted: usize,
    pub truth: usize,
}

impl Add for Counts {
    type Output = Counts;
    fn add(self, o: Counts) -> Counts {
        Counts {
            correct: self.correct + o.correct,
            predicted: self.predicted + o.predicted,
            truth: self.truth + o.truth,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    #[serde(flatten)]
    pub counts: Counts,
}

impl Metrics {
    /// A zero denominator gives 0, and F1 is 0 when P + R = 0. When there is
    /// nothing to predict and nothing was predicted, all three are 1.
    pub fn from_counts(c: Counts) -> Metrics {
        if c.predicted == 0 && c.truth == 0 {
            return Metrics { precision: 1.0, recall: 1.0, f1: 1.0, counts: c };
        }
        let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        let precision = ratio(c.correct, c.predicted);
        let recall = ratio(c.correct, c.truth);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Metrics { precision, recall, f1, counts: c }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanCounts {
    pub transforms: Counts,
    pub joins: Counts,
}

impl Add for PlanCounts {
    type Output = PlanCounts;
    fn add(self, o: PlanCounts) -> PlanCounts {
        PlanCounts {
            transforms: self.transforms + o.transforms,
            joins: self.joins + o.joins,
        }
    }
}

/// Raw match counts of one predicted plan against its truth.
pub fn compare_plans(predicted: &PrepPlan, truth: &PrepPlan) -> PlanCounts {
    let steps = |plan: &PrepPlan| -> BTreeMap<String, Vec<crate::ops::TransformStep>> {
        plan.tables
            .iter()
            .map(|t| {
                let kept = t.steps.iter().filter(|s| !s.is_noop()).cloned().collect();
                (t.name.clone(), kept)
            })
            .collect()
    };
    let p = steps(predicted);
    let t = steps(truth);
    let mut transforms = Counts::default();
    for s in p.values() {
        transforms.predicted += s.len();
    }
    for s in t.values() {
        transforms.truth += s.len();
    }
    for (name, ps) in &p {
        if let Some(ts) = t.get(name) {
            transforms.correct += ps
                .iter()
                .zip(ts)
                .filter(|(a, b)| a.same_action(b))
                .count();
        }
    }

    let pj: BTreeSet<_> = predicted.joins.iter().map(|j| j.key()).collect();
    let tj: BTreeSet<_> = truth.joins.iter().map(|j| j.key()).collect();
    let joins = Counts {
        correct: pj.intersection(&tj).count(),
        predicted: pj.len(),
        truth: tj.len(),
    };
    PlanCounts { transforms, joins }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectReport {
    pub project: String,
    pub transforms: Metrics,
    pub joins: Metrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub transforms: Metrics,
    pub joins: Metrics,
    pub projects: Vec<ProjectReport>,
}

/// Scores named (predicted, truth) pairs and micro-averages them.
pub fn evaluate(pairs: &[(String, PrepPlan, PrepPlan)]) -> EvalReport {
    use rayon::prelude::*;
    let per: Vec<(String, PlanCounts)> = pairs
        .par_iter()
        .map(|(name, p, t)| (name.clone(), compare_plans(p, t)))
        .collect();
    let total = per.iter().fold(PlanCounts::default(), |acc, (_, c)| acc + *c);
    EvalReport {
        transforms: Metrics::from_counts(total.transforms),
        joins: Metrics::from_counts(total.joins),
        projects: per
            .into_iter()
            .map(|(project, c)| ProjectReport {
                project,
                transforms: Metrics::from_counts(c.transforms),
                joins: Metrics::from_counts(c.joins),
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f1_formula() {
        let m = Metrics::from_counts(Counts { correct: 1, predicted: 2, truth: 2 });
        assert_eq!((m.precision, m.recall, m.f1), (0.5, 0.5, 0.5));
        let m = Metrics::from_counts(Counts { correct: 0, predicted: 0, truth: 3 });
        assert_eq!((m.precision, m.recall, m.f1), (0.0, 0.0, 0.0));
        let m = Metrics::from_counts(Counts { correct: 0, predicted: 0, truth: 0 });
        assert_eq!(m.f1, 1.0);
    }

    #[test]
    fn counts_add() {
        let a = Counts { correct: 1, predicted: 2, truth: 3 };
        assert_eq!(a + a, Counts { correct: 2, predicted: 4, truth: 6 });
    }
}
