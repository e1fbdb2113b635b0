//! Holistic prediction of table transformations and joins for a multi-table
//! project.
//!
//! The pipeline ingests raw tables ([`tables`]), enumerates candidate reshaping
//! and string steps ([`ops`]), scores them ([`scoring`]), assembles a search
//! graph of per-table transformation trees linked by join edges ([`graph`]) and
//! picks a jointly most probable set of steps and joins with a Steiner-tree
//! approximation ([`solver`]). [`plan`], [`eval`] and [`pipeline`] turn that
//! into serializable plans, apply them and score them against ground truth.

pub mod tables;
pub mod ops;
pub mod scoring;
pub mod graph;
pub mod solver;
pub mod plan;
pub mod eval;
pub mod pipeline;
