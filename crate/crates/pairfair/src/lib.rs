//! Pairwise fairness for ranking and regression models.
//!
//! The crate measures how well a scorer orders pairs of examples drawn from
//! different protected groups, and trains models whose group-dependent pairwise
//! accuracies are balanced. Training poses fairness as rate constraints on
//! score differences and solves the resulting non-convex problem as a
//! two-player game: a model player ascends a surrogate Lagrangian while a
//! multiplier player runs swap-regret updates on the exact constraint slacks.

pub mod cli;
pub mod dataset;
pub mod error;
pub mod metrics;
pub mod model;
pub mod report;
pub mod simgen;
pub mod solver;
pub mod surrogate;

pub use error::{Error, Result};
