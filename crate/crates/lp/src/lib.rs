//! A small linear-programming toolkit.
//!
//! [`Problem`] is a sparse row-wise model with variable bounds, [`Simplex`] is a
//! bounded-variable primal revised simplex with an explicit dense basis inverse,
//! and [`to_lp_string`] / [`parse_lp`] read and write the CPLEX LP text format.

mod format;
mod problem;
mod simplex;

pub use format::{parse_lp, to_lp_string};
pub use problem::{Cmp, Constraint, Problem, Sense, Variable};
pub use simplex::{solve, Simplex, SimplexOptions, Solution};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("problem is infeasible (phase one objective {0:e})")]
    Infeasible(f64),
    #[error("problem is unbounded")]
    Unbounded,
    #[error("iteration limit of {0} reached")]
    IterationLimit(usize),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("numerical trouble: {0}")]
    Numerical(String),
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
}
