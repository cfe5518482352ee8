//! `min eta` subject to the rows of a [`ConstraintSystem`].
//!
//! [`solve`] is a revised simplex on the dual; [`solve_minmax_direct`] is an
//! interior-point method on the same min-max problem, kept as a cross-check.

mod dense;
mod interior;
mod simplex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::barrier::ConstraintSystem;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    /// Optimal slack, reported as the largest row value at `decision`.
    pub eta: f64,
    /// `[alpha, rho, q..]`.
    pub decision: Vec<f64>,
    pub status: SolveStatus,
    /// Rows within the feasibility tolerance of `eta`.
    pub active_rows: Vec<usize>,
    pub iterations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub feasibility_tol: f64,
    pub optimality_tol: f64,
    pub max_iterations: usize,
    /// Consecutive degenerate pivots before switching to Bland's rule.
    pub degenerate_limit: usize,
    /// Interior method: stop once the duality gap bound drops below this (relative).
    pub gap_tolerance: f64,
    pub barrier_growth: f64,
    pub max_newton: usize,
    /// Tightness tolerance used to list active rows after the interior method.
    pub active_tolerance_minmax: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            feasibility_tol: 1e-9,
            optimality_tol: 1e-9,
            max_iterations: 100_000,
            degenerate_limit: 50,
            gap_tolerance: 1e-8,
            barrier_growth: 20.0,
            max_newton: 5_000,
            active_tolerance_minmax: 1e-6,
        }
    }
}

fn check(system: &ConstraintSystem) -> Result<()> {
    if system.is_empty() {
        return Err(Error::Solver("constraint system has no rows".into()));
    }
    Ok(())
}

pub fn solve(system: &ConstraintSystem, config: &SolverConfig) -> Result<SolveResult> {
    check(system)?;
    simplex::solve(system, config)
}

pub fn solve_minmax_direct(system: &ConstraintSystem, config: &SolverConfig) -> Result<SolveResult> {
    check(system)?;
    interior::solve(system, config)
}

fn active_rows(system: &ConstraintSystem, d: &[f64], eta: f64, tol: f64) -> Vec<usize> {
    let tol = tol * (1.0 + eta.abs());
    (0..system.len())
        .into_par_iter()
        .filter(|&i| eta - system.row_value(i, d) <= tol)
        .collect()
}
