//! Bundled LP solver. A two-phase primal simplex over bounded variables
//! with a sparse basis factorization; it returns basic (vertex) optima,
//! which the integrality checks and the rounding pipeline both rely on.

mod lu;
mod solver;

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::lp::LpModel;

/// Outcome classification of a solve. Infeasible and unbounded are results,
/// not errors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

/// A basic solution: values per structural column, the basis (column
/// indices, slacks numbered from `num_vars`), and row duals on optimal.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LpSolution {
    pub status: SolveStatus,
    pub values: Vec<f64>,
    pub objective: f64,
    pub basis: Vec<usize>,
    pub iterations: usize,
    pub duals: Vec<f64>,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }
}

/// Solve limits; `None` iterations means `50 * (columns + rows)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct SimplexLimits {
    pub max_iterations: Option<usize>,
    pub time_budget: Option<Duration>,
}

/// Solve a model with the bundled simplex. Deterministic for a given model.
pub fn solve(model: &LpModel, limits: &SimplexLimits) -> LpSolution {
    solver::Solver::new(model, None).solve(limits)
}

/// Solve a model under a replacement objective (dense coefficients over the
/// structural columns). Used to probe polytope vertices with random
/// objectives.
pub fn solve_vertex_with_objective(
    model: &LpModel,
    objective: &[f64],
    limits: &SimplexLimits,
) -> LpSolution {
    solver::Solver::new(model, Some(objective)).solve(limits)
}
