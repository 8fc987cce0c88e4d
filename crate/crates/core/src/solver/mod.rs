//! LP and MILP engine: revised primal simplex for relaxations, best-first
//! branch-and-bound with depth-first plunging over binary columns, and an
//! LP-format writer for cross-checking with external solvers.

mod bnb;
mod lp_format;
mod lu;
mod problem;
mod simplex;

use std::fmt;
use std::time::Duration;

pub use bnb::{solve_milp, solve_milp_from};
pub use lp_format::{export_lp, write_lp};
pub use problem::{Column, Problem, ProblemError, Row, Sense, VarKind};

use simplex::{LpOutcome, LpTableau};

/// Binary columns within this distance of 0 or 1 count as integral.
pub const INTEGRALITY_TOL: f64 = 1e-6;
/// LP feasibility tolerance reported to callers.
pub const FEASIBILITY_TOL: f64 = 1e-8;
/// Default relative optimality gap for branch-and-bound.
pub const DEFAULT_GAP: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Status {
    /// Proven optimal within the configured gap (never looser than [`DEFAULT_GAP`]).
    Optimal,
    Infeasible,
    Unbounded,
    /// Stopped at a configured gap looser than [`DEFAULT_GAP`].
    GapLimit,
    NodeLimit,
    TimeLimit,
    /// The simplex method could not reach a trustworthy basis.
    NumericalFailure,
}

impl Status {
    /// Whether the solution carries a usable point.
    pub fn has_point(self) -> bool {
        matches!(self, Status::Optimal | Status::GapLimit | Status::NodeLimit | Status::TimeLimit)
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub status: Status,
    /// One value per column; empty when no point is available.
    pub values: Vec<f64>,
    pub objective: f64,
    /// Best proven lower bound on the optimum.
    pub bound: f64,
    /// `(objective - bound) / max(1, |objective|)`.
    pub gap: f64,
    pub nodes: usize,
    pub lp_iterations: usize,
    /// Largest relative gap between a primal LP optimum and the Lagrangian
    /// bound of its final basis, over all LP solves performed.
    pub max_duality_residual: f64,
}

impl Solution {
    fn without_point(status: Status, nodes: usize, lp_iterations: usize) -> Self {
        Solution {
            status,
            values: Vec::new(),
            objective: f64::NAN,
            bound: f64::NAN,
            gap: f64::INFINITY,
            nodes,
            lp_iterations,
            max_duality_residual: 0.0,
        }
    }

    pub fn has_point(&self) -> bool {
        self.status.has_point() && !self.values.is_empty()
    }
}

/// Limits for [`solve_milp`].
#[derive(Debug, Clone, PartialEq)]
pub struct MilpLimits {
    /// Relative gap at which search stops.
    pub gap: f64,
    pub max_nodes: usize,
    pub time_limit: Option<Duration>,
}

impl Default for MilpLimits {
    fn default() -> Self {
        MilpLimits { gap: DEFAULT_GAP, max_nodes: 2_000_000, time_limit: None }
    }
}

pub(crate) fn relative_gap(upper: f64, lower: f64) -> f64 {
    ((upper - lower) / upper.abs().max(1.0)).max(0.0)
}

fn duality_residual(tab: &mut LpTableau) -> f64 {
    let primal = tab.objective();
    let dual = tab.dual_bound();
    (primal - dual).abs() / (1.0 + primal.abs())
}

/// Solve the continuous relaxation of `problem` (integrality ignored).
pub fn solve_lp(problem: &Problem) -> Solution {
    if let Err(e) = problem.validate() {
        debug_assert!(false, "invalid problem: {e}");
        return Solution::without_point(Status::NumericalFailure, 0, 0);
    }
    let mut tab = LpTableau::new(problem);
    let outcome = tab.solve();
    let status = match outcome {
        LpOutcome::Optimal => Status::Optimal,
        LpOutcome::Infeasible => Status::Infeasible,
        LpOutcome::Unbounded => Status::Unbounded,
        LpOutcome::NumericalFailure => Status::NumericalFailure,
    };
    if status != Status::Optimal {
        return Solution::without_point(status, 0, tab.iterations);
    }
    let objective = tab.objective();
    let residual = duality_residual(&mut tab);
    Solution {
        status,
        values: tab.values().to_vec(),
        objective,
        bound: objective,
        gap: 0.0,
        nodes: 0,
        lp_iterations: tab.iterations,
        max_duality_residual: residual,
    }
}
