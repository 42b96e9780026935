//! Per-scenario flow kernels: the linear capacitated min-cost flow (network
//! simplex) and the quadratic flow prox used by the ADMM flow update.

mod kkt;
mod prox;
mod simplex;

pub use kkt::KktCache;
pub use prox::{prox_flow, prox_kkt_residual, ProxOptions, DEFAULT_PROX_TOL};
pub use simplex::{min_cost_flow, DEFAULT_SIMPLEX_TOL};

use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    /// Iteration cap hit; the returned point is the best iterate.
    IterationLimit,
}

/// Result of a single-scenario flow solve.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowSolution<T> {
    /// Edge flows, clamped to `[0, c]`.
    pub flow: Vec<T>,
    /// Primal objective at `flow`.
    pub objective: T,
    /// Dual objective at `potentials`; a lower bound on the optimal value
    /// regardless of how accurately the primal was solved.
    pub certified_value: T,
    /// Node potentials `y` (multipliers of `A f + s = 0`).
    pub potentials: Vec<T>,
    /// Per-edge reduced costs `π_j + y_head - y_tail`.
    pub reduced_costs: Vec<T>,
    pub status: SolveStatus,
    /// `‖A f + s‖∞` of the returned flow.
    pub residual: T,
    pub iterations: usize,
}

/// `sᵀy + Σ_j c_j·min(0, rc_j)`: the LP dual objective for potentials `y`,
/// valid as a lower bound for any `y`.
pub fn lp_dual_value<T: Scalar>(capacity: &[T], source: &[T], potentials: &[T], reduced: &[T]) -> T {
    let sy: T = source.iter().zip(potentials).map(|(&s, &y)| s * y).sum();
    let box_term: T = capacity
        .iter()
        .zip(reduced)
        .map(|(&c, &r)| c * r.min(T::zero()))
        .sum();
    sy + box_term
}
