//! Heuristic policy, scenario-price lower bounds, upper bounds from feasible
//! flows, optimality verification and the convex-hull policy extension.

mod extend;
mod optimality;

pub use extend::{barycentric_weights, extend_policy, ExtendedFlow, HULL_TOL};
pub use optimality::{verify_optimality, ConditionCheck, OptimalityReport, DEFAULT_OPTIMALITY_TOL};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::flow::{min_cost_flow, FlowSolution};
use crate::linalg::{dot, norm_inf, Mat};
use crate::model::Instance;
use crate::Scalar;

/// Tolerance on `Π ≥ 0` and `Π·1 = p`, relative to `max(1, ‖p‖∞)`.
pub const PRICE_TOL: f64 = 1e-9;

/// Conservation tolerance for flows used in an upper bound, relative to
/// `1 + ‖s‖∞`.
pub const UPPER_BOUND_FEAS_TOL: f64 = 1e-6;

/// Scenario prices: an `m×K` matrix with nonnegative entries whose rows sum
/// to the edge prices.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioPrices<T>(Mat<T>);

impl<T: Scalar> ScenarioPrices<T> {
    pub fn new(prices: Mat<T>, edge_price: &[T]) -> Result<Self> {
        let (neg, sum) = price_violations(&prices, edge_price)?;
        let tol = T::tol(PRICE_TOL) * norm_inf(edge_price).max(T::one());
        if neg > tol {
            return Err(Error::InvalidPrices(format!("negative entry of size {neg:e}")));
        }
        if sum > tol {
            return Err(Error::InvalidPrices(format!("row sums differ from p by up to {sum:e}")));
        }
        Ok(Self(prices))
    }

    /// `π^(k) = p/K` for every scenario.
    pub fn uniform(edge_price: &[T], scenarios: usize) -> Self {
        let share: Vec<T> = edge_price.iter().map(|&p| p / T::of_usize(scenarios)).collect();
        Self(Mat::repeat_column(&share, scenarios))
    }

    pub fn matrix(&self) -> &Mat<T> {
        &self.0
    }

    pub fn into_matrix(self) -> Mat<T> {
        self.0
    }
}

/// Largest negative entry and largest `|Π·1 − p|`.
pub(crate) fn price_violations<T: Scalar>(prices: &Mat<T>, edge_price: &[T]) -> Result<(T, T)> {
    if prices.rows() != edge_price.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} price rows for {} edges",
            prices.rows(),
            edge_price.len()
        )));
    }
    let neg = prices.as_slice().iter().fold(T::zero(), |m, &v| m.max(-v));
    let sum = prices
        .row_sums()
        .iter()
        .zip(edge_price)
        .fold(T::zero(), |m, (&s, &p)| m.max((s - p).abs()));
    Ok((neg, sum))
}

/// Solves one min-cost flow per scenario in parallel, in scenario order.
pub(crate) fn solve_scenarios<T: Scalar>(
    instance: &Instance<T>,
    prices: impl Fn(usize) -> Vec<T> + Sync,
    tol: T,
) -> Result<Vec<FlowSolution<T>>> {
    (0..instance.scenario_count())
        .into_par_iter()
        .map(|k| {
            min_cost_flow(instance.network(), instance.source(k), &prices(k), tol)
                .map_err(|e| e.in_scenario(k))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeuristicPolicy<T> {
    /// Column `k` is a min-cost flow for scenario `k` at prices `p`.
    pub flows: Mat<T>,
    /// `pᵀ max_k f^(k)`.
    pub objective: T,
    /// `(1/K) Σ_k pᵀ f^(k)`.
    pub lower_bound: T,
    /// Same bound from the dual certificates; valid under inexact solves.
    pub certified_lower_bound: T,
    /// `pᵀ f^(k)` per scenario.
    pub scenario_costs: Vec<T>,
}

/// Greedy per-scenario policy: route each scenario at minimum cost under the
/// full reservation prices. Satisfies `L ≤ J* ≤ J_heur ≤ K·J*`.
pub fn heuristic_policy<T: Scalar>(instance: &Instance<T>, tol: T) -> Result<HeuristicPolicy<T>> {
    let p = instance.price();
    let sols = solve_scenarios(instance, |_| p.to_vec(), tol)?;
    let k = T::of_usize(instance.scenario_count());
    let scenario_costs: Vec<T> = sols.iter().map(|s| s.objective).collect();
    let lower_bound = scenario_costs.iter().copied().sum::<T>() / k;
    let certified_lower_bound = sols.iter().map(|s| s.certified_value).sum::<T>() / k;
    let columns: Vec<Vec<T>> = sols.into_iter().map(|s| s.flow).collect();
    let flows = Mat::from_columns(instance.edge_count(), &columns);
    let objective = dot(p, &flows.row_max());
    Ok(HeuristicPolicy { flows, objective, lower_bound, certified_lower_bound, scenario_costs })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LowerBound<T> {
    /// `Σ_k` certified min-cost value at prices `π^(k)`.
    pub value: T,
    pub per_scenario: Vec<T>,
    /// The primal min-cost flows (not needed for the bound itself).
    pub flows: Mat<T>,
}

/// Lower bound on `J*` from scenario prices.
///
/// Rows whose sum overshoots `p` by rounding are scaled back and tiny
/// negative entries are zeroed, so the bound stays valid for exactly the
/// prices used.
pub fn lower_bound<T: Scalar>(instance: &Instance<T>, prices: &Mat<T>, tol: T) -> Result<LowerBound<T>> {
    let p = instance.price();
    if prices.cols() != instance.scenario_count() {
        return Err(Error::DimensionMismatch(format!(
            "{} price columns for {} scenarios",
            prices.cols(),
            instance.scenario_count()
        )));
    }
    let valid = ScenarioPrices::new(prices.clone(), p)?;
    let mut pi = valid.into_matrix();
    for v in pi.as_mut_slice() {
        *v = v.max(T::zero());
    }
    let sums = pi.row_sums();
    for (j, (&s, &pj)) in sums.iter().zip(p).enumerate() {
        if s > pj && s > T::zero() {
            let f = pj / s;
            for c in 0..pi.cols() {
                pi.set(j, c, pi.get(j, c) * f);
            }
        }
    }
    let sols = solve_scenarios(instance, |k| pi.col(k).to_vec(), tol)?;
    let per_scenario: Vec<T> = sols.iter().map(|s| s.certified_value).collect();
    let value = per_scenario.iter().copied().sum();
    let columns: Vec<Vec<T>> = sols.into_iter().map(|s| s.flow).collect();
    Ok(LowerBound { value, per_scenario, flows: Mat::from_columns(instance.edge_count(), &columns) })
}

/// Best-to-date bounds on `J*` together with their witnesses.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundsCertificate<T> {
    /// `pᵀ max_k f^(k)` for the feasible witness `upper_witness`.
    pub upper: T,
    /// Certified `Σ_k` min-cost value at prices `lower_witness`.
    pub lower: T,
    pub upper_witness: Mat<T>,
    pub lower_witness: Mat<T>,
    /// Iterations at which the current best bounds were found.
    pub upper_iteration: usize,
    pub lower_iteration: usize,
}

impl<T: Scalar> BoundsCertificate<T> {
    /// `(U − L)/L`; zero when both bounds vanish and infinite when only `L`
    /// does.
    pub fn rel_gap(&self) -> T {
        relative_gap(self.upper, self.lower)
    }
}

pub(crate) fn relative_gap<T: Scalar>(upper: T, lower: T) -> T {
    let diff = (upper - lower).max(T::zero());
    if lower > T::zero() {
        diff / lower
    } else if diff == T::zero() {
        T::zero()
    } else {
        T::infinity()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UpperBound<T> {
    /// `pᵀ r`.
    pub value: T,
    /// `r = max_k f^(k)`.
    pub reservation: Vec<T>,
}

/// Upper bound `pᵀ max_k f^(k)` from a feasible flow matrix.
pub fn upper_bound<T: Scalar>(instance: &Instance<T>, flows: &Mat<T>) -> Result<UpperBound<T>> {
    check_flow_feasibility(instance, flows, T::tol(UPPER_BOUND_FEAS_TOL))?;
    let reservation = flows.row_max();
    Ok(UpperBound { value: dot(instance.price(), &reservation), reservation })
}

/// Errors on the first column whose conservation residual or box violation
/// exceeds `rel_tol·(1 + ‖s‖∞)`.
pub fn check_flow_feasibility<T: Scalar>(instance: &Instance<T>, flows: &Mat<T>, rel_tol: T) -> Result<()> {
    if flows.rows() != instance.edge_count() || flows.cols() != instance.scenario_count() {
        return Err(Error::DimensionMismatch(format!(
            "flow matrix is {}x{}, instance needs {}x{}",
            flows.rows(),
            flows.cols(),
            instance.edge_count(),
            instance.scenario_count()
        )));
    }
    let net = instance.network();
    for (k, f) in flows.columns().enumerate() {
        let s = instance.source(k);
        let residual = net.conservation_residual(f, s).max(net.box_violation(f));
        if !(residual <= rel_tol * (T::one() + norm_inf(s))) {
            return Err(Error::InfeasibleFlows { scenario: k, residual: residual.as_f64() });
        }
    }
    Ok(())
}
