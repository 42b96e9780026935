//! Consensus ADMM for the capacity reservation problem.
//!
//! The flow variable is duplicated into `F` (per-scenario flows) and `F̃`
//! (the copy priced through `pᵀ max`), coupled by `F = F̃` with multiplier
//! `Π`. Each iteration runs `K` independent flow proxes, `m` independent
//! weighted-max proxes and a price update. After every iteration the flows
//! give an upper bound and, on a fixed cadence, the prices give a certified
//! lower bound; the solve stops once the best-to-date gap is small enough.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{
    check_flow_feasibility, heuristic_policy, lower_bound, relative_gap, BoundsCertificate, HeuristicPolicy,
    ScenarioPrices, UPPER_BOUND_FEAS_TOL,
};
use crate::error::{Error, Result};
use crate::flow::{prox_flow, KktCache, ProxOptions, DEFAULT_PROX_TOL, DEFAULT_SIMPLEX_TOL};
use crate::linalg::{dot, norm_inf, Mat};
use crate::model::{check_feasibility, validate, Instance};
use crate::prox_max::reservation_and_price_update;
use crate::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Multiplier in the `ρ` selection rule.
    pub mu: f64,
    /// Over-relaxation, in `(0, 2)`.
    pub alpha: f64,
    /// Target relative gap `(U − L)/L`.
    pub eps_rel: f64,
    /// Lower bounds are evaluated when `l % lb_every == 0`.
    pub lb_every: usize,
    pub max_iters: usize,
    /// Conservation tolerance of the inner flow proxes.
    pub prox_tol: f64,
    /// Tolerance of the network simplex used for bounds.
    pub simplex_tol: f64,
    /// Worker threads; 0 uses the rayon default.
    pub workers: usize,
    /// Carried into results for reproduction; the solver is deterministic.
    pub seed: Option<u64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            mu: 0.05,
            alpha: 1.8,
            eps_rel: 0.01,
            lb_every: 10,
            max_iters: 5000,
            prox_tol: DEFAULT_PROX_TOL,
            simplex_tol: DEFAULT_SIMPLEX_TOL,
            workers: 0,
            seed: None,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return bad(format!("mu must be positive, got {}", self.mu));
        }
        if !(self.alpha > 0.0 && self.alpha < 2.0) {
            return bad(format!("alpha must lie in (0, 2), got {}", self.alpha));
        }
        if !(self.eps_rel > 0.0) {
            return bad(format!("eps_rel must be positive, got {}", self.eps_rel));
        }
        if self.lb_every == 0 {
            return bad("lb_every must be at least 1".into());
        }
        if !(self.prox_tol > 0.0) || !(self.simplex_tol > 0.0) {
            return bad("inner tolerances must be positive".into());
        }
        Ok(())
    }
}

/// `ρ = μ·1ᵀp / max_k 1ᵀf_heur^(k)`, or `μ` when either sum is zero.
pub fn select_rho<T: Scalar>(edge_price: &[T], heuristic_flows: &Mat<T>, mu: T) -> T {
    let total_price: T = edge_price.iter().copied().sum();
    let max_flow = heuristic_flows
        .columns()
        .map(|c| c.iter().copied().sum::<T>())
        .fold(T::zero(), |m, v| m.max(v));
    if total_price > T::zero() && max_flow > T::zero() {
        mu * total_price / max_flow
    } else {
        mu
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterateState<T> {
    /// Output of the flow update; equal to `F̃` at `l = 0`.
    pub flows: Mat<T>,
    /// Output of the reservation update.
    pub tilde: Mat<T>,
    pub prices: Mat<T>,
    /// Node potentials of the last flow proxes, used as warm starts.
    pub potentials: Vec<Vec<T>>,
    pub rho: T,
    pub iteration: usize,
    /// `‖F − F̃‖_F`.
    pub primal_residual: T,
    /// `ρ‖F̃(l) − F̃(l−1)‖_F`.
    pub dual_residual: T,
}

/// `F̃(0) = F_heur`, `Π(0) = (1/K) p 1ᵀ`.
pub fn initialize<T: Scalar>(instance: &Instance<T>, heuristic_flows: &Mat<T>, rho: T) -> IterateState<T> {
    let k = instance.scenario_count();
    IterateState {
        flows: heuristic_flows.clone(),
        tilde: heuristic_flows.clone(),
        prices: ScenarioPrices::uniform(instance.price(), k).into_matrix(),
        potentials: vec![Vec::new(); k],
        rho,
        iteration: 0,
        primal_residual: T::zero(),
        dual_residual: T::zero(),
    }
}

/// One ADMM iteration: flow update, reservation update, price update.
pub fn step<T: Scalar>(
    state: &IterateState<T>,
    instance: &Instance<T>,
    config: &SolverConfig,
    cache: &KktCache<T>,
) -> Result<IterateState<T>> {
    let (m, k) = (instance.edge_count(), instance.scenario_count());
    let rho = state.rho;
    let net = instance.network();
    let tol = T::lit(config.prox_tol);

    let solved: Vec<_> = (0..k)
        .into_par_iter()
        .map(|c| {
            let warm = &state.potentials[c];
            let opts = ProxOptions {
                warm_start: (warm.len() == instance.node_count()).then_some(warm.as_slice()),
                ..ProxOptions::with_tol(tol)
            };
            prox_flow(net, instance.source(c), state.prices.col(c), state.tilde.col(c), rho, Some(cache), &opts)
                .map_err(|e| e.in_scenario(c))
        })
        .collect::<Result<_>>()?;

    let mut flows = Mat::zeros(m, k);
    let mut potentials = Vec::with_capacity(k);
    for (c, sol) in solved.into_iter().enumerate() {
        flows.col_mut(c).copy_from_slice(&sol.flow);
        potentials.push(sol.potentials);
    }

    let (tilde, prices) = reservation_and_price_update(
        &flows,
        &state.tilde,
        &state.prices,
        instance.price(),
        rho,
        T::lit(config.alpha),
    )?;

    let primal_residual = flows.dist_frobenius(&tilde);
    let dual_residual = rho * tilde.dist_frobenius(&state.tilde);
    let next = IterateState {
        flows,
        tilde,
        prices,
        potentials,
        rho,
        iteration: state.iteration + 1,
        primal_residual,
        dual_residual,
    };
    if cfg!(debug_assertions) {
        let d = IterateDiagnostics::of(&next, instance.price());
        let scale = norm_inf(instance.price()).max(T::one());
        let limit = |tol: f64| (T::tol(tol) * scale).as_f64();
        debug_assert!(d.min_price >= -limit(1e-10), "negative scenario price {}", d.min_price);
        debug_assert!(d.price_sum_deviation <= limit(1e-8), "Π·1 misses p by {}", d.price_sum_deviation);
        debug_assert!(d.tightness <= T::tol(1e-6).as_f64(), "tightness off by {}", d.tightness);
    }
    Ok(next)
}

/// Properties of `(F̃, Π)` that hold after every step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterateDiagnostics {
    /// Smallest entry of `Π`.
    pub min_price: f64,
    /// `‖Π·1 − p‖∞`.
    pub price_sum_deviation: f64,
    /// `|⟨Π, F̃⟩ − pᵀ max F̃| / (1 + pᵀ max F̃)`.
    pub tightness: f64,
}

impl IterateDiagnostics {
    pub fn of<T: Scalar>(state: &IterateState<T>, edge_price: &[T]) -> Self {
        let min_price = state.prices.as_slice().iter().fold(T::infinity(), |m, &v| m.min(v));
        let price_sum_deviation = state
            .prices
            .row_sums()
            .iter()
            .zip(edge_price)
            .fold(T::zero(), |m, (&s, &p)| m.max((s - p).abs()));
        let reserved = dot(edge_price, &state.tilde.row_max());
        let charged = state.prices.inner(&state.tilde);
        let tightness = (charged - reserved).abs() / (T::one() + reserved.abs());
        Self {
            min_price: min_price.as_f64(),
            price_sum_deviation: price_sum_deviation.as_f64(),
            tightness: tightness.as_f64(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    Converged,
    IterationLimit,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::Converged => "converged",
            Termination::IterationLimit => "iteration-limit",
        }
    }
}

/// One row of the solve history, for iterations `l ≥ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iter: usize,
    /// `pᵀ max F(l)`; `None` if `F(l)` missed the feasibility tolerance.
    pub upper: Option<f64>,
    pub upper_best: f64,
    /// Lower bound from `Π(l)`, only on cadence iterations.
    pub lower: Option<f64>,
    pub lower_best: f64,
    pub rel_gap: f64,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub elapsed_s: f64,
    pub diagnostics: IterateDiagnostics,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport<T> {
    /// `max_k` of the upper-bound witness columns.
    pub reservation: Vec<T>,
    pub certificate: BoundsCertificate<T>,
    /// Final iterate.
    pub state: IterateState<T>,
    pub heuristic: HeuristicPolicy<T>,
    pub rho: T,
    pub iterations: usize,
    pub termination: Termination,
    /// Relative gap of the heuristic bounds at `l = 0`.
    pub initial_gap: T,
    pub history: Vec<IterationRecord>,
    pub elapsed_s: f64,
}

impl<T: Scalar> SolveReport<T> {
    pub fn objective(&self) -> T {
        self.certificate.upper
    }

    pub fn lower_bound(&self) -> T {
        self.certificate.lower
    }

    pub fn rel_gap(&self) -> T {
        self.certificate.rel_gap()
    }

    /// `π^(k)ᵀ f^(k)` for the certificate witnesses.
    pub fn charges(&self) -> Vec<T> {
        let c = &self.certificate;
        (0..c.upper_witness.cols()).map(|k| dot(c.lower_witness.col(k), c.upper_witness.col(k))).collect()
    }
}

/// Runs `f` on a pool of `workers` threads (0 for the rayon default).
pub fn with_workers<R: Send>(workers: usize, f: impl FnOnce() -> R + Send) -> Result<R> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("cannot start {workers} workers: {e}")))?;
    Ok(pool.install(f))
}

/// Validates the instance, then runs the heuristic and the ADMM loop until
/// the certified gap reaches `eps_rel` or `max_iters` is hit.
pub fn solve<T: Scalar>(instance: &Instance<T>, config: &SolverConfig) -> Result<SolveReport<T>> {
    config.validate()?;
    let report = validate(instance);
    if !report.is_valid() {
        return Err(Error::InvalidInstance(report.messages().join("; ")));
    }
    with_workers(config.workers, || solve_in_pool(instance, config))?
}

fn solve_in_pool<T: Scalar>(instance: &Instance<T>, config: &SolverConfig) -> Result<SolveReport<T>> {
    let start = Instant::now();
    let simplex_tol = T::lit(config.simplex_tol);
    if !instance.is_known_feasible() {
        let infeasible = check_feasibility(instance, simplex_tol).infeasible();
        if !infeasible.is_empty() {
            return Err(Error::InfeasibleInstance(infeasible));
        }
    }
    let heuristic = heuristic_policy(instance, simplex_tol)?;
    let cache = KktCache::build(instance.network())?;
    let rho = select_rho(instance.price(), &heuristic.flows, T::lit(config.mu));
    let mut state = initialize(instance, &heuristic.flows, rho);

    let mut cert = BoundsCertificate {
        upper: heuristic.objective,
        lower: heuristic.certified_lower_bound,
        upper_witness: heuristic.flows.clone(),
        lower_witness: state.prices.clone(),
        upper_iteration: 0,
        lower_iteration: 0,
    };
    let initial_gap = cert.rel_gap();
    let eps = T::lit(config.eps_rel);
    let feas_tol = T::tol(UPPER_BOUND_FEAS_TOL);
    let mut history = Vec::new();
    let mut termination = Termination::IterationLimit;

    let converged = |c: &BoundsCertificate<T>| c.upper - c.lower <= eps * c.lower;
    if converged(&cert) {
        termination = Termination::Converged;
    } else {
        for l in 1..=config.max_iters {
            state = step(&state, instance, config, &cache)?;

            let upper = match check_flow_feasibility(instance, &state.flows, feas_tol) {
                Ok(()) => Some(dot(instance.price(), &state.flows.row_max())),
                Err(_) => None,
            };
            if let Some(u) = upper {
                if u < cert.upper {
                    cert.upper = u;
                    cert.upper_witness = state.flows.clone();
                    cert.upper_iteration = l;
                }
            }
            let lower = if l % config.lb_every == 0 {
                Some(lower_bound(instance, &state.prices, simplex_tol)?.value)
            } else {
                None
            };
            if let Some(lb) = lower {
                if lb > cert.lower {
                    cert.lower = lb;
                    cert.lower_witness = state.prices.clone();
                    cert.lower_iteration = l;
                }
            }

            history.push(IterationRecord {
                iter: l,
                upper: upper.map(|u| u.as_f64()),
                upper_best: cert.upper.as_f64(),
                lower: lower.map(|v| v.as_f64()),
                lower_best: cert.lower.as_f64(),
                rel_gap: relative_gap(cert.upper, cert.lower).as_f64(),
                primal_residual: state.primal_residual.as_f64(),
                dual_residual: state.dual_residual.as_f64(),
                elapsed_s: start.elapsed().as_secs_f64(),
                diagnostics: IterateDiagnostics::of(&state, instance.price()),
            });
            if converged(&cert) {
                termination = Termination::Converged;
                break;
            }
        }
    }

    Ok(SolveReport {
        reservation: cert.upper_witness.row_max(),
        certificate: cert,
        iterations: state.iteration,
        state,
        heuristic,
        rho,
        termination,
        initial_gap,
        history,
        elapsed_s: start.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::min_cost_flow;
    use crate::model::{generate_layered, Edge, Network, ScenarioSet};

    #[test]
    fn rho_from_formula() {
        let p = [1.0f64, 2.0, 2.0];
        let f = Mat::from_columns(3, &[vec![1.0, 0.0, 1.0], vec![0.5, 0.5, 0.0]]);
        assert!((select_rho(&p, &f, 0.05) - 0.125).abs() < 1e-15);
        assert_eq!(select_rho(&p, &Mat::zeros(3, 2), 0.05), 0.05);
        assert_eq!(select_rho(&[0.0; 3], &f, 0.05), 0.05);
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::default().validate().is_ok());
        for bad in [
            SolverConfig { alpha: 2.0, ..Default::default() },
            SolverConfig { alpha: 0.0, ..Default::default() },
            SolverConfig { mu: 0.0, ..Default::default() },
            SolverConfig { eps_rel: 0.0, ..Default::default() },
            SolverConfig { lb_every: 0, ..Default::default() },
        ] {
            assert!(matches!(bad.validate(), Err(Error::InvalidParameter(_))));
        }
    }

    #[test]
    fn initial_prices_sum_to_p() {
        let inst = generate_layered(3, 0.1f64).unwrap();
        let h = heuristic_policy(&inst, 1e-10).unwrap();
        let st = initialize(&inst, &h.flows, 1.0);
        for (s, p) in st.prices.row_sums().iter().zip(inst.price()) {
            assert!((s - p).abs() < 1e-15);
        }
    }

    #[test]
    fn first_flow_update_reproduces_heuristic() {
        let inst = generate_layered(3, 0.01f64).unwrap();
        let h = heuristic_policy(&inst, 1e-10).unwrap();
        let rho = select_rho(inst.price(), &h.flows, 0.05);
        let cache = KktCache::build(inst.network()).unwrap();
        let st = step(&initialize(&inst, &h.flows, rho), &inst, &SolverConfig::default(), &cache).unwrap();
        assert!(st.flows.dist_frobenius(&h.flows) < 1e-7);
        assert!((dot(inst.price(), &st.flows.row_max()) - h.objective).abs() < 1e-7);
    }

    #[test]
    fn single_scenario_stops_before_iterating() {
        let inst = generate_layered(1, 0.2f64).unwrap();
        let r = solve(&inst, &SolverConfig::default()).unwrap();
        assert_eq!(r.termination, Termination::Converged);
        assert_eq!(r.iterations, 0);
        assert!(r.history.is_empty());
        assert!((r.objective() - 1.2).abs() < 1e-12);
    }

    #[test]
    fn single_scenario_plain_admm_reaches_lp_value() {
        // two routes of different price between the same nodes
        let net = Network::new(
            3,
            vec![Edge::new(0, 1), Edge::new(1, 2), Edge::new(0, 2)],
            vec![1.0, 1.0, 1.0],
            vec![0.3f64, 0.3, 1.0],
        )
        .unwrap();
        let inst = Instance::new(net, ScenarioSet::new(3, &[vec![1.5, 0.0, -1.5]]).unwrap()).unwrap();
        let lp = min_cost_flow(inst.network(), inst.source(0), inst.price(), 1e-12).unwrap();
        let h = heuristic_policy(&inst, 1e-12).unwrap();
        let cfg = SolverConfig { alpha: 1.0, ..Default::default() };
        let cache = KktCache::build(inst.network()).unwrap();
        // start away from the optimum
        let mut st = initialize(&inst, &h.flows, 0.5);
        st.tilde = Mat::from_columns(3, &[vec![0.2, 0.2, 1.3]]);
        for _ in 0..400 {
            st = step(&st, &inst, &cfg, &cache).unwrap();
        }
        let u = dot(inst.price(), &st.flows.row_max());
        assert!((u - lp.objective).abs() < 1e-6, "{u} vs {}", lp.objective);
    }

    #[test]
    fn fixed_point_is_preserved() {
        let inst = generate_layered(2, 0.1f64).unwrap();
        let cfg = SolverConfig { eps_rel: 1e-9, ..Default::default() };
        let r = solve(&inst, &cfg).unwrap();
        let cache = KktCache::build(inst.network()).unwrap();
        let mut st = r.state.clone();
        st.flows = st.tilde.clone();
        let next = step(&st, &inst, &cfg, &cache).unwrap();
        assert!(next.primal_residual < 1e-6);
        assert!(next.dual_residual < 1e-6);
        assert!(next.prices.dist_frobenius(&st.prices) < 1e-6);
    }

    #[test]
    fn layered_reaches_routed_cost() {
        let inst = generate_layered(3, 0.01f64).unwrap();
        let cfg = SolverConfig { eps_rel: 1e-4, ..Default::default() };
        let r = solve(&inst, &cfg).unwrap();
        assert_eq!(r.termination, Termination::Converged);
        assert!(r.lower_bound() <= 1.05 + 1e-9 && 1.05 <= r.objective());
        assert!(r.objective() <= 1.05 * (1.0 + 1e-4));
        assert!(r.objective() / r.heuristic.objective <= 0.35);
        for (f, rj) in r.certificate.upper_witness.row_max().iter().zip(&r.reservation) {
            assert_eq!(f, rj);
        }
    }

    #[test]
    fn layered_tight_gap() {
        let inst = generate_layered(3, 0.01f64).unwrap();
        let cfg = SolverConfig { eps_rel: 1e-8, ..Default::default() };
        let r = solve(&inst, &cfg).unwrap();
        assert_eq!(r.termination, Termination::Converged);
        assert!(r.objective() <= 1.05 + 1e-6);
    }

    #[test]
    fn iteration_limit_returns_best_so_far() {
        let inst = generate_layered(3, 0.01f64).unwrap();
        let cfg = SolverConfig { eps_rel: 1e-12, max_iters: 3, ..Default::default() };
        let r = solve(&inst, &cfg).unwrap();
        assert_eq!(r.termination, Termination::IterationLimit);
        assert_eq!(r.iterations, 3);
        assert_eq!(r.history.len(), 3);
        assert!(r.objective() <= r.heuristic.objective);
    }

    #[test]
    fn infeasible_instance_lists_scenarios() {
        let net = Network::new(2, vec![Edge::new(0, 1)], vec![1.0], vec![1.0]).unwrap();
        let s = ScenarioSet::new(2, &[vec![0.5, -0.5], vec![2.0, -2.0]]).unwrap();
        let inst = Instance::new(net, s).unwrap();
        match solve(&inst, &SolverConfig::default()) {
            Err(Error::InfeasibleInstance(v)) => assert_eq!(v, vec![1]),
            other => panic!("{other:?}"),
        }
    }
}
