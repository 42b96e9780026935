#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

mod common;

use capres::admm::{initialize, select_rho, solve, step, SolverConfig, Termination};
use capres::bounds::{heuristic_policy, verify_optimality};
use capres::flow::KktCache;
use capres::io::history_csv;
use capres::model::{Network, ScenarioSet};
use capres::Instance;

use common::{cr_oracle, reservation_cost, tiny_instance};

fn tight(eps_rel: f64) -> SolverConfig {
    SolverConfig { eps_rel, ..SolverConfig::default() }
}

fn assert_iterate_properties(inst: &Instance<f64>, history: &[capres::admm::IterationRecord]) {
    for rec in history {
        let d = rec.diagnostics;
        assert!(d.min_price >= -1e-10, "iter {}: {d:?}", rec.iter);
        assert!(d.price_sum_deviation <= 1e-8, "iter {}: {d:?}", rec.iter);
        assert!(d.tightness <= 1e-6, "iter {}: {d:?}", rec.iter);
    }
    let _ = inst;
}

#[test]
fn tiny_random_instances_match_oracle() {
    for seed in 0..12 {
        let inst = tiny_instance(6, 12, 4, seed % 2 == 1, 300 + seed);
        let oracle = cr_oracle(&inst);
        let cfg = tight(1e-6);
        let r = solve(&inst, &cfg).unwrap();
        assert_eq!(r.termination, Termination::Converged, "seed {seed}");
        let tol = 1e-9 * (1.0 + oracle.value);
        assert!(r.lower_bound() <= oracle.value + tol, "seed {seed}");
        assert!(oracle.value <= r.objective() + tol, "seed {seed}");
        assert!((r.objective() - oracle.value) / oracle.value <= 1e-6 + 1e-12, "seed {seed}");
        assert_iterate_properties(&inst, &r.history);
        // every recorded bound respects the oracle value
        for rec in &r.history {
            if let Some(u) = rec.upper {
                assert!(u >= oracle.value - tol);
            }
            if let Some(l) = rec.lower {
                assert!(l <= oracle.value + tol);
            }
        }
    }
}

#[test]
fn converged_pair_satisfies_optimality_conditions() {
    for seed in 0..6 {
        let inst = tiny_instance(6, 12, 3, false, 40 + seed);
        let r = solve(&inst, &tight(1e-9)).unwrap();
        assert_eq!(r.termination, Termination::Converged);
        let c = &r.certificate;
        let report = verify_optimality(&inst, &c.upper_witness, &c.lower_witness, 1e-6).unwrap();
        assert!(report.all_passed(), "seed {seed}: {report:?}");
    }
}

#[test]
fn first_iterate_reproduces_heuristic_bound() {
    let inst = tiny_instance(8, 16, 5, true, 9);
    let cfg = SolverConfig { max_iters: 1, eps_rel: 1e-12, ..SolverConfig::default() };
    let r = solve(&inst, &cfg).unwrap();
    let u1 = r.history[0].upper.unwrap();
    assert!((u1 - r.heuristic.objective).abs() <= 1e-7 * (1.0 + u1));
}

#[test]
fn best_bounds_are_monotone() {
    let inst = tiny_instance(10, 25, 6, false, 21);
    let r = solve(&inst, &tight(1e-5)).unwrap();
    for w in r.history.windows(2) {
        assert!(w[1].upper_best <= w[0].upper_best);
        assert!(w[1].lower_best >= w[0].lower_best);
    }
    let lower_rows = r.history.iter().filter(|h| h.lower.is_some()).count();
    assert_eq!(lower_rows, r.iterations / 10);
    assert_eq!(history_csv(&r.history).lines().count(), r.iterations + 1);
    assert_eq!(r.reservation, r.certificate.upper_witness.row_max());
    assert!((reservation_cost(inst.price(), &r.certificate.upper_witness) - r.objective()).abs() < 1e-12);
}

#[test]
fn price_scaling_leaves_flows_unchanged() {
    let inst = tiny_instance(8, 16, 4, false, 12);
    let scaled_price: Vec<f64> = inst.price().iter().map(|p| 10.0 * p).collect();
    let scaled = inst.with_network(inst.network().with_price(scaled_price).unwrap()).unwrap();
    let cfg = tight(1e-4);
    let a = solve(&inst, &cfg).unwrap();
    let b = solve(&scaled, &cfg).unwrap();
    assert_eq!(a.iterations, b.iterations);
    assert!((b.rho / a.rho - 10.0).abs() < 1e-12);
    assert!(a.state.flows.dist_frobenius(&b.state.flows) < 1e-6);
    assert!(a.state.tilde.dist_frobenius(&b.state.tilde) < 1e-6);
    assert!(a.state.prices.scaled(10.0).dist_frobenius(&b.state.prices) < 1e-5);
}

#[test]
fn data_scaling_scales_rho_inversely() {
    let inst = tiny_instance(8, 16, 4, true, 13);
    let h = heuristic_policy(&inst, 1e-12).unwrap();
    let cap: Vec<f64> = inst.capacity().iter().map(|c| c * 10.0).collect();
    let scaled = Instance::new(
        Network::new(inst.node_count(), inst.network().edges().to_vec(), cap, inst.price().to_vec()).unwrap(),
        ScenarioSet::from_matrix(inst.scenarios().matrix().scaled(10.0)).unwrap(),
    )
    .unwrap();
    let hs = heuristic_policy(&scaled, 1e-12).unwrap();
    let r0 = select_rho(inst.price(), &h.flows, 0.05);
    let r1 = select_rho(scaled.price(), &hs.flows, 0.05);
    assert!((r0 / r1 - 10.0).abs() < 1e-9);
}

#[test]
fn step_keeps_prices_valid_from_any_start() {
    let inst = tiny_instance(7, 14, 3, false, 5);
    let h = heuristic_policy(&inst, 1e-12).unwrap();
    let cache = KktCache::build(inst.network()).unwrap();
    let cfg = SolverConfig::default();
    let mut st = initialize(&inst, &h.flows, 0.7);
    for l in 1..=40 {
        st = step(&st, &inst, &cfg, &cache).unwrap();
        assert_eq!(st.iteration, l);
        let d = capres::admm::IterateDiagnostics::of(&st, inst.price());
        assert!(d.min_price >= 0.0);
        assert!(d.price_sum_deviation <= 1e-12);
        assert!(d.tightness <= 1e-12);
    }
}

#[test]
fn worker_count_does_not_change_history() {
    let inst = tiny_instance(12, 30, 8, false, 31);
    let run = |workers| {
        let r = solve(&inst, &SolverConfig { workers, eps_rel: 1e-4, ..SolverConfig::default() }).unwrap();
        r.history
            .iter()
            .map(|h| (h.iter, h.upper, h.upper_best, h.lower, h.lower_best, h.primal_residual, h.dual_residual))
            .collect::<Vec<_>>()
    };
    let one = run(1);
    assert_eq!(one, run(3));
    assert_eq!(one, run(0));
}

#[test]
fn single_precision_solve() {
    let inst = capres::model::generate_layered::<f32>(3, 0.1).unwrap();
    let cfg = SolverConfig { eps_rel: 1e-3, prox_tol: 1e-5, simplex_tol: 1e-6, ..SolverConfig::default() };
    let r = solve(&inst, &cfg).unwrap();
    assert_eq!(r.termination, Termination::Converged);
    assert!(r.objective() <= 1.5 * 1.001 + 1e-4);
    assert!(r.lower_bound() <= 1.5 + 1e-4);
}
