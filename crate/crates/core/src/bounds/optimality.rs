use super::price_violations;
use crate::error::{Error, Result};
use crate::flow::min_cost_flow;
use crate::linalg::{dot, norm_inf, Mat};
use crate::model::Instance;
use crate::Scalar;

pub const DEFAULT_OPTIMALITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionCheck {
    pub passed: bool,
    /// Worst absolute violation found.
    pub worst: f64,
    /// Scenario or edge index of the worst violation, when meaningful.
    pub at: Option<usize>,
}

impl ConditionCheck {
    fn new(worst: f64, limit: f64, at: Option<usize>) -> Self {
        Self { passed: worst <= limit, worst, at }
    }
}

/// Independent verdicts on the three optimality conditions for a flow
/// policy `F` and scenario prices `Π`, plus complementary slackness.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimalityReport {
    /// `Π ≥ 0` and `Π·1 = p`.
    pub valid_prices: ConditionCheck,
    /// `pᵀ max_k f^(k) = Σ_k π^(k)ᵀ f^(k)`.
    pub tight: ConditionCheck,
    /// Each `f^(k)` is a min-cost flow at prices `π^(k)`.
    pub min_cost: ConditionCheck,
    /// `π_j^(k)·(f_j^(k) − r_j) = 0`.
    pub complementarity: ConditionCheck,
}

impl OptimalityReport {
    pub fn all_passed(&self) -> bool {
        self.valid_prices.passed && self.tight.passed && self.min_cost.passed && self.complementarity.passed
    }
}

/// Checks the optimality conditions for `(F, Π)` with relative tolerance
/// `tol`.
pub fn verify_optimality<T: Scalar>(
    instance: &Instance<T>,
    flows: &Mat<T>,
    prices: &Mat<T>,
    tol: T,
) -> Result<OptimalityReport> {
    let (m, k) = (instance.edge_count(), instance.scenario_count());
    for (name, mat) in [("flows", flows), ("prices", prices)] {
        if mat.rows() != m || mat.cols() != k {
            return Err(Error::DimensionMismatch(format!(
                "{name} is {}x{}, instance needs {m}x{k}",
                mat.rows(),
                mat.cols()
            )));
        }
    }
    let p = instance.price();
    let tol_f = tol.as_f64();
    let p_scale = norm_inf(p).max(T::one()).as_f64();

    let (neg, sum) = price_violations(prices, p)?;
    let valid_prices = ConditionCheck::new(neg.max(sum).as_f64(), tol_f * p_scale, None);

    let reservation = flows.row_max();
    let upper = dot(p, &reservation);
    let charged = flows.inner(prices);
    let tight = ConditionCheck::new((upper - charged).abs().as_f64(), tol_f * (1.0 + upper.abs().as_f64()), None);

    // condition 3 through the dual certificate of each scenario LP
    let net = instance.network();
    let mut worst3 = 0.0f64;
    let mut at3 = None;
    let mut passed3 = true;
    for c in 0..k {
        let f = flows.col(c);
        let pi: Vec<T> = prices.col(c).iter().map(|&v| v.max(T::zero())).collect();
        let s = instance.source(c);
        let cost = dot(&pi, f).as_f64();
        let feas = net.conservation_residual(f, s).max(net.box_violation(f)).as_f64();
        let gap = match min_cost_flow(net, s, &pi, T::tol(1e-11)) {
            Ok(sol) => (cost - sol.certified_value.as_f64()).max(0.0),
            Err(_) => f64::INFINITY,
        };
        let scale = 1.0 + cost.abs();
        let s_scale = 1.0 + norm_inf(s).as_f64();
        let violation = (gap / scale).max(feas / s_scale);
        if violation > worst3 {
            worst3 = violation;
            at3 = Some(c);
        }
        if !(gap <= tol_f * scale && feas <= tol_f * s_scale) {
            passed3 = false;
        }
    }
    let min_cost = ConditionCheck { passed: passed3, worst: worst3, at: at3 };

    let mut worst_c = 0.0f64;
    let mut at_c = None;
    for c in 0..k {
        for j in 0..m {
            let v = (prices.get(j, c) * (flows.get(j, c) - reservation[j])).abs().as_f64();
            if v > worst_c {
                worst_c = v;
                at_c = Some(j);
            }
        }
    }
    let r_scale = norm_inf(&reservation).max(T::one()).as_f64();
    let complementarity = ConditionCheck::new(worst_c, tol_f * p_scale * r_scale, at_c);

    Ok(OptimalityReport { valid_prices, tight, min_cost, complementarity })
}
