use crate::error::Error;
use crate::flow::min_cost_flow;
use crate::model::Instance;
use crate::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioFeasibility {
    pub scenario: usize,
    pub feasible: bool,
    /// Supply left on artificial arcs after phase 1 (0 when feasible).
    pub shortfall: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport {
    pub scenarios: Vec<ScenarioFeasibility>,
}

impl FeasibilityReport {
    pub fn all_feasible(&self) -> bool {
        self.scenarios.iter().all(|s| s.feasible)
    }

    /// 0-based indices of infeasible scenarios.
    pub fn infeasible(&self) -> Vec<usize> {
        self.scenarios.iter().filter(|s| !s.feasible).map(|s| s.scenario).collect()
    }
}

/// Decides per scenario whether some `0 ≤ f ≤ c` satisfies `A f + s = 0`,
/// by a zero-price phase-1 network simplex with artificial arcs.
pub fn check_feasibility<T: Scalar>(instance: &Instance<T>, rel_tol: T) -> FeasibilityReport {
    let net = instance.network();
    let zero = vec![T::zero(); net.edge_count()];
    let scenarios = instance
        .scenarios()
        .iter()
        .enumerate()
        .map(|(k, s)| match min_cost_flow(net, s, &zero, rel_tol) {
            Ok(_) => ScenarioFeasibility { scenario: k, feasible: true, shortfall: 0.0 },
            Err(Error::InfeasibleScenario { shortfall, .. }) => {
                ScenarioFeasibility { scenario: k, feasible: false, shortfall }
            }
            Err(_) => ScenarioFeasibility { scenario: k, feasible: false, shortfall: f64::NAN },
        })
        .collect();
    FeasibilityReport { scenarios }
}
