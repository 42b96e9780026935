use std::fmt;

use crate::error::{Error, Result};
use crate::model::{Network, ScenarioSet};
use crate::Scalar;

/// Default relative tolerance for column sums and feasibility checks.
pub const DEFAULT_MODEL_TOL: f64 = 1e-9;

/// A complete capacity reservation problem: network plus scenario sources.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance<T> {
    network: Network<T>,
    scenarios: ScenarioSet<T>,
    feasible: bool,
}

impl<T: Scalar> Instance<T> {
    pub fn new(network: Network<T>, scenarios: ScenarioSet<T>) -> Result<Self> {
        if scenarios.node_count() != network.node_count() {
            return Err(Error::DimensionMismatch(format!(
                "scenarios have {} nodes, network has {}",
                scenarios.node_count(),
                network.node_count()
            )));
        }
        Ok(Self { network, scenarios, feasible: false })
    }

    #[inline]
    pub fn network(&self) -> &Network<T> {
        &self.network
    }

    #[inline]
    pub fn scenarios(&self) -> &ScenarioSet<T> {
        &self.scenarios
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.network.node_count()
    }

    #[inline]
    pub fn edge_count(&self) -> usize {
        self.network.edge_count()
    }

    #[inline]
    pub fn scenario_count(&self) -> usize {
        self.scenarios.len()
    }

    #[inline]
    pub fn price(&self) -> &[T] {
        self.network.price()
    }

    #[inline]
    pub fn capacity(&self) -> &[T] {
        self.network.capacity()
    }

    #[inline]
    pub fn source(&self, k: usize) -> &[T] {
        self.scenarios.source(k)
    }

    /// True once [`crate::model::check_feasibility`] has confirmed every
    /// scenario through [`Instance::certify_feasible`].
    pub fn is_known_feasible(&self) -> bool {
        self.feasible
    }

    /// Runs the feasibility check and records the outcome.
    pub fn certify_feasible(&mut self, rel_tol: T) -> crate::model::FeasibilityReport {
        let report = crate::model::check_feasibility(self, rel_tol);
        self.feasible = report.all_feasible();
        report
    }

    pub fn with_network(&self, network: Network<T>) -> Result<Self> {
        Self::new(network, self.scenarios.clone())
    }

    pub fn with_scenarios(&self, scenarios: ScenarioSet<T>) -> Result<Self> {
        Self::new(self.network.clone(), scenarios)
    }
}

/// One violated instance invariant.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NotConnected { components: usize },
    SelfLoop { edge: usize },
    NegativeCapacity { edge: usize },
    NegativePrice { edge: usize },
    NonFinite { what: &'static str, index: usize },
    UnbalancedSource { scenario: usize },
}

impl fmt::Display for Violation {
    // indices are printed 1-based to match the file format
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NotConnected { components } => {
                write!(f, "graph not connected ({components} components)")
            }
            Violation::SelfLoop { edge } => write!(f, "edge {} is a self-loop", edge + 1),
            Violation::NegativeCapacity { edge } => {
                write!(f, "edge {} has negative capacity", edge + 1)
            }
            Violation::NegativePrice { edge } => write!(f, "edge {} has negative price", edge + 1),
            Violation::NonFinite { what, index } => write!(f, "{what} {} is not finite", index + 1),
            Violation::UnbalancedSource { scenario } => {
                write!(f, "source column {} does not sum to zero", scenario + 1)
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn messages(&self) -> Vec<String> {
        self.violations.iter().map(ToString::to_string).collect()
    }
}

/// Checks every instance invariant with the default column-sum tolerance.
pub fn validate<T: Scalar>(instance: &Instance<T>) -> ValidationReport {
    validate_with_tol(instance, T::tol(DEFAULT_MODEL_TOL))
}

pub fn validate_with_tol<T: Scalar>(instance: &Instance<T>, rel_tol: T) -> ValidationReport {
    let net = instance.network();
    let mut violations = Vec::new();

    let comps = net.components();
    let n_comp = comps.iter().copied().max().map_or(0, |c| c + 1);
    if n_comp > 1 {
        violations.push(Violation::NotConnected { components: n_comp });
    }
    for (j, e) in net.edges().iter().enumerate() {
        if e.tail == e.head {
            violations.push(Violation::SelfLoop { edge: j });
        }
    }
    for (j, &c) in net.capacity().iter().enumerate() {
        if !c.is_finite() {
            violations.push(Violation::NonFinite { what: "capacity", index: j });
        } else if c < T::zero() {
            violations.push(Violation::NegativeCapacity { edge: j });
        }
    }
    for (j, &p) in net.price().iter().enumerate() {
        if !p.is_finite() {
            violations.push(Violation::NonFinite { what: "price", index: j });
        } else if p < T::zero() {
            violations.push(Violation::NegativePrice { edge: j });
        }
    }
    for (k, s) in instance.scenarios().iter().enumerate() {
        if s.iter().any(|v| !v.is_finite()) {
            violations.push(Violation::NonFinite { what: "scenario", index: k });
        }
    }
    violations.extend(
        instance
            .scenarios()
            .unbalanced(rel_tol)
            .into_iter()
            .map(|scenario| Violation::UnbalancedSource { scenario }),
    );
    ValidationReport { violations }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Edge;

    fn single_edge(s: Vec<f64>) -> Instance<f64> {
        let net = Network::new(2, vec![Edge::new(0, 1)], vec![1.0], vec![1.0]).unwrap();
        Instance::new(net, ScenarioSet::new(2, &[s]).unwrap()).unwrap()
    }

    #[test]
    fn smallest_legal_instance_is_valid() {
        assert!(validate(&single_edge(vec![1.0, -1.0])).is_valid());
    }

    #[test]
    fn unbalanced_column_reported() {
        let report = validate(&single_edge(vec![1.0, 0.0]));
        assert_eq!(report.messages(), vec!["source column 1 does not sum to zero"]);
    }

    #[test]
    fn disconnected_graph_reported() {
        let net = Network::<f64>::new(2, vec![], vec![], vec![]).unwrap();
        let inst = Instance::new(net, ScenarioSet::new(2, &[vec![0.0, 0.0]]).unwrap()).unwrap();
        let report = validate(&inst);
        assert_eq!(report.violations, vec![Violation::NotConnected { components: 2 }]);
        assert!(report.messages()[0].starts_with("graph not connected"));
    }

    #[test]
    fn reports_every_violation() {
        let net =
            Network::new(2, vec![Edge::new(0, 1), Edge::new(1, 1)], vec![-1.0, 1.0], vec![1.0, -2.0])
                .unwrap();
        let inst = Instance::new(net, ScenarioSet::new(2, &[vec![1.0, 0.5]]).unwrap()).unwrap();
        let report = validate(&inst);
        assert_eq!(report.violations.len(), 4);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let net = Network::new(2, vec![Edge::new(0, 1)], vec![1.0], vec![1.0]).unwrap();
        let scen = ScenarioSet::new(3, &[vec![1.0, -1.0, 0.0]]).unwrap();
        assert!(Instance::new(net, scen).is_err());
    }
}
