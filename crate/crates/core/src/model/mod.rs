//! Networks, scenario sets, instances, validation, graph transforms and
//! deterministic instance generators.

mod feasibility;
mod generate;
mod instance;
pub(crate) mod network;
mod scenario;
mod transform;

pub use feasibility::{check_feasibility, FeasibilityReport, ScenarioFeasibility};
pub use generate::{
    generate_layered, generate_random, generate_random_with_witness, PriceStyle, RandomSpec,
    SourceStyle,
};
pub use instance::{validate, validate_with_tol, Instance, ValidationReport, Violation, DEFAULT_MODEL_TOL};
pub use network::{Edge, Network};
pub use scenario::ScenarioSet;
pub use transform::{split_capacitated_node, split_capacitated_node_instance};
