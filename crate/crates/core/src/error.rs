use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("node id {node} out of range (network has {node_count} nodes)")]
    InvalidNode { node: usize, node_count: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("scenario {scenario} is infeasible (unrouted supply {shortfall:e})")]
    InfeasibleScenario { scenario: usize, shortfall: f64 },

    #[error("infeasible instance: scenarios {0:?} admit no feasible flow")]
    InfeasibleInstance(Vec<usize>),

    #[error("flow solver did not converge in {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("incidence factorization failed: {0}")]
    Factorization(String),

    #[error("kkt cache was built for a different network")]
    CacheMismatch,

    #[error("scenario {scenario}: {source}")]
    Scenario {
        scenario: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid scenario prices: {0}")]
    InvalidPrices(String),

    #[error("flow matrix infeasible: scenario {scenario} residual {residual:e}")]
    InfeasibleFlows { scenario: usize, residual: f64 },

    #[error("query source lies outside the scenario convex hull (residual {residual:e})")]
    OutsideHull { residual: f64 },

    #[error("generator: {0}")]
    Generator(String),

    #[error("instance fingerprint mismatch: result {result}, instance {instance}")]
    FingerprintMismatch { result: String, instance: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn in_scenario(self, scenario: usize) -> Self {
        match self {
            Error::InfeasibleScenario { shortfall, .. } => {
                Error::InfeasibleScenario { scenario, shortfall }
            }
            other => Error::Scenario { scenario, source: Box::new(other) },
        }
    }
}
