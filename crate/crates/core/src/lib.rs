#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

//! Capacity reservation for flow networks under multiple demand scenarios.
//!
//! Chooses per-edge reservations `r` of minimum price `pᵀr` such that every
//! scenario admits a feasible flow below `r`, using a consensus ADMM solver
//! that carries certified upper and lower bounds on the optimal cost.

mod error;
mod scalar;

pub mod admm;
pub mod bounds;
pub mod flow;
pub mod io;
pub mod linalg;
pub mod model;
pub mod prox_max;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub use admm::{solve, SolveReport, SolverConfig, Termination};
pub use bounds::{BoundsCertificate, HeuristicPolicy};
pub use io::{CheckReport, ResultDocument};
pub use linalg::Mat;
pub use model::{Edge, Instance, Network, ScenarioSet};

pub type Mat64 = Mat<f64>;
pub type Mat32 = Mat<f32>;
pub type Network64 = Network<f64>;
pub type Network32 = Network<f32>;
pub type Instance64 = Instance<f64>;
pub type Instance32 = Instance<f32>;
pub type SolveReport64 = SolveReport<f64>;
pub type SolveReport32 = SolveReport<f32>;
