//! File formats: instance JSON, result JSON and history CSV, plus
//! independent re-verification of a result against its instance.
//!
//! Node ids are 1-based on disk. Floats are written in the shortest form
//! that parses back to the same value.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::admm::{IterationRecord, SolveReport, SolverConfig, Termination};
use crate::bounds::{lower_bound, HeuristicPolicy};
use crate::error::{Error, Result};
use crate::linalg::{dot, norm_inf, Mat};
use crate::model::{check_feasibility, validate, Edge, Instance, Network, ScenarioSet};
use crate::Scalar;

/// On-disk instance layout; `scenarios` holds one source vector per row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub n: usize,
    pub edges: Vec<[usize; 2]>,
    pub capacity: Vec<f64>,
    pub price: Vec<f64>,
    pub scenarios: Vec<Vec<f64>>,
}

impl InstanceFile {
    pub fn from_instance<T: Scalar>(instance: &Instance<T>) -> Self {
        let net = instance.network();
        Self {
            n: instance.node_count(),
            edges: net.edges().iter().map(|e| [e.tail + 1, e.head + 1]).collect(),
            capacity: to_f64(net.capacity()),
            price: to_f64(net.price()),
            scenarios: instance.scenarios().iter().map(to_f64).collect(),
        }
    }

    /// Builds and validates the instance.
    pub fn into_instance<T: Scalar>(self) -> Result<Instance<T>> {
        let mut edges = Vec::with_capacity(self.edges.len());
        for (j, &[t, h]) in self.edges.iter().enumerate() {
            if t == 0 || h == 0 {
                return Err(Error::InvalidInstance(format!("edge {} uses node 0; node ids start at 1", j + 1)));
            }
            edges.push(Edge::new(t - 1, h - 1));
        }
        let net = Network::new(self.n, edges, from_f64(&self.capacity), from_f64(&self.price))?;
        let columns: Vec<Vec<T>> = self.scenarios.iter().map(|s| from_f64(s)).collect();
        let instance = Instance::new(net, ScenarioSet::new(self.n, &columns)?)?;
        let report = validate(&instance);
        if !report.is_valid() {
            return Err(Error::InvalidInstance(report.messages().join("; ")));
        }
        Ok(instance)
    }
}

fn to_f64<T: Scalar>(v: &[T]) -> Vec<f64> {
    v.iter().map(|x| x.as_f64()).collect()
}

fn from_f64<T: Scalar>(v: &[f64]) -> Vec<T> {
    v.iter().map(|&x| T::lit(x)).collect()
}

fn columns_f64<T: Scalar>(m: &Mat<T>) -> Vec<Vec<f64>> {
    m.columns().map(to_f64).collect()
}

pub fn instance_to_json<T: Scalar>(instance: &Instance<T>) -> String {
    let mut s = serde_json::to_string_pretty(&InstanceFile::from_instance(instance)).expect("instance serializes");
    s.push('\n');
    s
}

pub fn instance_from_json<T: Scalar>(text: &str) -> Result<Instance<T>> {
    serde_json::from_str::<InstanceFile>(text)?.into_instance()
}

pub fn read_instance<T: Scalar>(path: impl AsRef<Path>) -> Result<Instance<T>> {
    instance_from_json(&fs::read_to_string(path)?)
}

pub fn write_instance<T: Scalar>(path: impl AsRef<Path>, instance: &Instance<T>) -> Result<()> {
    Ok(fs::write(path, instance_to_json(instance))?)
}

/// SHA-256 of the compact canonical instance JSON, hex encoded.
pub fn fingerprint<T: Scalar>(instance: &Instance<T>) -> String {
    let canonical = serde_json::to_vec(&InstanceFile::from_instance(instance)).expect("instance serializes");
    hex::encode(Sha256::digest(&canonical))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResultStatus {
    Converged,
    IterationLimit,
    HeuristicOnly,
}

impl From<Termination> for ResultStatus {
    fn from(t: Termination) -> Self {
        match t {
            Termination::Converged => ResultStatus::Converged,
            Termination::IterationLimit => ResultStatus::IterationLimit,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeuristicSummary {
    pub objective: f64,
    pub lower_bound: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundIterations {
    pub upper: usize,
    pub lower: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub total_s: f64,
    pub per_iteration_s: Option<f64>,
}

/// Solver output as written to disk. Matrices are stored one scenario per
/// row, like the instance sources.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultDocument {
    pub fingerprint: String,
    pub status: ResultStatus,
    pub reservation: Vec<f64>,
    /// Best upper bound `pᵀr`.
    pub objective: f64,
    /// Best certified lower bound.
    pub lower_bound: f64,
    /// `(objective − lower_bound)/lower_bound`; `null` when unbounded.
    pub rel_gap: Option<f64>,
    /// `π^(k)ᵀ f^(k)` per scenario.
    pub charges: Vec<f64>,
    /// Scenario prices certifying `lower_bound`.
    pub prices: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flows: Option<Vec<Vec<f64>>>,
    pub heuristic: HeuristicSummary,
    pub iterations: usize,
    pub bound_iterations: BoundIterations,
    pub rho: Option<f64>,
    pub config: SolverConfig,
    pub timing: Timing,
}

/// `(U − L)/L` in the document's own precision.
pub fn document_gap(upper: f64, lower: f64) -> Option<f64> {
    let diff = (upper - lower).max(0.0);
    if lower > 0.0 {
        Some(diff / lower)
    } else if diff == 0.0 {
        Some(0.0)
    } else {
        None
    }
}

impl ResultDocument {
    pub fn from_report<T: Scalar>(
        instance: &Instance<T>,
        report: &SolveReport<T>,
        config: &SolverConfig,
        include_flows: bool,
    ) -> Self {
        let cert = &report.certificate;
        let objective = cert.upper.as_f64();
        let lower = cert.lower.as_f64();
        Self {
            fingerprint: fingerprint(instance),
            status: report.termination.into(),
            reservation: to_f64(&report.reservation),
            objective,
            lower_bound: lower,
            rel_gap: document_gap(objective, lower),
            charges: to_f64(&report.charges()),
            prices: columns_f64(&cert.lower_witness),
            flows: include_flows.then(|| columns_f64(&cert.upper_witness)),
            heuristic: HeuristicSummary {
                objective: report.heuristic.objective.as_f64(),
                lower_bound: report.heuristic.certified_lower_bound.as_f64(),
            },
            iterations: report.iterations,
            bound_iterations: BoundIterations { upper: cert.upper_iteration, lower: cert.lower_iteration },
            rho: Some(report.rho.as_f64()),
            config: config.clone(),
            timing: Timing {
                total_s: report.elapsed_s,
                per_iteration_s: (report.iterations > 0).then(|| report.elapsed_s / report.iterations as f64),
            },
        }
    }

    /// Result for the heuristic policy alone, certified by uniform prices.
    pub fn from_heuristic<T: Scalar>(
        instance: &Instance<T>,
        heuristic: &HeuristicPolicy<T>,
        config: &SolverConfig,
        include_flows: bool,
        elapsed_s: f64,
    ) -> Self {
        let k = instance.scenario_count();
        let share: Vec<f64> = instance.price().iter().map(|p| p.as_f64() / k as f64).collect();
        let charges = heuristic.scenario_costs.iter().map(|c| c.as_f64() / k as f64).collect();
        let objective = heuristic.objective.as_f64();
        let lower = heuristic.certified_lower_bound.as_f64();
        Self {
            fingerprint: fingerprint(instance),
            status: ResultStatus::HeuristicOnly,
            reservation: to_f64(&heuristic.flows.row_max()),
            objective,
            lower_bound: lower,
            rel_gap: document_gap(objective, lower),
            charges,
            prices: vec![share; k],
            flows: include_flows.then(|| columns_f64(&heuristic.flows)),
            heuristic: HeuristicSummary { objective, lower_bound: lower },
            iterations: 0,
            bound_iterations: BoundIterations { upper: 0, lower: 0 },
            rho: None,
            config: config.clone(),
            timing: Timing { total_s: elapsed_s, per_iteration_s: None },
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("result serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        Ok(fs::write(path, self.to_json())?)
    }
}

pub const HISTORY_HEADER: &str = "iter,U,U_best,L,L_best,rel_gap,primal_res,dual_res,elapsed_s";

/// History as CSV text: a header and one row per iteration; `U` and `L`
/// are blank on iterations where they were not computed.
pub fn history_csv(records: &[IterationRecord]) -> String {
    let mut out = String::with_capacity(64 * (records.len() + 1));
    out.push_str(HISTORY_HEADER);
    out.push('\n');
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.iter,
            opt(r.upper),
            r.upper_best,
            opt(r.lower),
            r.lower_best,
            r.rel_gap,
            r.primal_residual,
            r.dual_residual,
            r.elapsed_s
        )
        .expect("writing to a String");
    }
    out
}

pub fn write_history(path: impl AsRef<Path>, records: &[IterationRecord]) -> Result<()> {
    Ok(fs::write(path, history_csv(records))?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckItem {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CheckReport {
    pub items: Vec<CheckItem>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.items.iter().all(|i| i.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckItem> {
        self.items.iter().filter(|i| !i.passed)
    }

    fn push(&mut self, name: &'static str, failure: Option<String>) {
        let passed = failure.is_none();
        let detail = failure.unwrap_or_else(|| "ok".into());
        self.items.push(CheckItem { name, passed, detail });
    }
}

/// Re-verifies a result document against its instance using only the
/// instance data: the reservation supports every scenario, the prices are
/// valid, both bounds are recomputed, and the stored gap is consistent.
/// `tol` is relative.
pub fn check_result(instance: &Instance<f64>, doc: &ResultDocument, tol: f64) -> Result<CheckReport> {
    let fp = fingerprint(instance);
    if fp != doc.fingerprint {
        return Err(Error::FingerprintMismatch { result: doc.fingerprint.clone(), instance: fp });
    }
    let (m, k) = (instance.edge_count(), instance.scenario_count());
    let p = instance.price();
    let cap = instance.capacity();
    let mut report = CheckReport::default();

    let shape = |rows: &Vec<Vec<f64>>| rows.len() == k && rows.iter().all(|r| r.len() == m);
    if doc.reservation.len() != m || !shape(&doc.prices) || doc.flows.as_ref().is_some_and(|f| !shape(f)) {
        report.push("dimensions", Some(format!("result does not match {m} edges and {k} scenarios")));
        return Ok(report);
    }
    report.push("dimensions", None);
    let r = &doc.reservation;

    // reservation supports each scenario
    let support = match &doc.flows {
        Some(flows) => {
            let net = instance.network();
            let mut failure = None;
            'outer: for (c, f) in flows.iter().enumerate() {
                let s = instance.source(c);
                let scale = 1.0 + norm_inf(s);
                let residual = net.conservation_residual(f, s);
                if residual > tol * scale {
                    failure = Some(format!("scenario {} violates conservation by {residual:e}", c + 1));
                    break;
                }
                for j in 0..m {
                    let slack = tol * (1.0 + r[j].abs());
                    if f[j] < -slack || f[j] > cap[j] + slack {
                        failure = Some(format!("edge {} flow {} outside [0, c] in scenario {}", j + 1, f[j], c + 1));
                        break 'outer;
                    }
                    if f[j] > r[j] + slack {
                        failure = Some(format!(
                            "edge {} reservation {} below scenario {} flow {}",
                            j + 1,
                            r[j],
                            c + 1,
                            f[j]
                        ));
                        break 'outer;
                    }
                }
            }
            failure
        }
        None => {
            let clipped: Vec<f64> = r.iter().zip(cap).map(|(&rj, &cj)| rj.min(cj).max(0.0)).collect();
            let reduced = instance.with_network(instance.network().with_capacity(clipped)?)?;
            let infeasible = check_feasibility(&reduced, tol.max(1e-10)).infeasible();
            (!infeasible.is_empty()).then(|| {
                let list: Vec<String> = infeasible.iter().map(|c| (c + 1).to_string()).collect();
                format!("reservation cannot route scenarios {}", list.join(", "))
            })
        }
    };
    report.push("reservation supports scenarios", support);

    let upper = dot(p, r);
    let u_scale = 1.0 + upper.abs();
    report.push(
        "objective equals price of reservation",
        ((upper - doc.objective).abs() > tol * u_scale)
            .then(|| format!("pᵀr = {upper}, result states {}", doc.objective)),
    );

    // scenario prices
    let pi = Mat::from_columns(m, &doc.prices);
    let p_scale = norm_inf(p).max(1.0);
    let mut price_failure = None;
    'prices: for j in 0..m {
        let row = pi.row(j);
        for (c, &v) in row.iter().enumerate() {
            if v < -tol * p_scale {
                price_failure = Some(format!("price of edge {} in scenario {} is negative ({v})", j + 1, c + 1));
                break 'prices;
            }
        }
        let sum: f64 = row.iter().sum();
        if (sum - p[j]).abs() > tol * p_scale {
            price_failure = Some(format!("prices of edge {} sum to {sum}, edge price is {}", j + 1, p[j]));
            break;
        }
    }
    let prices_ok = price_failure.is_none();
    report.push("valid scenario prices", price_failure);

    if prices_ok {
        // tiny violations within `tol` are projected away so the recomputed
        // bound is certified for prices that are exactly valid
        let mut exact = pi.clone();
        for j in 0..m {
            let row: Vec<f64> = exact.row(j).iter().map(|v| v.max(0.0)).collect();
            let sum: f64 = row.iter().sum();
            for (c, v) in row.into_iter().enumerate() {
                let scaled = if sum > 0.0 { v * p[j] / sum } else { p[j] / k as f64 };
                exact.set(j, c, scaled);
            }
        }
        let lb = lower_bound(instance, &exact, 1e-11)?.value;
        report.push(
            "lower bound reproduced",
            (doc.lower_bound > lb + tol * (1.0 + lb.abs()))
                .then(|| format!("prices certify {lb}, result states {}", doc.lower_bound)),
        );
    } else {
        report.push("lower bound reproduced", Some("prices invalid".into()));
    }

    report.push(
        "lower bound below upper bound",
        (doc.lower_bound > doc.objective + tol * u_scale)
            .then(|| format!("lower bound {} exceeds objective {}", doc.lower_bound, doc.objective)),
    );
    let gap_ok = match (doc.rel_gap, document_gap(doc.objective, doc.lower_bound)) {
        (Some(a), Some(b)) => (a - b).abs() <= 1e-12 * (1.0 + b.abs()),
        (None, None) => true,
        _ => false,
    };
    report.push("gap consistent", (!gap_ok).then(|| format!("stated gap {:?} does not match bounds", doc.rel_gap)));
    Ok(report)
}
