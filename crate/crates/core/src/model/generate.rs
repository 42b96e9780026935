//! Deterministic instance generators.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::model::{Edge, Instance, Network, ScenarioSet};
use crate::Scalar;

/// Layered worst case for the per-scenario heuristic: `a` entry nodes, `a`
/// middle nodes and one sink.
///
/// Entry `i` connects to every middle node `a+j` at price `ε` when `i = j`
/// and `2ε` otherwise; every middle node connects to the sink at price 1.
/// Scenario `k` moves one unit from entry `k` to the sink. All capacities
/// are 1.
pub fn generate_layered<T: Scalar>(a: usize, eps: T) -> Result<Instance<T>> {
    if a == 0 {
        return Err(Error::InvalidParameter("layer width must be at least 1".into()));
    }
    if !(eps > T::zero()) {
        return Err(Error::InvalidParameter(format!("epsilon must be positive, got {eps}")));
    }
    let n = 2 * a + 1;
    let sink = 2 * a;
    let mut edges = Vec::with_capacity(a * a + a);
    let mut price = Vec::with_capacity(a * a + a);
    for i in 0..a {
        for j in 0..a {
            edges.push(Edge::new(i, a + j));
            price.push(if i == j { eps } else { eps + eps });
        }
    }
    for j in 0..a {
        edges.push(Edge::new(a + j, sink));
        price.push(T::one());
    }
    let capacity = vec![T::one(); edges.len()];
    let network = Network::new(n, edges, capacity, price)?;
    let columns: Vec<Vec<T>> = (0..a)
        .map(|k| {
            let mut s = vec![T::zero(); n];
            s[k] = T::one();
            s[sink] = -T::one();
            s
        })
        .collect();
    Instance::new(network, ScenarioSet::new(n, &columns)?)
}

/// How the per-edge witness flows `z` behind `s = −A z` are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceStyle {
    /// Uniform on `[0, 1]`.
    Continuous,
    /// Uniform on `{0, 1/3, 2/3, 1}`.
    Discrete,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PriceStyle {
    /// Uniform on `[0, 1]`.
    Uniform,
    /// All ones.
    Ones,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RandomSpec {
    pub nodes: usize,
    pub edges: usize,
    pub scenarios: usize,
    pub sources: SourceStyle,
    pub prices: PriceStyle,
    pub seed: u64,
}

/// Random connected instance with unit capacities: a random spanning tree
/// plus `m − n + 1` extra distinct directed edges. Sources are `s = −A z`
/// with `0 ≤ z ≤ 1`, so every scenario is feasible.
pub fn generate_random<T: Scalar>(spec: &RandomSpec) -> Result<Instance<T>> {
    generate_random_with_witness(spec).map(|(inst, _)| inst)
}

/// Like [`generate_random`], also returning the witness flows `z` (one
/// column per scenario).
pub fn generate_random_with_witness<T: Scalar>(spec: &RandomSpec) -> Result<(Instance<T>, Mat<T>)> {
    let RandomSpec { nodes: n, edges: m, scenarios: k, .. } = *spec;
    if n < 2 {
        return Err(Error::Generator("need at least 2 nodes".into()));
    }
    if m < n - 1 {
        return Err(Error::Generator(format!("{m} edges cannot connect {n} nodes")));
    }
    if m > n * (n - 1) {
        return Err(Error::Generator(format!(
            "{m} distinct directed edges requested but only {} exist on {n} nodes",
            n * (n - 1)
        )));
    }
    if k == 0 {
        return Err(Error::Generator("need at least one scenario".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng);
    let mut seen = HashSet::with_capacity(m);
    let mut edges = Vec::with_capacity(m);
    for i in 1..n {
        let u = perm[i];
        let v = perm[rng.gen_range(0..i)];
        let e = if rng.gen_bool(0.5) { Edge::new(u, v) } else { Edge::new(v, u) };
        seen.insert((e.tail, e.head));
        edges.push(e);
    }
    while edges.len() < m {
        let t = rng.gen_range(0..n);
        let h = rng.gen_range(0..n);
        if t != h && seen.insert((t, h)) {
            edges.push(Edge::new(t, h));
        }
    }
    edges.shuffle(&mut rng);

    let price: Vec<T> = match spec.prices {
        PriceStyle::Uniform => (0..m).map(|_| T::lit(rng.gen::<f64>())).collect(),
        PriceStyle::Ones => vec![T::one(); m],
    };
    let network = Network::new(n, edges, vec![T::one(); m], price)?;

    let levels = [0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0];
    let mut z = Mat::zeros(m, k);
    let mut sources = Mat::zeros(n, k);
    for col in 0..k {
        let zc = z.col_mut(col);
        for v in zc.iter_mut() {
            *v = T::lit(match spec.sources {
                SourceStyle::Continuous => rng.gen::<f64>(),
                SourceStyle::Discrete => levels[rng.gen_range(0..levels.len())],
            });
        }
        let s = sources.col_mut(col);
        network.incidence_mul(z.col(col), s);
        s.iter_mut().for_each(|v| *v = -*v);
    }
    let instance = Instance::new(network, ScenarioSet::from_matrix(sources)?)?;
    Ok((instance, z))
}
