use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::model::{Edge, Instance, Network, ScenarioSet};
use crate::Scalar;

/// Replaces node `node` by an inlet (keeping the id) and a new outlet (id
/// `n`), joined by an edge of capacity `node_capacity` and price zero.
/// Edges entering the node keep entering the inlet; edges leaving it now
/// leave the outlet. Edge order is preserved and the new edge is appended.
pub fn split_capacitated_node<T: Scalar>(network: &Network<T>, node: usize, node_capacity: T) -> Result<Network<T>> {
    let n = network.node_count();
    if node >= n {
        return Err(Error::InvalidNode { node, node_count: n });
    }
    if !(node_capacity >= T::zero()) {
        return Err(Error::InvalidParameter(format!("node capacity must be nonnegative, got {node_capacity}")));
    }
    let outlet = n;
    let mut edges: Vec<Edge> = network
        .edges()
        .iter()
        .map(|e| Edge::new(if e.tail == node { outlet } else { e.tail }, e.head))
        .collect();
    edges.push(Edge::new(node, outlet));
    let mut capacity = network.capacity().to_vec();
    capacity.push(node_capacity);
    let mut price = network.price().to_vec();
    price.push(T::zero());
    Network::new(n + 1, edges, capacity, price)
}

/// Instance-level node split. Injections at the node enter at the inlet and
/// withdrawals leave from the outlet, so every unit touching the node is
/// counted against its capacity.
pub fn split_capacitated_node_instance<T: Scalar>(
    instance: &Instance<T>,
    node: usize,
    node_capacity: T,
) -> Result<Instance<T>> {
    let network = split_capacitated_node(instance.network(), node, node_capacity)?;
    let n = instance.node_count();
    let k = instance.scenario_count();
    let mut sources = Mat::zeros(n + 1, k);
    for (col, s) in instance.scenarios().iter().enumerate() {
        let out = sources.col_mut(col);
        out[..n].copy_from_slice(s);
        if s[node] < T::zero() {
            out[n] = s[node];
            out[node] = T::zero();
        }
    }
    Instance::new(network, ScenarioSet::from_matrix(sources)?)
}
