use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Scalar;

/// A directed edge `tail → head` between 0-based node ids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Edge {
    pub tail: usize,
    pub head: usize,
}

impl Edge {
    pub const fn new(tail: usize, head: usize) -> Self {
        Self { tail, head }
    }
}

/// Directed network with per-edge capacities and reservation prices.
///
/// The incidence matrix `A` is implicit: column `j` has `+1` at the head of
/// edge `j` and `-1` at its tail, so conservation reads `A f + s = 0` with
/// positive sources injecting flow.
#[derive(Debug, Clone, PartialEq)]
pub struct Network<T> {
    node_count: usize,
    edges: Vec<Edge>,
    capacity: Vec<T>,
    price: Vec<T>,
}

impl<T: Scalar> Network<T> {
    /// Builds a network, rejecting structurally unusable data (length
    /// mismatches and endpoints out of range). Sign, self-loop and
    /// connectivity problems are reported by [`crate::model::validate`].
    pub fn new(node_count: usize, edges: Vec<Edge>, capacity: Vec<T>, price: Vec<T>) -> Result<Self> {
        if node_count == 0 {
            return Err(Error::InvalidNetwork("node count must be positive".into()));
        }
        if capacity.len() != edges.len() || price.len() != edges.len() {
            return Err(Error::InvalidNetwork(format!(
                "{} edges but {} capacities and {} prices",
                edges.len(),
                capacity.len(),
                price.len()
            )));
        }
        for e in &edges {
            for node in [e.tail, e.head] {
                if node >= node_count {
                    return Err(Error::InvalidNode { node, node_count });
                }
            }
        }
        Ok(Self { node_count, edges, capacity, price })
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.node_count
    }

    #[inline]
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    #[inline]
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    #[inline]
    pub fn capacity(&self) -> &[T] {
        &self.capacity
    }

    #[inline]
    pub fn price(&self) -> &[T] {
        &self.price
    }

    /// Same topology and capacities with a different price vector.
    pub fn with_price(&self, price: Vec<T>) -> Result<Self> {
        Self::new(self.node_count, self.edges.clone(), self.capacity.clone(), price)
    }

    /// Same topology and prices with a different capacity vector.
    pub fn with_capacity(&self, capacity: Vec<T>) -> Result<Self> {
        Self::new(self.node_count, self.edges.clone(), capacity, self.price.clone())
    }

    /// `out = A f`.
    pub fn incidence_mul(&self, f: &[T], out: &mut [T]) {
        debug_assert_eq!(f.len(), self.edges.len());
        out.iter_mut().for_each(|v| *v = T::zero());
        for (e, &fj) in self.edges.iter().zip(f) {
            out[e.head] += fj;
            out[e.tail] -= fj;
        }
    }

    /// `out = Aᵀ y`, i.e. `y[head] - y[tail]` per edge.
    pub fn incidence_t_mul(&self, y: &[T], out: &mut [T]) {
        debug_assert_eq!(y.len(), self.node_count);
        for (o, e) in out.iter_mut().zip(&self.edges) {
            *o = y[e.head] - y[e.tail];
        }
    }

    /// `‖A f + s‖∞`.
    pub fn conservation_residual(&self, f: &[T], s: &[T]) -> T {
        let mut r = s.to_vec();
        for (e, &fj) in self.edges.iter().zip(f) {
            r[e.head] += fj;
            r[e.tail] -= fj;
        }
        crate::linalg::norm_inf(&r)
    }

    /// Largest violation of `0 ≤ f ≤ c`.
    pub fn box_violation(&self, f: &[T]) -> T {
        f.iter()
            .zip(&self.capacity)
            .fold(T::zero(), |m, (&v, &c)| m.max(-v).max(v - c))
    }

    /// Connected components of the underlying undirected graph, as a
    /// component label per node.
    pub fn components(&self) -> Vec<usize> {
        components_of(self.node_count, self.edges.iter().copied())
    }

    pub fn is_connected(&self) -> bool {
        self.components().iter().all(|&c| c == 0)
    }

    /// Hash of the topology (node count and ordered edge list).
    pub fn fingerprint(&self) -> u64 {
        let mut h = DefaultHasher::new();
        self.node_count.hash(&mut h);
        self.edges.hash(&mut h);
        h.finish()
    }
}

/// Union-find component labelling, labels renumbered in order of first node.
pub(crate) fn components_of(n: usize, edges: impl Iterator<Item = Edge>) -> Vec<usize> {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for e in edges {
        let (a, b) = (find(&mut parent, e.tail), find(&mut parent, e.head));
        if a != b {
            parent[a.max(b)] = a.min(b);
        }
    }
    let mut label = vec![usize::MAX; n];
    let mut out = vec![0; n];
    let mut next = 0;
    for i in 0..n {
        let r = find(&mut parent, i);
        if label[r] == usize::MAX {
            label[r] = next;
            next += 1;
        }
        out[i] = label[r];
    }
    out
}
