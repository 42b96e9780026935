//! Primal network simplex for `min πᵀf  s.t.  A f + s = 0, 0 ≤ f ≤ c` over
//! real-valued data.
//!
//! The starting basis is a star of artificial arcs through an extra root
//! node, priced at `max(π)·m + 1`. Any artificial flow left at optimality
//! means the scenario is infeasible. Entering arcs are chosen by the largest
//! reduced-cost violation; after a run of degenerate pivots the rule drops
//! to Bland's (lowest eligible index in, lowest blocking index out) until a
//! pivot makes progress again, which rules out cycling.

use std::collections::VecDeque;

use super::{lp_dual_value, FlowSolution, SolveStatus};
use crate::error::{Error, Result};
use crate::model::Network;
use crate::Scalar;

pub const DEFAULT_SIMPLEX_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ArcState {
    Tree,
    Lower,
    Upper,
}

struct Simplex<'a, T> {
    n: usize,
    root: usize,
    tail: Vec<usize>,
    head: Vec<usize>,
    cost: Vec<T>,
    cap: Vec<T>,
    flow: Vec<T>,
    state: Vec<ArcState>,
    supply: Vec<T>,
    // spanning tree rooted at `root`
    parent: Vec<usize>,
    pred: Vec<usize>,
    depth: Vec<usize>,
    order: Vec<usize>,
    potential: Vec<T>,
    tree_adj: Vec<Vec<usize>>,
    network: &'a Network<T>,
    rc_tol: T,
    flow_tol: T,
}

impl<'a, T: Scalar> Simplex<'a, T> {
    fn new(network: &'a Network<T>, source: &[T], price: &[T], tol: T) -> Self {
        let n = network.node_count();
        let m = network.edge_count();
        let root = n;
        let max_price = price.iter().copied().fold(T::zero(), T::max);
        let big_m = max_price * T::of_usize(m.max(1)) + T::one();

        let mut tail = Vec::with_capacity(m + n);
        let mut head = Vec::with_capacity(m + n);
        for e in network.edges() {
            tail.push(e.tail);
            head.push(e.head);
        }
        let mut cost = price.to_vec();
        let mut cap = network.capacity().to_vec();
        let mut flow = vec![T::zero(); m];
        let mut state = vec![ArcState::Lower; m];
        for (i, &s) in source.iter().enumerate() {
            // supply i → root, demand root → i
            if s >= T::zero() {
                tail.push(i);
                head.push(root);
                flow.push(s);
            } else {
                tail.push(root);
                head.push(i);
                flow.push(-s);
            }
            cost.push(big_m);
            cap.push(T::infinity());
            state.push(ArcState::Tree);
        }
        let mut supply = source.to_vec();
        let imbalance: T = source.iter().copied().sum();
        supply.push(-imbalance);

        let scale = max_price.max(T::one());
        let s_scale = crate::linalg::norm_inf(source).max(T::one());
        let mut this = Self {
            n,
            root,
            tail,
            head,
            cost,
            cap,
            flow,
            state,
            supply,
            parent: vec![usize::MAX; n + 1],
            pred: vec![usize::MAX; n + 1],
            depth: vec![0; n + 1],
            order: Vec::with_capacity(n + 1),
            potential: vec![T::zero(); n + 1],
            tree_adj: vec![Vec::new(); n + 1],
            network,
            rc_tol: tol * scale,
            flow_tol: tol * s_scale,
        };
        this.rebuild_tree();
        this
    }

    fn arc_count(&self) -> usize {
        self.tail.len()
    }

    #[inline]
    fn reduced_cost(&self, a: usize) -> T {
        self.cost[a] + self.potential[self.head[a]] - self.potential[self.tail[a]]
    }

    /// Recomputes parent pointers, depths, potentials and basic flows from
    /// the current set of tree arcs.
    fn rebuild_tree(&mut self) {
        for adj in &mut self.tree_adj {
            adj.clear();
        }
        for a in 0..self.arc_count() {
            if self.state[a] == ArcState::Tree {
                self.tree_adj[self.tail[a]].push(a);
                self.tree_adj[self.head[a]].push(a);
            }
        }
        self.order.clear();
        self.parent[self.root] = usize::MAX;
        self.pred[self.root] = usize::MAX;
        self.depth[self.root] = 0;
        self.potential[self.root] = T::zero();
        let mut queue = VecDeque::from([self.root]);
        let mut seen = vec![false; self.n + 1];
        seen[self.root] = true;
        while let Some(u) = queue.pop_front() {
            self.order.push(u);
            for idx in 0..self.tree_adj[u].len() {
                let a = self.tree_adj[u][idx];
                let v = if self.tail[a] == u { self.head[a] } else { self.tail[a] };
                if seen[v] {
                    continue;
                }
                seen[v] = true;
                self.parent[v] = u;
                self.pred[v] = a;
                self.depth[v] = self.depth[u] + 1;
                // tree arcs have zero reduced cost: y_tail = cost + y_head
                self.potential[v] = if self.tail[a] == v {
                    self.cost[a] + self.potential[u]
                } else {
                    self.potential[u] - self.cost[a]
                };
                queue.push_back(v);
            }
        }
        debug_assert_eq!(self.order.len(), self.n + 1, "basis is not a spanning tree");

        // basic flows from the leaves up
        let mut excess = self.supply.clone();
        for a in 0..self.arc_count() {
            if self.state[a] != ArcState::Tree {
                let f = self.flow[a];
                excess[self.tail[a]] -= f;
                excess[self.head[a]] += f;
            }
        }
        for &v in self.order.iter().skip(1).rev() {
            let a = self.pred[v];
            let p = self.parent[v];
            let f = if self.tail[a] == v { excess[v] } else { -excess[v] };
            self.flow[a] = f;
            excess[v] = T::zero();
            if self.tail[a] == v {
                excess[p] += f;
            } else {
                excess[p] -= f;
            }
        }
    }

    fn violation(&self, a: usize) -> T {
        match self.state[a] {
            ArcState::Tree => T::zero(),
            ArcState::Lower => -self.reduced_cost(a),
            ArcState::Upper => self.reduced_cost(a),
        }
    }

    fn select_entering(&self, bland: bool) -> Option<usize> {
        if bland {
            return (0..self.arc_count()).find(|&a| self.violation(a) > self.rc_tol);
        }
        let mut best = None;
        let mut best_v = self.rc_tol;
        for a in 0..self.arc_count() {
            let v = self.violation(a);
            if v > best_v {
                best_v = v;
                best = Some(a);
            }
        }
        best
    }

    /// Performs one pivot with entering arc `e`. Returns the step length.
    fn pivot(&mut self, e: usize) -> Result<T> {
        // flow is pushed from `first` to `second` along e
        let increase_e = self.state[e] == ArcState::Lower;
        let (first, second) =
            if increase_e { (self.tail[e], self.head[e]) } else { (self.head[e], self.tail[e]) };

        // (arc, increases) along the cycle
        let mut cycle: Vec<(usize, bool)> = vec![(e, increase_e)];
        let (mut a, mut b) = (second, first);
        let mut up_side = Vec::new();
        let mut down_side = Vec::new();
        while a != b {
            if self.depth[a] >= self.depth[b] {
                let arc = self.pred[a];
                // flow travels a → parent(a)
                up_side.push((arc, self.tail[arc] == a));
                a = self.parent[a];
            } else {
                let arc = self.pred[b];
                // flow travels parent(b) → b
                down_side.push((arc, self.head[arc] == b));
                b = self.parent[b];
            }
        }
        cycle.extend(up_side);
        cycle.extend(down_side.into_iter().rev());

        let residual = |s: &Self, (arc, inc): (usize, bool)| -> T {
            if inc {
                s.cap[arc] - s.flow[arc]
            } else {
                s.flow[arc]
            }
            .max(T::zero())
        };
        let delta = cycle
            .iter()
            .map(|&c| residual(self, c))
            .fold(T::infinity(), T::min);
        if !delta.is_finite() {
            return Err(Error::InvalidInstance("unbounded min-cost flow (negative cycle)".into()));
        }
        let leave = cycle
            .iter()
            .filter(|&&c| residual(self, c) <= delta + self.flow_tol * T::lit(1e-3))
            .map(|&(arc, inc)| (arc, inc))
            .min_by_key(|&(arc, _)| arc)
            .expect("cycle has a blocking arc");

        for &(arc, inc) in &cycle {
            if inc {
                self.flow[arc] += delta;
            } else {
                self.flow[arc] -= delta;
            }
        }
        let (l_arc, l_inc) = leave;
        let leave_state = if l_inc { ArcState::Upper } else { ArcState::Lower };
        if l_arc == e {
            self.state[e] = leave_state;
            self.flow[e] = if leave_state == ArcState::Upper { self.cap[e] } else { T::zero() };
        } else {
            self.state[e] = ArcState::Tree;
            self.state[l_arc] = leave_state;
            self.flow[l_arc] =
                if leave_state == ArcState::Upper { self.cap[l_arc] } else { T::zero() };
        }
        self.rebuild_tree();
        Ok(delta)
    }

    fn run(&mut self, max_pivots: usize) -> Result<(SolveStatus, usize)> {
        let mut degenerate_run = 0usize;
        let bland_after = self.n.max(16);
        for it in 0..max_pivots {
            let bland = degenerate_run >= bland_after;
            let Some(e) = self.select_entering(bland) else {
                return Ok((SolveStatus::Optimal, it));
            };
            let delta = self.pivot(e)?;
            if delta <= self.flow_tol {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
        }
        Ok((SolveStatus::IterationLimit, max_pivots))
    }

    fn artificial_flow(&self) -> T {
        let m = self.network.edge_count();
        self.flow[m..].iter().map(|f| f.abs()).sum()
    }
}

/// Solves the capacitated min-cost flow LP for one scenario.
///
/// The certified value is the dual objective at the returned potentials, so
/// it never exceeds the true optimum even if the primal is slightly off.
pub fn min_cost_flow<T: Scalar>(
    network: &Network<T>,
    source: &[T],
    price: &[T],
    tol: T,
) -> Result<FlowSolution<T>> {
    let n = network.node_count();
    let m = network.edge_count();
    if source.len() != n || price.len() != m {
        return Err(Error::DimensionMismatch(format!(
            "source has {} entries and price {}, expected {n} and {m}",
            source.len(),
            price.len()
        )));
    }
    if price.iter().any(|&p| p < T::zero()) {
        return Err(Error::InvalidParameter("min_cost_flow requires nonnegative prices".into()));
    }

    let mut sx = Simplex::new(network, source, price, tol);
    let cap = 20 * (n + m + 10) * (n + 10);
    let (status, iterations) = sx.run(cap)?;

    let shortfall = sx.artificial_flow();
    if shortfall > sx.flow_tol.max(T::epsilon() * T::of_usize(n + m)) {
        return Err(Error::InfeasibleScenario { scenario: 0, shortfall: shortfall.as_f64() });
    }

    let flow: Vec<T> = sx.flow[..m]
        .iter()
        .zip(network.capacity())
        .map(|(&f, &c)| f.max(T::zero()).min(c))
        .collect();
    let shift = sx.potential[0];
    let potentials: Vec<T> = sx.potential[..n].iter().map(|&y| y - shift).collect();
    let mut reduced_costs = vec![T::zero(); m];
    network.incidence_t_mul(&potentials, &mut reduced_costs);
    for (r, &p) in reduced_costs.iter_mut().zip(price) {
        *r += p;
    }
    let objective = crate::linalg::dot(price, &flow);
    let certified_value = lp_dual_value(network.capacity(), source, &potentials, &reduced_costs);
    let residual = network.conservation_residual(&flow, source);
    Ok(FlowSolution {
        flow,
        objective,
        certified_value,
        potentials,
        reduced_costs,
        status,
        residual,
        iterations,
    })
}
