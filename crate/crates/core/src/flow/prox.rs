//! Quadratic flow prox:
//!
//! ```text
//! minimize    πᵀf + (ρ/2)‖f − f̃‖²
//! subject to  A f + s = 0,  0 ≤ f ≤ c
//! ```
//!
//! Completing the square, the solution is the Euclidean projection of
//! `a = f̃ − π/ρ` onto the intersection of the conservation subspace and the
//! capacity box. The main loop is an over-relaxed operator splitting that
//! alternates the subspace projection (one solve with the cached Laplacian
//! factor) with the box projection. Its dual estimate periodically seeds a
//! semismooth Newton refinement on the dual
//!
//! ```text
//! maximize  D(ŷ) = ŷᵀs + Σ_j min_{0≤f_j≤c_j} ½(f_j − a_j)² + (Aᵀŷ)_j f_j
//! ```
//!
//! whose maximizer gives the exact solution `f = clip(a − Aᵀŷ)`. The Newton
//! systems are weighted Laplacians of the free edges, solved matrix-free by
//! preconditioned conjugate gradients.

use super::{FlowSolution, KktCache, SolveStatus};
use crate::error::{Error, Result};
use crate::linalg::{dot, norm_inf};
use crate::model::Network;
use crate::Scalar;

pub const DEFAULT_PROX_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy)]
pub struct ProxOptions<'a, T> {
    /// Absolute tolerance on the conservation residual of the returned flow
    /// (the returned flow is box-feasible and stationary by construction).
    pub tol: T,
    /// Splitting iteration cap; `None` means `10·m + 2000`.
    pub max_iter: Option<usize>,
    /// Over-relaxation of the inner splitting, in `(0, 2)`.
    pub relaxation: T,
    /// Node potentials `y` from an earlier solve on nearby data.
    pub warm_start: Option<&'a [T]>,
}

impl<T: Scalar> Default for ProxOptions<'_, T> {
    fn default() -> Self {
        Self { tol: T::tol(DEFAULT_PROX_TOL), max_iter: None, relaxation: T::lit(1.6), warm_start: None }
    }
}

impl<'a, T: Scalar> ProxOptions<'a, T> {
    pub fn with_tol(tol: T) -> Self {
        Self { tol, ..Self::default() }
    }
}

struct DualProblem<'a, T> {
    net: &'a Network<T>,
    a: &'a [T],
    s: &'a [T],
    g: Vec<T>,
    f: Vec<T>,
    grad: Vec<T>,
}

impl<'a, T: Scalar> DualProblem<'a, T> {
    fn new(net: &'a Network<T>, a: &'a [T], s: &'a [T]) -> Self {
        let (n, m) = (net.node_count(), net.edge_count());
        Self { net, a, s, g: vec![T::zero(); m], f: vec![T::zero(); m], grad: vec![T::zero(); n] }
    }

    /// Evaluates `D(ŷ)`, leaving `f = clip(a − Aᵀŷ)` and `∇D = A f + s` in
    /// the buffers.
    fn eval(&mut self, yhat: &[T]) -> T {
        self.net.incidence_t_mul(yhat, &mut self.g);
        let half = T::lit(0.5);
        let mut val = dot(yhat, self.s);
        for (j, &c) in self.net.capacity().iter().enumerate() {
            let fj = (self.a[j] - self.g[j]).max(T::zero()).min(c);
            self.f[j] = fj;
            let d = fj - self.a[j];
            val += half * d * d + self.g[j] * fj;
        }
        self.net.incidence_mul(&self.f, &mut self.grad);
        for (r, &si) in self.grad.iter_mut().zip(self.s) {
            *r += si;
        }
        val
    }

    /// Runs up to `max_steps` globalized semismooth Newton steps from `yhat`.
    /// Returns the final gradient norm; `yhat` is updated in place and the
    /// buffers hold the primal point for the final `yhat`.
    fn newton(&mut self, yhat: &mut [T], tol: T, max_steps: usize) -> T {
        let n = self.net.node_count();
        let m = self.net.edge_count();
        let mut value = self.eval(yhat);
        let mut free = vec![false; m];
        let mut dir = vec![T::zero(); n];
        let mut trial = vec![T::zero(); n];
        for _ in 0..max_steps {
            let res = norm_inf(&self.grad);
            if res <= tol || !res.is_finite() {
                return res;
            }
            for j in 0..m {
                let v = self.a[j] - self.g[j];
                free[j] = v > T::zero() && v < self.net.capacity()[j];
            }
            newton_direction(self.net, &free, &self.grad, &mut dir);
            let slope = dot(&self.grad, &dir);
            if !(slope > T::zero()) {
                return res;
            }

            let armijo = T::lit(1e-4);
            let mut t = T::one();
            let mut accepted = None;
            for _ in 0..60 {
                for i in 0..n {
                    trial[i] = yhat[i] + t * dir[i];
                }
                let v = self.eval(&trial);
                if v >= value + armijo * t * slope {
                    accepted = Some((t, v));
                    break;
                }
                t *= T::lit(0.5);
            }
            let Some((mut t, mut v)) = accepted else {
                self.eval(yhat);
                return res;
            };
            // a full step that stays on a flat piece of D may stop far short
            // of the next breakpoint; keep doubling while it pays off
            if t == T::one() {
                for _ in 0..40 {
                    let t2 = t + t;
                    for i in 0..n {
                        trial[i] = yhat[i] + t2 * dir[i];
                    }
                    let v2 = self.eval(&trial);
                    if v2 > v {
                        t = t2;
                        v = v2;
                    } else {
                        break;
                    }
                }
            }
            for i in 0..n {
                yhat[i] += t * dir[i];
            }
            value = self.eval(yhat);
            let _ = v;
        }
        norm_inf(&self.grad)
    }
}

/// Newton direction for the dual: solves `A_F A_Fᵀ d = r − mean_C(r)` on
/// each connected component `C` of the free-edge graph and adds the
/// component mean of `r` as a constant shift, which moves the component's
/// potential towards its next breakpoint.
fn newton_direction<T: Scalar>(net: &Network<T>, free: &[bool], rhs: &[T], dir: &mut [T]) {
    let n = net.node_count();
    let edges = net.edges();
    let comp = crate::model::network::components_of(
        n,
        edges.iter().zip(free).filter(|(_, &f)| f).map(|(e, _)| *e),
    );
    let n_comp = comp.iter().copied().max().map_or(0, |c| c + 1);
    let mut sum = vec![T::zero(); n_comp];
    let mut count = vec![0usize; n_comp];
    for i in 0..n {
        sum[comp[i]] += rhs[i];
        count[comp[i]] += 1;
    }
    let mean: Vec<T> = sum.iter().zip(&count).map(|(&s, &c)| s / T::of_usize(c)).collect();
    let b: Vec<T> = (0..n).map(|i| rhs[i] - mean[comp[i]]).collect();

    let mut degree = vec![T::zero(); n];
    for (e, &f) in edges.iter().zip(free) {
        if f {
            degree[e.tail] += T::one();
            degree[e.head] += T::one();
        }
    }
    let matvec = |x: &[T], out: &mut [T]| {
        out.iter_mut().for_each(|v| *v = T::zero());
        for (e, &f) in edges.iter().zip(free) {
            if f {
                let d = x[e.tail] - x[e.head];
                out[e.tail] += d;
                out[e.head] -= d;
            }
        }
    };
    let precond = |r: &[T], z: &mut [T]| {
        for i in 0..n {
            z[i] = if degree[i] > T::zero() { r[i] / degree[i] } else { T::zero() };
        }
    };

    // preconditioned CG on the consistent singular system
    let x = dir;
    x.iter_mut().for_each(|v| *v = T::zero());
    let mut r = b.clone();
    let mut z = vec![T::zero(); n];
    precond(&r, &mut z);
    let mut p = z.clone();
    let mut ap = vec![T::zero(); n];
    let mut rz = dot(&r, &z);
    let target = T::epsilon() * T::lit(16.0) * norm_inf(&b).max(T::min_positive_value());
    for _ in 0..(2 * n + 50) {
        if norm_inf(&r) <= target || rz <= T::zero() {
            break;
        }
        matvec(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > T::zero()) {
            break;
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        precond(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    for i in 0..n {
        x[i] += mean[comp[i]];
    }
}

/// Projected KKT residual `‖f − Π_box(f − (π + ρ(f − f̃) + Aᵀy)/ρ)‖∞`.
pub fn prox_kkt_residual<T: Scalar>(
    network: &Network<T>,
    price: &[T],
    anchor: &[T],
    rho: T,
    flow: &[T],
    potentials: &[T],
) -> T {
    let mut aty = vec![T::zero(); network.edge_count()];
    network.incidence_t_mul(potentials, &mut aty);
    let mut worst = T::zero();
    for j in 0..flow.len() {
        let grad = price[j] + rho * (flow[j] - anchor[j]) + aty[j];
        let step = (flow[j] - grad / rho).max(T::zero()).min(network.capacity()[j]);
        worst = worst.max((flow[j] - step).abs());
    }
    worst
}

/// Solves the quadratic min-cost flow prox for one scenario.
///
/// Passing `None` for `cache` factors the Laplacian on the spot; results
/// are identical either way.
pub fn prox_flow<T: Scalar>(
    network: &Network<T>,
    source: &[T],
    price: &[T],
    anchor: &[T],
    rho: T,
    cache: Option<&KktCache<T>>,
    opts: &ProxOptions<'_, T>,
) -> Result<FlowSolution<T>> {
    let n = network.node_count();
    let m = network.edge_count();
    if source.len() != n || price.len() != m || anchor.len() != m {
        return Err(Error::DimensionMismatch(format!(
            "prox_flow expects {n} sources and {m} prices/anchors, got {}/{}/{}",
            source.len(),
            price.len(),
            anchor.len()
        )));
    }
    if !(rho > T::zero()) {
        return Err(Error::InvalidParameter(format!("rho must be positive, got {rho}")));
    }
    let owned;
    let cache = match cache {
        Some(c) => {
            c.check(network)?;
            c
        }
        None => {
            owned = KktCache::build(network)?;
            &owned
        }
    };

    let cap = network.capacity();
    let a: Vec<T> = anchor.iter().zip(price).map(|(&f, &p)| f - p / rho).collect();
    let tol = opts.tol;
    let max_iter = opts.max_iter.unwrap_or(10 * m + 2000);

    // the unconstrained minimizer may already be feasible
    if network.box_violation(&a) <= T::zero() && network.conservation_residual(&a, source) <= tol {
        return Ok(finish(network, source, price, anchor, rho, a, vec![T::zero(); n], SolveStatus::Optimal, 0));
    }

    let mut dual = DualProblem::new(network, &a, source);
    let mut yhat = vec![T::zero(); n];
    // best (residual, ŷ) seen so far
    let mut best: Option<(T, Vec<T>)> = None;
    let consider = |res: T, y: &[T], best: &mut Option<(T, Vec<T>)>| {
        if best.as_ref().is_none_or(|(r, _)| res < *r) {
            *best = Some((res, y.to_vec()));
        }
    };

    if let Some(y0) = opts.warm_start.filter(|y| y.len() == n) {
        yhat.iter_mut().zip(y0).for_each(|(h, &y)| *h = y / rho);
        let res = dual.newton(&mut yhat, tol, 12);
        consider(res, &yhat, &mut best);
        if res <= tol {
            let f = dual.f.clone();
            return Ok(finish(network, source, price, anchor, rho, f, scale(&yhat, rho), SolveStatus::Optimal, 0));
        }
    }

    // operator splitting: f ∈ subspace, z ∈ box, scaled dual w
    let alpha = opts.relaxation;
    let half = T::lit(0.5);
    let mut z: Vec<T> = a.iter().zip(cap).map(|(&v, &c)| v.max(T::zero()).min(c)).collect();
    let mut w = vec![T::zero(); m];
    let mut v = vec![T::zero(); m];
    let mut f = vec![T::zero(); m];
    let mut lambda = vec![T::zero(); n];
    let mut next_polish = 10usize;
    for it in 1..=max_iter {
        for j in 0..m {
            v[j] = half * (a[j] + z[j] - w[j]);
        }
        cache.project(network, &v, source, &mut f, &mut lambda);
        let mut dz = T::zero();
        let mut pr = T::zero();
        for j in 0..m {
            let fh = alpha * f[j] + (T::one() - alpha) * z[j];
            let zn = (fh + w[j]).max(T::zero()).min(cap[j]);
            w[j] += fh - zn;
            dz = dz.max((zn - z[j]).abs());
            pr = pr.max((f[j] - zn).abs());
            z[j] = zn;
        }
        if it >= next_polish || (pr <= tol && dz <= tol) {
            next_polish = it + (it / 2).max(10);
            // the subspace step's multiplier, rescaled: ŷ = 2λ
            for i in 0..n {
                yhat[i] = lambda[i] + lambda[i];
            }
            let res = dual.newton(&mut yhat, tol, 8);
            consider(res, &yhat, &mut best);
            if res <= tol {
                let f = dual.f.clone();
                return Ok(finish(network, source, price, anchor, rho, f, scale(&yhat, rho), SolveStatus::Optimal, it));
            }
        }
    }

    // out of iterations: tell infeasibility apart from slow convergence
    super::min_cost_flow(network, source, &vec![T::zero(); m], T::tol(1e-9))?;
    let (_, y) = best.unwrap_or((T::infinity(), vec![T::zero(); n]));
    dual.eval(&y);
    let f = dual.f.clone();
    Ok(finish(network, source, price, anchor, rho, f, scale(&y, rho), SolveStatus::IterationLimit, max_iter))
}

fn scale<T: Scalar>(v: &[T], s: T) -> Vec<T> {
    v.iter().map(|&x| x * s).collect()
}

#[allow(clippy::too_many_arguments)]
fn finish<T: Scalar>(
    network: &Network<T>,
    source: &[T],
    price: &[T],
    anchor: &[T],
    rho: T,
    flow: Vec<T>,
    potentials: Vec<T>,
    status: SolveStatus,
    iterations: usize,
) -> FlowSolution<T> {
    let m = network.edge_count();
    let half = T::lit(0.5);
    let mut aty = vec![T::zero(); m];
    network.incidence_t_mul(&potentials, &mut aty);
    let mut objective = T::zero();
    let mut certified_value = dot(&potentials, source);
    let mut reduced_costs = vec![T::zero(); m];
    for j in 0..m {
        let d = flow[j] - anchor[j];
        objective += price[j] * flow[j] + half * rho * d * d;
        reduced_costs[j] = price[j] + rho * d + aty[j];
        // dual function: minimize the Lagrangian over the box
        let fj = (anchor[j] - (price[j] + aty[j]) / rho).max(T::zero()).min(network.capacity()[j]);
        let dj = fj - anchor[j];
        certified_value += (price[j] + aty[j]) * fj + half * rho * dj * dj;
    }
    let residual = network.conservation_residual(&flow, source);
    FlowSolution { flow, objective, certified_value, potentials, reduced_costs, status, residual, iterations }
}
