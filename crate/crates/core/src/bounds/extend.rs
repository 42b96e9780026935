//! Extension of a scenario flow policy to the convex hull of the scenario
//! sources through least-norm barycentric weights.

use crate::error::{Error, Result};
use crate::linalg::{dot, norm_inf, Cholesky, Mat};
use crate::model::Instance;
use crate::Scalar;

/// Hull membership tolerance on `‖Sθ − s‖∞`, relative to `1 + ‖s‖∞`.
pub const HULL_TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq)]
pub struct ExtendedFlow<T> {
    pub flow: Vec<T>,
    pub weights: Vec<T>,
    /// `‖Sθ − s‖∞`, which is also the conservation residual of `flow`.
    pub residual: T,
}

/// Least-norm weights `θ ≥ 0`, `1ᵀθ = 1` with `Sθ ≈ s`.
///
/// Solved as Tikhonov-regularized nonnegative least squares (Lawson–Hanson
/// active set) followed by iterated-Tikhonov refinement on the final passive
/// set, which drives the regularized solution to the least-norm one.
/// Returns the weights and `‖Sθ − s‖∞`.
pub fn barycentric_weights<T: Scalar>(sources: &Mat<T>, query: &[T]) -> (Vec<T>, T) {
    let (n, k) = (sources.rows(), sources.cols());
    let rows = n + 1;
    // B = [S; w·1ᵀ], b = [s; w]
    let w = norm_inf(sources.as_slice()).max(T::one());
    let col = |c: usize| -> Vec<T> {
        let mut v = sources.col(c).to_vec();
        v.push(w);
        v
    };
    let bcols: Vec<Vec<T>> = (0..k).map(col).collect();
    let mut b = query.to_vec();
    b.push(w);
    let eta = T::epsilon().sqrt() * T::lit(1e-2) * w * w;

    let gram = |i: usize, j: usize| dot(&bcols[i], &bcols[j]);
    let residual_of = |theta: &[T]| -> Vec<T> {
        let mut r = b.clone();
        for (c, &t) in theta.iter().enumerate() {
            if t != T::zero() {
                for i in 0..rows {
                    r[i] -= bcols[c][i] * t;
                }
            }
        }
        r
    };
    // regularized least squares on the passive set, refined against the
    // unregularized residual
    let solve_passive = |passive: &[usize], start: &[T], passes: usize| -> Vec<T> {
        let p = passive.len();
        let mut g = vec![T::zero(); p * p];
        for a in 0..p {
            for c in 0..p {
                g[a * p + c] = gram(passive[a], passive[c]);
            }
            g[a * p + a] += eta;
        }
        let chol = Cholesky::factor(g, p, T::zero()).expect("regularized Gram matrix is positive definite");
        let mut z: Vec<T> = passive.iter().map(|&i| start[i]).collect();
        for _ in 0..passes {
            let mut full = vec![T::zero(); k];
            for (a, &i) in passive.iter().enumerate() {
                full[i] = z[a];
            }
            let r = residual_of(&full);
            let mut rhs: Vec<T> = passive.iter().map(|&i| dot(&bcols[i], &r)).collect();
            chol.solve_in_place(&mut rhs);
            for (za, d) in z.iter_mut().zip(&rhs) {
                *za += *d;
            }
        }
        z
    };

    let mut theta = vec![T::zero(); k];
    let mut passive: Vec<usize> = Vec::new();
    let grad_tol = T::epsilon() * T::lit(1e3) * w * w;
    for _ in 0..(3 * k + 10) {
        let r = residual_of(&theta);
        let grad: Vec<T> =
            (0..k).map(|c| dot(&bcols[c], &r) - eta * theta[c]).collect();
        let cand = (0..k)
            .filter(|c| !passive.contains(c))
            .max_by(|&a, &c| grad[a].partial_cmp(&grad[c]).unwrap_or(std::cmp::Ordering::Equal));
        match cand {
            Some(c) if grad[c] > grad_tol => passive.push(c),
            _ => break,
        }
        loop {
            let z = solve_passive(&passive, &vec![T::zero(); k], 1);
            if z.iter().all(|&v| v > T::zero()) {
                for (a, &i) in passive.iter().enumerate() {
                    theta[i] = z[a];
                }
                break;
            }
            let mut step = T::one();
            for (a, &i) in passive.iter().enumerate() {
                if z[a] <= T::zero() {
                    let denom = theta[i] - z[a];
                    if denom > T::zero() {
                        step = step.min(theta[i] / denom);
                    }
                }
            }
            for (a, &i) in passive.iter().enumerate() {
                let cur = theta[i];
                theta[i] = cur + step * (z[a] - cur);
            }
            let before = passive.len();
            passive.retain(|&i| theta[i] > T::epsilon());
            for i in 0..k {
                if !passive.contains(&i) {
                    theta[i] = T::zero();
                }
            }
            if passive.is_empty() || passive.len() == before {
                break;
            }
        }
    }

    if !passive.is_empty() {
        let z = solve_passive(&passive, &theta, 30);
        for (a, &i) in passive.iter().enumerate() {
            theta[i] = z[a].max(T::zero());
        }
    }
    let total: T = theta.iter().copied().sum();
    if total > T::zero() {
        theta.iter_mut().for_each(|t| *t /= total);
    }
    let mut sth = vec![T::zero(); n];
    for (c, &t) in theta.iter().enumerate() {
        for i in 0..n {
            sth[i] += sources.get(i, c) * t;
        }
    }
    let res = sth.iter().zip(query).fold(T::zero(), |m, (&a, &q)| m.max((a - q).abs()));
    (theta, res)
}

/// Flow for a source in the convex hull of the scenarios: `f = Σ θ_k f^(k)`
/// with least-norm barycentric weights `θ`. The result never exceeds the
/// reservation `max_k f^(k)`.
pub fn extend_policy<T: Scalar>(instance: &Instance<T>, flows: &Mat<T>, query: &[T]) -> Result<ExtendedFlow<T>> {
    if query.len() != instance.node_count() {
        return Err(Error::DimensionMismatch(format!(
            "query has {} entries, network has {} nodes",
            query.len(),
            instance.node_count()
        )));
    }
    if flows.rows() != instance.edge_count() || flows.cols() != instance.scenario_count() {
        return Err(Error::DimensionMismatch("flow matrix does not match instance".into()));
    }
    let (weights, residual) = barycentric_weights(instance.scenarios().matrix(), query);
    if !(residual <= T::tol(HULL_TOL) * (T::one() + norm_inf(query))) {
        return Err(Error::OutsideHull { residual: residual.as_f64() });
    }
    let mut flow = vec![T::zero(); flows.rows()];
    for (c, &t) in weights.iter().enumerate() {
        if t > T::zero() {
            for (fj, &v) in flow.iter_mut().zip(flows.col(c)) {
                *fj += t * v;
            }
        }
    }
    Ok(ExtendedFlow { flow, weights, residual })
}
