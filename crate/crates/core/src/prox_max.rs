//! Reservation update: the proximal operator of a positively weighted
//! row-wise maximum.
//!
//! For one edge the subproblem is
//!
//! ```text
//! minimize    β·t + ½‖x − u‖²
//! subject to  x_i ≤ t
//! ```
//!
//! Its dual multipliers are `μ_i = (u_i − t)₊` with `Σ μ_i = β`, so `t` is
//! found by sorting `u` in descending order and scanning the prefix sums
//! `S_k` for the first `k` with `u_(k+1) ≤ (S_k − β)/k`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct ProxMaxResult<T> {
    pub x: Vec<T>,
    /// Implied reservation `max_i x_i`.
    pub t: T,
    /// Number of entries clipped to `t` (the `k` of the prefix scan).
    pub active: usize,
}

/// Unique minimizer of `β·t + ½‖x − u‖²` subject to `x ≤ t·1`.
pub fn prox_weighted_max<T: Scalar>(u: &[T], beta: T) -> ProxMaxResult<T> {
    assert!(!u.is_empty(), "prox_weighted_max needs at least one entry");
    debug_assert!(beta >= T::zero());
    if beta <= T::zero() {
        let t = u.iter().copied().fold(T::neg_infinity(), T::max);
        let active = u.iter().filter(|&&v| v == t).count();
        return ProxMaxResult { x: u.to_vec(), t, active };
    }
    let mut order: Vec<usize> = (0..u.len()).collect();
    // stable: ties keep index order
    order.sort_by(|&i, &j| u[j].partial_cmp(&u[i]).unwrap_or(std::cmp::Ordering::Equal));

    let mut prefix = T::zero();
    let mut t = T::zero();
    let mut active = 0;
    for (k, &i) in order.iter().enumerate() {
        prefix += u[i];
        let count = k + 1;
        t = (prefix - beta) / T::of_usize(count);
        active = count;
        match order.get(count) {
            Some(&next) if u[next] > t => continue,
            _ => break,
        }
    }
    let x = u.iter().map(|&v| v.min(t)).collect();
    ProxMaxResult { x, t, active }
}

/// Reservation update for all edges: row `j` of the result is
/// `prox_weighted_max(u_j, p_j/ρ).x` with
/// `u_j = α f_j + (1−α) f̃_j + π_j/ρ`.
pub fn reservation_update<T: Scalar>(
    flows: &Mat<T>,
    prev_tilde: &Mat<T>,
    prices: &Mat<T>,
    edge_price: &[T],
    rho: T,
    alpha: T,
) -> Result<Mat<T>> {
    reservation_and_price_update(flows, prev_tilde, prices, edge_price, rho, alpha).map(|(t, _)| t)
}

/// Reservation update together with the matching price update
/// `Π⁺ = Π + ρ(αF + (1−α)F̃ − F̃⁺)`.
///
/// The price update is evaluated as `ρ(u − x)`, which is algebraically the
/// same and equals `ρ(u − t)₊` entrywise, so the new prices are exactly
/// nonnegative.
pub fn reservation_and_price_update<T: Scalar>(
    flows: &Mat<T>,
    prev_tilde: &Mat<T>,
    prices: &Mat<T>,
    edge_price: &[T],
    rho: T,
    alpha: T,
) -> Result<(Mat<T>, Mat<T>)> {
    let (m, k) = (flows.rows(), flows.cols());
    for (name, mat) in [("previous reservation iterate", prev_tilde), ("prices", prices)] {
        if mat.rows() != m || mat.cols() != k {
            return Err(Error::DimensionMismatch(format!(
                "{name} is {}x{}, flows are {m}x{k}",
                mat.rows(),
                mat.cols()
            )));
        }
    }
    if edge_price.len() != m {
        return Err(Error::DimensionMismatch(format!("{} edge prices for {m} edges", edge_price.len())));
    }
    if !(rho > T::zero()) {
        return Err(Error::InvalidParameter(format!("rho must be positive, got {rho}")));
    }
    if !(alpha > T::zero() && alpha < T::lit(2.0)) {
        return Err(Error::InvalidParameter(format!("alpha must lie in (0, 2), got {alpha}")));
    }

    let one_minus = T::one() - alpha;
    let rows: Vec<(Vec<T>, Vec<T>)> = (0..m)
        .into_par_iter()
        .map(|j| {
            let u: Vec<T> = (0..k)
                .map(|c| alpha * flows.get(j, c) + one_minus * prev_tilde.get(j, c) + prices.get(j, c) / rho)
                .collect();
            let res = prox_weighted_max(&u, edge_price[j] / rho);
            let pi: Vec<T> = u.iter().zip(&res.x).map(|(&ui, &xi)| rho * (ui - xi)).collect();
            (res.x, pi)
        })
        .collect();

    let mut tilde = Mat::zeros(m, k);
    let mut new_prices = Mat::zeros(m, k);
    for (j, (x, pi)) in rows.into_iter().enumerate() {
        for c in 0..k {
            tilde.set(j, c, x[c]);
            new_prices.set(j, c, pi[c]);
        }
    }
    Ok((tilde, new_prices))
}
