use crate::error::{Error, Result};
use crate::linalg::Cholesky;
use crate::model::Network;
use crate::Scalar;

/// Factorization of the grounded graph Laplacian `A Aᵀ`, the only matrix the
/// equality projection `{f : A f + s = 0}` needs. It depends on the topology
/// alone, so one cache serves every scenario and every outer iteration.
#[derive(Debug, Clone)]
pub struct KktCache<T> {
    fingerprint: u64,
    node_count: usize,
    // factor of A Aᵀ with the last node's row and column removed
    chol: Option<Cholesky<T>>,
}

impl<T: Scalar> KktCache<T> {
    pub fn build(network: &Network<T>) -> Result<Self> {
        let n = network.node_count();
        if !network.is_connected() {
            return Err(Error::Factorization(
                "incidence matrix has rank below n-1 (graph is not connected)".into(),
            ));
        }
        let chol = if n > 1 {
            let g = n - 1;
            let mut lap = vec![T::zero(); g * g];
            for e in network.edges() {
                let (t, h) = (e.tail, e.head);
                if t == h {
                    continue;
                }
                if t < g {
                    lap[t * g + t] += T::one();
                }
                if h < g {
                    lap[h * g + h] += T::one();
                }
                if t < g && h < g {
                    lap[t * g + h] -= T::one();
                    lap[h * g + t] -= T::one();
                }
            }
            let chol = Cholesky::factor(lap, g, T::epsilon() * T::of_usize(n))
                .ok_or_else(|| Error::Factorization("grounded Laplacian is singular".into()))?;
            Some(chol)
        } else {
            None
        };
        Ok(Self { fingerprint: network.fingerprint(), node_count: n, chol })
    }

    pub fn check(&self, network: &Network<T>) -> Result<()> {
        if self.fingerprint != network.fingerprint() || self.node_count != network.node_count() {
            return Err(Error::CacheMismatch);
        }
        Ok(())
    }

    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    /// Euclidean projection of `v` onto `{f : A f + s = 0}`. Writes the
    /// projection into `f` and the multiplier `λ` (with `f = v - Aᵀλ`) into
    /// `lambda`.
    pub fn project(&self, network: &Network<T>, v: &[T], s: &[T], f: &mut [T], lambda: &mut [T]) {
        network.incidence_mul(v, lambda);
        for (l, &si) in lambda.iter_mut().zip(s) {
            *l += si;
        }
        match &self.chol {
            Some(chol) => {
                let g = self.node_count - 1;
                chol.solve_in_place(&mut lambda[..g]);
                lambda[g] = T::zero();
            }
            None => lambda[0] = T::zero(),
        }
        network.incidence_t_mul(lambda, f);
        for (fj, &vj) in f.iter_mut().zip(v) {
            *fj = vj - *fj;
        }
    }
}
