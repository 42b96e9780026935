use crate::error::{Error, Result};
use crate::linalg::{norm_inf, Mat};
use crate::Scalar;

/// `K` source vectors over `n` nodes, stored as the columns of an `n×K`
/// matrix. Positive entries inject flow, negative entries withdraw it.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSet<T> {
    sources: Mat<T>,
}

impl<T: Scalar> ScenarioSet<T> {
    pub fn new(node_count: usize, columns: &[Vec<T>]) -> Result<Self> {
        if columns.is_empty() {
            return Err(Error::InvalidInstance("at least one scenario is required".into()));
        }
        if let Some((k, c)) = columns.iter().enumerate().find(|(_, c)| c.len() != node_count) {
            return Err(Error::DimensionMismatch(format!(
                "scenario {} has {} entries, expected {node_count}",
                k + 1,
                c.len()
            )));
        }
        Ok(Self { sources: Mat::from_columns(node_count, columns) })
    }

    pub fn from_matrix(sources: Mat<T>) -> Result<Self> {
        if sources.cols() == 0 {
            return Err(Error::InvalidInstance("at least one scenario is required".into()));
        }
        Ok(Self { sources })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.sources.cols()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.sources.rows()
    }

    #[inline]
    pub fn source(&self, k: usize) -> &[T] {
        self.sources.col(k)
    }

    pub fn iter(&self) -> impl Iterator<Item = &[T]> {
        self.sources.columns()
    }

    pub fn matrix(&self) -> &Mat<T> {
        &self.sources
    }

    pub fn scaled(&self, s: T) -> Self {
        Self { sources: self.sources.scaled(s) }
    }

    /// Scenarios (0-based) whose column sum exceeds `rel_tol·max(1, ‖s‖∞)`.
    pub fn unbalanced(&self, rel_tol: T) -> Vec<usize> {
        self.iter()
            .enumerate()
            .filter(|(_, s)| {
                let sum: T = s.iter().copied().sum();
                sum.abs() > rel_tol * norm_inf(s).max(T::one())
            })
            .map(|(k, _)| k)
            .collect()
    }
}
