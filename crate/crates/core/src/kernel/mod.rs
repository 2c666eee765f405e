//! Kernel-level building blocks.
//!
//! Every neural-network building block has two kernel counterparts: an exact
//! operation on a dense covariance matrix `K` and a low-rank operation on a
//! factor `Q` with `K ≈ QQᵀ`. The pairs live in [`blocks`]; the ReLU
//! expectation (arc-cosine map) in [`relu`]; the landmark factorization in
//! [`nystrom`]; the input kernels in [`base`].

pub mod base;
pub mod blocks;
pub mod nystrom;
pub mod relu;

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{symmetrize, SparseAdjacency};

pub use base::{base_inner, base_poly, base_rbf, BaseKernel};
pub use blocks::{apply_block_exact, apply_block_lowrank, apply_blocks_exact, apply_blocks_lowrank, relu_lowrank, Block};
pub use nystrom::chol_factor;
pub use relu::{correlation_map, relu_expectation, relu_expectation_cols};

/// Symmetric N×N covariance matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseKernel(DMatrix<f64>);

impl DenseKernel {
    /// Wrap a square matrix, averaging it with its transpose.
    pub fn new(mut m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::input(format!(
                "kernel must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        symmetrize(&mut m);
        Ok(Self(m))
    }

    pub(crate) fn from_symmetric(m: DMatrix<f64>) -> Self {
        debug_assert_eq!(m.nrows(), m.ncols());
        Self(m)
    }

    pub fn zeros(n: usize) -> Self {
        Self(DMatrix::zeros(n, n))
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn diagonal(&self) -> DVector<f64> {
        self.0.diagonal()
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.0.clone().symmetric_eigen().eigenvalues.min()
    }

    /// Sub-block `K[rows, cols]`.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(rows.len(), cols.len(), |i, j| self.0[(rows[i], cols[j])])
    }

    /// `‖self − other‖_F / ‖other‖_F`.
    pub fn relative_error(&self, reference: &DenseKernel) -> f64 {
        (&self.0 - &reference.0).norm() / reference.0.norm()
    }

    pub fn scaled(&self, s: f64) -> DenseKernel {
        DenseKernel(&self.0 * s)
    }
}

/// N×r factor `Q` representing `K̂ = QQᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct LowRankFactor(DMatrix<f64>);

impl LowRankFactor {
    pub fn new(q: DMatrix<f64>) -> Self {
        Self(q)
    }

    /// Exact factor of the inner-product kernel `XXᵀ/d₀`.
    pub fn from_features(features: &DMatrix<f64>) -> Result<Self> {
        if features.ncols() == 0 {
            return Err(Error::input("features need at least one column"));
        }
        Ok(Self(features / (features.ncols() as f64).sqrt()))
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }

    pub fn rank(&self) -> usize {
        self.0.ncols()
    }

    pub fn q(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn gram(&self) -> DenseKernel {
        let mut g = &self.0 * self.0.transpose();
        symmetrize(&mut g);
        DenseKernel(g)
    }

    /// Rows `Q[idx, :]`.
    pub fn rows(&self, idx: &[usize]) -> DMatrix<f64> {
        self.0.select_rows(idx)
    }
}

/// Sorted, distinct landmark node indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LandmarkSet(Vec<usize>);

impl LandmarkSet {
    pub fn new(mut indices: Vec<usize>, n_nodes: usize) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::input("landmark set must not be empty"));
        }
        indices.sort_unstable();
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::input("landmark indices must be distinct"));
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= n_nodes) {
            return Err(Error::input(format!(
                "landmark {bad} out of range for {n_nodes} nodes"
            )));
        }
        Ok(Self(indices))
    }

    pub fn all(n_nodes: usize) -> Result<Self> {
        Self::new((0..n_nodes).collect(), n_nodes)
    }

    /// Uniform sample without replacement of `count` nodes from `pool`.
    pub fn sample(pool: &[usize], count: usize, n_nodes: usize, seed: u64) -> Result<Self> {
        if count == 0 || count > pool.len() {
            return Err(Error::input(format!(
                "cannot draw {count} landmarks from a pool of {}",
                pool.len()
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let picked = index::sample(&mut rng, pool.len(), count)
            .into_iter()
            .map(|i| pool[i])
            .collect();
        Self::new(picked, n_nodes)
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Shared handle to a graph operator inside blocks and programs.
pub type Operator = Arc<SparseAdjacency>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn landmark_validation() {
        assert!(LandmarkSet::new(vec![], 3).is_err());
        assert!(LandmarkSet::new(vec![1, 1], 3).is_err());
        assert!(LandmarkSet::new(vec![3], 3).is_err());
        assert_eq!(LandmarkSet::new(vec![2, 0], 3).unwrap().indices(), &[0, 2]);
    }

    #[test]
    fn landmark_sampling_is_seeded() {
        let pool: Vec<usize> = (10..40).collect();
        let a = LandmarkSet::sample(&pool, 5, 50, 7).unwrap();
        let b = LandmarkSet::sample(&pool, 5, 50, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 5);
        assert!(a.indices().iter().all(|i| pool.contains(i)));
        assert!(LandmarkSet::sample(&pool, 31, 50, 7).is_err());
    }

    #[test]
    fn kernel_must_be_square() {
        assert!(DenseKernel::new(DMatrix::zeros(2, 3)).is_err());
    }
}
