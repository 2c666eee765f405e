//! Paired exact / low-rank kernel operations, one per network building block.
//!
//! | block            | exact `K`              | low-rank `Q`              |
//! |------------------|------------------------|---------------------------|
//! | bias             | `K + σ_b²·𝟙`           | `[Q, σ_b·𝟏]`              |
//! | weight           | `σ_w² K`               | `σ_w Q`                   |
//! | mixed weight     | `(α² + β²σ_w²) K`      | `√(α² + β²σ_w²) Q`        |
//! | graph conv       | `A K Aᵀ`               | `A Q`                     |
//! | activation       | `g(K)`                 | `chol(g(QQᵀ))`            |
//! | independent add  | `K₁ + K₂`              | `[Q₁, Q₂]`                |
//! | input            | `K⁽⁰⁾`                 | `Q⁽⁰⁾`                    |

use nalgebra::{DMatrix, DVector};

use super::{chol_factor, relu, DenseKernel, LandmarkSet, LowRankFactor, Operator};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub enum Block {
    Bias(f64),
    Weight(f64),
    MixedWeight { alpha: f64, beta: f64, sigma_w: f64 },
    GraphConv(Operator),
    /// ReLU.
    Activation,
    /// Sum of two branches evaluated from the same incoming state.
    ///
    /// The exact rule `K₁ + K₂` is only the covariance of the sum when the two
    /// branches are statistically independent (distinct weight draws).
    IndependentAdd(Vec<Block>, Vec<Block>),
    /// Replaces the state by the program input `K⁽⁰⁾` / `Q⁽⁰⁾`.
    Input,
}

fn check_scale(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::input(format!("{name} must be finite and nonnegative, got {v}")))
    }
}

impl Block {
    pub fn validate(&self, n: usize) -> Result<()> {
        match self {
            Block::Bias(s) => check_scale("sigma_b", *s),
            Block::Weight(s) => check_scale("sigma_w", *s),
            Block::MixedWeight { alpha, beta, sigma_w } => {
                check_scale("alpha", *alpha)?;
                check_scale("beta", *beta)?;
                check_scale("sigma_w", *sigma_w)
            }
            Block::GraphConv(a) if a.n_nodes() != n => Err(Error::input(format!(
                "graph operator has {} nodes but kernel has dimension {n}",
                a.n_nodes()
            ))),
            Block::IndependentAdd(l, r) => l.iter().chain(r).try_for_each(|b| b.validate(n)),
            _ => Ok(()),
        }
    }

    fn mixed_scale(alpha: f64, beta: f64, sigma_w: f64) -> f64 {
        alpha * alpha + beta * beta * sigma_w * sigma_w
    }
}

/// Exact kernel operation. `input` is the program input used by [`Block::Input`].
pub fn apply_block_exact(k: &DenseKernel, block: &Block, input: &DenseKernel) -> Result<DenseKernel> {
    if input.n() != k.n() {
        return Err(Error::input("input kernel dimension differs from state"));
    }
    block.validate(k.n())?;
    Ok(match block {
        Block::Bias(s) => DenseKernel::from_symmetric(k.matrix().add_scalar(s * s)),
        Block::Weight(s) => k.scaled(s * s),
        Block::MixedWeight { alpha, beta, sigma_w } => {
            k.scaled(Block::mixed_scale(*alpha, *beta, *sigma_w))
        }
        Block::GraphConv(a) => DenseKernel::from_symmetric(a.sandwich(k.matrix())),
        Block::Activation => relu::relu_expectation(k),
        Block::IndependentAdd(left, right) => {
            let l = apply_blocks_exact(k, left, input)?;
            let r = apply_blocks_exact(k, right, input)?;
            DenseKernel::from_symmetric(l.into_matrix() + r.into_matrix())
        }
        Block::Input => input.clone(),
    })
}

pub fn apply_blocks_exact(k: &DenseKernel, blocks: &[Block], input: &DenseKernel) -> Result<DenseKernel> {
    let mut state = k.clone();
    for b in blocks {
        state = apply_block_exact(&state, b, input)?;
    }
    Ok(state)
}

/// `chol(g(QQᵀ))` evaluated on the landmark columns only.
pub fn relu_lowrank(q: &LowRankFactor, landmarks: &LandmarkSet) -> Result<LowRankFactor> {
    let a = landmarks.indices();
    let qm = q.q();
    let diag = DVector::from_iterator(q.n(), qm.row_iter().map(|r| r.norm_squared()));
    let k_cols = qm * q.rows(a).transpose();
    let c_cols = relu::relu_expectation_cols(&k_cols, &diag, a);
    let c_aa = c_cols.select_rows(a);
    chol_factor(&c_cols, &c_aa)
}

/// Low-rank counterpart of [`apply_block_exact`].
///
/// A zero bias appends no column and a zero weight yields a rank-0 factor, so
/// rank only grows through nonzero bias and independent addition.
pub fn apply_block_lowrank(
    q: &LowRankFactor,
    block: &Block,
    landmarks: &LandmarkSet,
    input: &LowRankFactor,
) -> Result<LowRankFactor> {
    let n = q.n();
    if input.n() != n {
        return Err(Error::input("input factor row count differs from state"));
    }
    if let Some(&bad) = landmarks.indices().iter().find(|&&i| i >= n) {
        return Err(Error::input(format!("landmark {bad} out of range for {n} nodes")));
    }
    block.validate(n)?;
    let scale = |s: f64| {
        if s == 0.0 {
            LowRankFactor::new(DMatrix::zeros(n, 0))
        } else {
            LowRankFactor::new(q.q() * s)
        }
    };
    Ok(match block {
        Block::Bias(s) => {
            if *s == 0.0 {
                q.clone()
            } else {
                let m = q.q().clone().insert_column(q.rank(), *s);
                LowRankFactor::new(m)
            }
        }
        Block::Weight(s) => scale(*s),
        Block::MixedWeight { alpha, beta, sigma_w } => {
            scale(Block::mixed_scale(*alpha, *beta, *sigma_w).sqrt())
        }
        Block::GraphConv(a) => LowRankFactor::new(a.mul_dense(q.q())),
        Block::Activation => relu_lowrank(q, landmarks)?,
        Block::IndependentAdd(left, right) => {
            let l = apply_blocks_lowrank(q, left, landmarks, input)?;
            let r = apply_blocks_lowrank(q, right, landmarks, input)?;
            hstack(&l, &r)
        }
        Block::Input => input.clone(),
    })
}

pub fn apply_blocks_lowrank(
    q: &LowRankFactor,
    blocks: &[Block],
    landmarks: &LandmarkSet,
    input: &LowRankFactor,
) -> Result<LowRankFactor> {
    let mut state = q.clone();
    for b in blocks {
        state = apply_block_lowrank(&state, b, landmarks, input)?;
    }
    Ok(state)
}

fn hstack(l: &LowRankFactor, r: &LowRankFactor) -> LowRankFactor {
    let n = l.n();
    let mut m = DMatrix::zeros(n, l.rank() + r.rank());
    m.columns_mut(0, l.rank()).copy_from(l.q());
    m.columns_mut(l.rank(), r.rank()).copy_from(r.q());
    LowRankFactor::new(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::SparseAdjacency;
    use approx::assert_relative_eq;
    use std::sync::Arc;

    fn half() -> Operator {
        Arc::new(SparseAdjacency::from_dense(&DMatrix::from_element(2, 2, 0.5)).unwrap())
    }

    #[test]
    fn table_examples_exact() {
        let z = DenseKernel::zeros(3);
        let k = apply_block_exact(&z, &Block::Bias(0.1f64.sqrt()), &z).unwrap();
        assert_relative_eq!(k.matrix(), &DMatrix::from_element(3, 3, 0.1), epsilon = 1e-15);

        let i = DenseKernel::identity(2);
        let mixed = Block::MixedWeight { alpha: 0.9, beta: 0.1, sigma_w: 1.0 };
        let k = apply_block_exact(&i, &mixed, &i).unwrap();
        assert_relative_eq!(k.get(0, 0), 0.82, epsilon = 1e-15);

        let k = apply_block_exact(&i, &Block::GraphConv(half()), &i).unwrap();
        assert_relative_eq!(k.matrix(), &DMatrix::from_element(2, 2, 0.5), epsilon = 1e-15);
    }

    #[test]
    fn dimension_mismatch_is_input_error() {
        let k = DenseKernel::identity(3);
        let err = apply_block_exact(&k, &Block::GraphConv(half()), &k).unwrap_err();
        assert!(matches!(err, Error::Input(_)));
        assert!(apply_block_exact(&k, &Block::Weight(-1.0), &k).is_err());
    }

    #[test]
    fn bias_appends_a_column() {
        let q = LowRankFactor::new(DMatrix::from_row_slice(3, 1, &[1.0, 2.0, 3.0]));
        let lm = LandmarkSet::all(3).unwrap();
        let out = apply_block_lowrank(&q, &Block::Bias(0.5), &lm, &q).unwrap();
        assert_eq!(out.rank(), 2);
        let expected = q.gram().matrix().add_scalar(0.25);
        assert_relative_eq!(out.gram().matrix(), &expected, epsilon = 1e-14);

        let same = apply_block_lowrank(&q, &Block::Bias(0.0), &lm, &q).unwrap();
        assert_eq!(same, q);
    }

    #[test]
    fn identity_conv_leaves_factor() {
        let q = LowRankFactor::new(DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 2.0, 1.0, -1.0, 3.0]));
        let eye = Arc::new(SparseAdjacency::identity(3).unwrap());
        let lm = LandmarkSet::all(3).unwrap();
        let out = apply_block_lowrank(&q, &Block::GraphConv(eye), &lm, &q).unwrap();
        assert_eq!(out, q);
    }

    #[test]
    fn independent_add_concatenates() {
        let q = LowRankFactor::new(DMatrix::from_row_slice(2, 1, &[1.0, 2.0]));
        let lm = LandmarkSet::all(2).unwrap();
        let add = Block::IndependentAdd(vec![Block::Weight(2.0)], vec![Block::Input]);
        let out = apply_block_lowrank(&q, &add, &lm, &q).unwrap();
        assert_eq!(out.rank(), 2);
        let exact = apply_block_exact(&q.gram(), &add, &q.gram()).unwrap();
        assert_relative_eq!(out.gram().matrix(), exact.matrix(), epsilon = 1e-14);
    }
}
