//! Input kernels `C⁽⁰⁾` over node features.

use nalgebra::DMatrix;

use super::{chol_factor, DenseKernel, LandmarkSet, LowRankFactor};
use crate::error::{Error, Result};

/// Choice of input kernel.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum BaseKernel {
    /// `x·x′ / d₀`
    #[default]
    Inner,
    /// `exp(−γ‖x − x′‖²)`
    Rbf { gamma: f64 },
    /// `(xᵀx′ + c)^d`
    Poly { c: f64, degree: f64 },
}

impl BaseKernel {
    pub const GGP_C: f64 = 5.0;
    pub const GGP_DEGREE: f64 = 3.0;

    pub fn ggp_default() -> Self {
        BaseKernel::Poly {
            c: Self::GGP_C,
            degree: Self::GGP_DEGREE,
        }
    }

    fn validate(&self, features: &DMatrix<f64>) -> Result<()> {
        if features.ncols() == 0 || features.nrows() == 0 {
            return Err(Error::input("feature matrix must be non-empty"));
        }
        match *self {
            BaseKernel::Rbf { gamma } if gamma.is_nan() || gamma <= 0.0 => {
                Err(Error::input(format!("rbf gamma must be positive, got {gamma}")))
            }
            BaseKernel::Poly { c, .. } if c.is_nan() || c < 0.0 => {
                Err(Error::input(format!("polynomial offset must be nonnegative, got {c}")))
            }
            _ => Ok(()),
        }
    }

    fn entry(&self, x: &DMatrix<f64>, i: usize, j: usize) -> f64 {
        let d0 = x.ncols();
        match *self {
            BaseKernel::Inner => x.row(i).dot(&x.row(j)) / d0 as f64,
            BaseKernel::Rbf { gamma } => {
                if i == j {
                    return 1.0;
                }
                let dist2: f64 = x
                    .row(i)
                    .iter()
                    .zip(x.row(j).iter())
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                (-gamma * dist2).exp()
            }
            BaseKernel::Poly { c, degree } => {
                let base = x.row(i).dot(&x.row(j)) + c;
                if degree.fract() == 0.0 && degree.abs() <= i32::MAX as f64 {
                    base.powi(degree as i32)
                } else {
                    base.max(0.0).powf(degree)
                }
            }
        }
    }

    /// Full N×N kernel matrix.
    pub fn evaluate(&self, features: &DMatrix<f64>) -> Result<DenseKernel> {
        self.validate(features)?;
        if let BaseKernel::Inner = self {
            let mut g = features * features.transpose() / features.ncols() as f64;
            crate::graph::symmetrize(&mut g);
            return Ok(DenseKernel::from_symmetric(g));
        }
        let n = features.nrows();
        let mut k = DMatrix::zeros(n, n);
        for j in 0..n {
            for i in j..n {
                let v = self.entry(features, i, j);
                k[(i, j)] = v;
                k[(j, i)] = v;
            }
        }
        Ok(DenseKernel::from_symmetric(k))
    }

    /// Columns `K[:, cols]` without forming the full matrix.
    pub fn columns(&self, features: &DMatrix<f64>, cols: &[usize]) -> Result<DMatrix<f64>> {
        self.validate(features)?;
        Ok(DMatrix::from_fn(features.nrows(), cols.len(), |i, j| {
            self.entry(features, i, cols[j])
        }))
    }

    /// Low-rank factor of the input kernel.
    ///
    /// The inner-product kernel has the exact factor `X/√d₀`; the others use
    /// the landmark factorization `K[:, a] K[a, a]^(-1/2)`.
    pub fn factor(&self, features: &DMatrix<f64>, landmarks: &LandmarkSet) -> Result<LowRankFactor> {
        if let BaseKernel::Inner = self {
            self.validate(features)?;
            return LowRankFactor::from_features(features);
        }
        let cols = self.columns(features, landmarks.indices())?;
        let block = cols.select_rows(landmarks.indices());
        chol_factor(&cols, &block)
    }
}

/// Inner-product kernel `XXᵀ / d₀`.
pub fn base_inner(features: &DMatrix<f64>) -> Result<DenseKernel> {
    BaseKernel::Inner.evaluate(features)
}

/// Squared-exponential kernel `exp(−γ‖x − x′‖²)`.
pub fn base_rbf(features: &DMatrix<f64>, gamma: f64) -> Result<DenseKernel> {
    BaseKernel::Rbf { gamma }.evaluate(features)
}

/// Polynomial kernel `(xᵀx′ + c)^d`; the base is clamped at 0 for non-integer `d`.
pub fn base_poly(features: &DMatrix<f64>, c: f64, degree: f64) -> Result<DenseKernel> {
    BaseKernel::Poly { c, degree }.evaluate(features)
}
