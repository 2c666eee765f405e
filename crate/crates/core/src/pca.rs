//! Principal component projection of node features.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Pca {
    /// d₀×k principal directions, ordered by decreasing variance.
    pub components: DMatrix<f64>,
    /// Eigenvalues of `XᵀX` (after optional centering) for the kept directions.
    pub explained: Vec<f64>,
    /// Sum of all eigenvalues.
    pub total: f64,
    pub mean: Option<DVector<f64>>,
}

impl Pca {
    /// Fraction of the total sum of squares captured by the kept directions.
    pub fn explained_ratio(&self) -> f64 {
        if self.total > 0.0 {
            self.explained.iter().sum::<f64>() / self.total
        } else {
            1.0
        }
    }

    pub fn transform(&self, features: &DMatrix<f64>) -> DMatrix<f64> {
        match &self.mean {
            Some(m) => center_with(features, m) * &self.components,
            None => features * &self.components,
        }
    }
}

fn column_means(x: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_iterator(x.ncols(), x.column_iter().map(|c| c.mean()))
}

fn center_with(x: &DMatrix<f64>, mean: &DVector<f64>) -> DMatrix<f64> {
    let mut out = x.clone();
    for (mut col, m) in out.column_iter_mut().zip(mean.iter()) {
        col.add_scalar_mut(-m);
    }
    out
}

/// Fit `dim` principal directions.
///
/// Directions come from the eigendecomposition of the smaller of `XᵀX` and
/// `XXᵀ`. Each direction is signed so that its largest-magnitude entry is positive.
pub fn fit_pca(features: &DMatrix<f64>, dim: usize, center: bool) -> Result<Pca> {
    let (n, d0) = features.shape();
    if dim == 0 || dim > n.min(d0) {
        return Err(Error::input(format!(
            "PCA dimension must lie in 1..={}, got {dim}",
            n.min(d0)
        )));
    }
    let mean = center.then(|| column_means(features));
    let x = match &mean {
        Some(m) => center_with(features, m),
        None => features.clone(),
    };
    let small_side = n < d0;
    let gram = if small_side { &x * x.transpose() } else { x.transpose() * &x };
    let eig = gram.symmetric_eigen();
    let total = eig.eigenvalues.iter().map(|v| v.max(0.0)).sum();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let mut components = DMatrix::zeros(d0, dim);
    let mut explained = Vec::with_capacity(dim);
    for (k, &i) in order.iter().take(dim).enumerate() {
        let lambda = eig.eigenvalues[i].max(0.0);
        let mut v: DVector<f64> = if small_side {
            let u = eig.eigenvectors.column(i);
            let w = x.transpose() * u;
            let norm = w.norm();
            if norm > 0.0 {
                w / norm
            } else {
                DVector::zeros(d0)
            }
        } else {
            eig.eigenvectors.column(i).into_owned()
        };
        let pivot = v.iter().copied().fold(0.0f64, |acc, e| if e.abs() > acc.abs() { e } else { acc });
        if pivot < 0.0 {
            v.neg_mut();
        }
        components.set_column(k, &v);
        explained.push(lambda);
    }
    Ok(Pca {
        components,
        explained,
        total,
        mean,
    })
}

/// Project features onto their top `dim` principal directions.
pub fn pca_reduce(features: &DMatrix<f64>, dim: usize, center: bool) -> Result<DMatrix<f64>> {
    Ok(fit_pca(features, dim, center)?.transform(features))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn full_rank_orthonormal_input_is_lossless() {
        let q = DMatrix::from_fn(4, 4, |i, j| ((i * 4 + j) as f64 * 0.7).sin()).qr().q();
        let p = fit_pca(&q, 4, false).unwrap();
        let back = p.transform(&q) * p.components.transpose();
        assert_relative_eq!(back, q, epsilon = 1e-10);
    }

    #[test]
    fn rank_one_input_is_fully_explained() {
        let u = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let v = DVector::from_vec(vec![0.3, 0.1, 2.0, -1.0]);
        let x = &u * v.transpose();
        let p = fit_pca(&x, 1, false).unwrap();
        assert_relative_eq!(p.explained_ratio(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn sign_convention_and_wide_inputs() {
        let x = DMatrix::from_fn(3, 6, |i, j| ((i * 6 + j) as f64 * 1.3).cos());
        let p = fit_pca(&x, 2, true).unwrap();
        for c in p.components.column_iter() {
            let pivot = c.iter().copied().fold(0.0f64, |a, e| if e.abs() > a.abs() { e } else { a });
            assert!(pivot > 0.0);
            assert_relative_eq!(c.norm(), 1.0, epsilon = 1e-12);
        }
        assert!(fit_pca(&x, 4, true).is_err());
        assert!(fit_pca(&x, 0, true).is_err());
    }
}
