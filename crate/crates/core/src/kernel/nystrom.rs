//! Landmark (Nyström) factorization `chol(C) = C[:, a] C[a, a]^(-1/2)`.

use nalgebra::DMatrix;

use super::LowRankFactor;
use crate::error::{Error, Result};
use crate::graph::symmetrize;

/// Eigenvalues of the landmark block below `PD_FLOOR_REL · λ_max` are raised to it.
pub const PD_FLOOR_REL: f64 = 1e-10;

/// Eigenvalues below `−INDEFINITE_REL · λ_max` mean the block was not PSD.
pub const INDEFINITE_REL: f64 = 1e-6;

/// Symmetric inverse square root with eigenvalue flooring.
///
/// Returns `None` for an identically zero block.
pub(crate) fn inv_sqrt_psd(block: &DMatrix<f64>) -> Result<Option<DMatrix<f64>>> {
    let mut b = block.clone();
    symmetrize(&mut b);
    if b.iter().any(|v| !v.is_finite()) {
        return Err(Error::Factorization {
            message: "landmark block has non-finite entries".into(),
            eigenvalue: f64::NAN,
        });
    }
    let eig = b.symmetric_eigen();
    let lmax = eig.eigenvalues.max();
    let lmin = eig.eigenvalues.min();
    if !lmax.is_finite() || !lmin.is_finite() {
        return Err(Error::Factorization {
            message: "eigensolver returned non-finite eigenvalues".into(),
            eigenvalue: if lmax.is_finite() { lmin } else { lmax },
        });
    }
    if lmax <= 0.0 {
        if lmin < 0.0 {
            return Err(Error::Factorization {
                message: "landmark block is negative definite".into(),
                eigenvalue: lmin,
            });
        }
        return Ok(None);
    }
    if lmin < -INDEFINITE_REL * lmax {
        return Err(Error::Factorization {
            message: "landmark block is indefinite".into(),
            eigenvalue: lmin,
        });
    }
    let floor = PD_FLOOR_REL * lmax;
    let scales = eig.eigenvalues.map(|l| 1.0 / l.max(floor).sqrt());
    let u = &eig.eigenvectors;
    let mut out = u * DMatrix::from_diagonal(&scales) * u.transpose();
    symmetrize(&mut out);
    Ok(Some(out))
}

/// `P = C[:, a] C[a, a]^(-1/2)`, so that `PPᵀ = C[:, a] C[a, a]⁻¹ C[a, :]`.
///
/// `c_cols` is N×Nₐ and `c_landmark` the Nₐ×Nₐ block at the landmark rows.
/// An identically zero landmark block yields a rank-0 factor (the Nyström
/// approximant of a kernel vanishing on the landmarks is 0).
pub fn chol_factor(c_cols: &DMatrix<f64>, c_landmark: &DMatrix<f64>) -> Result<LowRankFactor> {
    let na = c_landmark.nrows();
    if c_landmark.ncols() != na || c_cols.ncols() != na {
        return Err(Error::input(format!(
            "landmark block is {}x{} but column block has {} columns",
            c_landmark.nrows(),
            c_landmark.ncols(),
            c_cols.ncols()
        )));
    }
    match inv_sqrt_psd(c_landmark)? {
        Some(w) => Ok(LowRankFactor::new(c_cols * w)),
        None => Ok(LowRankFactor::new(DMatrix::zeros(c_cols.nrows(), 0))),
    }
}
