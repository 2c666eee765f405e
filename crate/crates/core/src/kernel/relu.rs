//! ReLU expectation `g(K) = E_{z∼N(0,K)}[φ(z)φ(z)ᵀ]` via the arc-cosine closed form.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use super::DenseKernel;

/// Relative threshold below which a node's variance is treated as zero.
pub const ZERO_VARIANCE_REL: f64 = 1e-12;

/// Correlation mapping `f(cos θ) = (sin θ + (π − θ) cos θ) / π`.
///
/// The argument is clamped into `[−1, 1]` first.
pub fn correlation_map(rho: f64) -> f64 {
    let rho = rho.clamp(-1.0, 1.0);
    let theta = rho.acos();
    let sin = (1.0 - rho * rho).max(0.0).sqrt();
    (sin + (PI - theta) * rho) / PI
}

#[inline]
fn arc_cosine(kxx: f64, kyy: f64, kxy: f64) -> f64 {
    let scale = (kxx * kyy).sqrt();
    0.5 * scale * correlation_map(kxy / scale)
}

fn variance_floor(diag: &DVector<f64>) -> f64 {
    ZERO_VARIANCE_REL * diag.iter().copied().fold(0.0, f64::max)
}

/// Full `g(K)`.
///
/// Nodes whose variance is at most `1e-12 · max diag` are treated as the zero
/// function: their row and column of the result are 0. Otherwise the diagonal
/// is exactly `K_xx / 2`.
pub fn relu_expectation(k: &DenseKernel) -> DenseKernel {
    let n = k.n();
    let m = k.matrix();
    let diag = k.diagonal();
    let floor = variance_floor(&diag);
    let live: Vec<bool> = diag.iter().map(|&d| d > floor).collect();
    let mut c = DMatrix::zeros(n, n);
    for j in 0..n {
        if !live[j] {
            continue;
        }
        c[(j, j)] = diag[j] / 2.0;
        for i in (j + 1)..n {
            if live[i] {
                let v = arc_cosine(diag[i], diag[j], m[(i, j)]);
                c[(i, j)] = v;
                c[(j, i)] = v;
            }
        }
    }
    DenseKernel::from_symmetric(c)
}

/// Columns `g(K)[:, a]` from `K[:, a]` and the full diagonal of `K`.
///
/// Same zero-variance policy as [`relu_expectation`].
pub fn relu_expectation_cols(
    k_cols: &DMatrix<f64>,
    diag: &DVector<f64>,
    landmarks: &[usize],
) -> DMatrix<f64> {
    let n = k_cols.nrows();
    assert_eq!(diag.len(), n);
    assert_eq!(landmarks.len(), k_cols.ncols());
    let floor = variance_floor(diag);
    let mut c = DMatrix::zeros(n, landmarks.len());
    for (col, &a) in landmarks.iter().enumerate() {
        let daa = diag[a];
        if daa <= floor {
            continue;
        }
        for i in 0..n {
            let dii = diag[i];
            if dii <= floor {
                continue;
            }
            c[(i, col)] = if i == a {
                dii / 2.0
            } else {
                arc_cosine(dii, daa, k_cols[(i, col)])
            };
        }
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn correlation_map_endpoints() {
        assert_eq!(correlation_map(1.0), 1.0);
        assert_relative_eq!(correlation_map(-1.0), 0.0, epsilon = 1e-16);
        assert_relative_eq!(correlation_map(0.0), 1.0 / PI, epsilon = 1e-16);
        assert_relative_eq!(correlation_map(0.0), std::f64::consts::FRAC_1_PI, epsilon = 1e-15);
        // roundoff outside the domain is absorbed
        assert_eq!(correlation_map(1.0 + 1e-13), 1.0);
    }

    #[test]
    fn identity_and_constant_kernels() {
        let c = relu_expectation(&DenseKernel::identity(2));
        assert_eq!(c.get(0, 0), 0.5);
        assert_relative_eq!(c.get(0, 1), 1.0 / (2.0 * PI), epsilon = 1e-16);

        let k = DenseKernel::new(DMatrix::from_element(2, 2, 4.0)).unwrap();
        let c = relu_expectation(&k);
        assert_relative_eq!(c.matrix(), &DMatrix::from_element(2, 2, 2.0), epsilon = 1e-15);
    }

    #[test]
    fn zero_variance_rows_vanish() {
        let k = DenseKernel::new(DMatrix::from_row_slice(
            3,
            3,
            &[1.0, 0.0, 0.3, 0.0, 0.0, 0.0, 0.3, 0.0, 2.0],
        ))
        .unwrap();
        let c = relu_expectation(&k);
        assert!(c.matrix().row(1).iter().all(|&v| v == 0.0));
        assert_eq!(c.get(2, 2), 1.0);
    }

    #[test]
    fn columns_match_full() {
        let x = DMatrix::from_row_slice(4, 2, &[1.0, 0.2, -0.3, 0.9, 0.4, 0.4, -1.0, -0.1]);
        let k = DenseKernel::new(&x * x.transpose()).unwrap();
        let full = relu_expectation(&k);
        let a = [1, 3];
        let cols = relu_expectation_cols(&k.select(&[0, 1, 2, 3], &a), &k.diagonal(), &a);
        assert_relative_eq!(cols, full.select(&[0, 1, 2, 3], &a), epsilon = 1e-15);
    }
}
