//! Depth-limit diagnostics for deep GCN and MLP kernels.
//!
//! For a symmetric, irreducible, nonnegative `A` with Perron eigenpair `(λ, v)`
//! and ReLU activation, the GCN kernel `K⁽ˡ⁾` behaves as `l → ∞` according to
//! `σ_w²λ²/2`:
//! * with `σ_b = 0` the minimum pairwise correlation increases to 1;
//! * below 1 the trace stays bounded by `Nσ_b²/(1 − δ) + 1`, `δ = σ_w²λ²/2`;
//! * above 1 `K⁽ˡ⁾/c_l`, `c_l = (σ_w²λ²/2)ˡ`, approaches a multiple of `vvᵀ`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::graph::{spectral_radius, SparseAdjacency, DEFAULT_POWER_MAX_ITER, DEFAULT_POWER_TOL};
use crate::kernel::{Block, DenseKernel};
use crate::programs::{Architecture, KernelProgram};

/// Largest graph accepted by [`depth_scan`].
pub const MAX_SCAN_NODES: usize = 200;

/// `|σ_w² − 2|` at or below this is treated as the critical MLP case.
pub const CRITICAL_TOL: f64 = 1e-12;

/// Layer offset of the reported Cauchy gap `‖K⁽ˡ⁺¹⁰⁾ − K⁽ˡ⁾‖_F`.
pub const CAUCHY_LAG: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct LayerRecord {
    pub l: usize,
    /// Minimum correlation `K_xy / √(K_xx K_yy)` over pairs with nonzero variance.
    pub rho_min: f64,
    pub trace: f64,
    /// `σ₂/σ₁` of `K⁽ˡ⁾`.
    pub top2_singular_ratio: f64,
    /// `‖K − c·uuᵀ‖_F / ‖K‖_F` with the reference unit vector `u` and least-squares `c`.
    ///
    /// Scale-invariant, so it equals the gap of `K⁽ˡ⁾/c_l` for any `c_l`.
    pub scaled_gap: Option<f64>,
    /// Angle between the top eigenvector of `K⁽ˡ⁾` and the reference vector.
    pub perron_angle: Option<f64>,
    /// `‖K⁽ˡ⁺¹⁰⁾ − K⁽ˡ⁾‖_F`, when that layer was computed.
    pub cauchy_gap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DepthTrace {
    /// Perron eigenvalue of the operator (1 for the MLP).
    pub lambda: f64,
    pub records: Vec<LayerRecord>,
}

impl DepthTrace {
    pub fn rho_min(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.rho_min).collect()
    }

    pub fn traces(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.trace).collect()
    }

    pub fn last(&self) -> &LayerRecord {
        self.records.last().expect("a trace has at least one layer")
    }
}

/// `δ = σ_w²λ²/2` and, when `δ < 1`, the trace bound `Nσ_b²/(1 − δ) + 1`.
pub fn trace_bound(n: usize, sigma_b: f64, sigma_w: f64, lambda: f64) -> (f64, Option<f64>) {
    let delta = sigma_w * sigma_w * lambda * lambda / 2.0;
    let bound = (delta < 1.0).then(|| n as f64 * sigma_b * sigma_b / (1.0 - delta) + 1.0);
    (delta, bound)
}

pub fn min_correlation(k: &DenseKernel) -> f64 {
    let d = k.diagonal();
    let floor = 1e-300;
    let mut rho = 1.0f64;
    for j in 0..k.n() {
        for i in (j + 1)..k.n() {
            let s = d[i] * d[j];
            if s > floor {
                rho = rho.min((k.get(i, j) / s.sqrt()).clamp(-1.0, 1.0));
            }
        }
    }
    rho
}

/// Angle between two unit-norm directions, sign ignored; accurate near 0.
fn angle(u: &DVector<f64>, v: &DVector<f64>) -> f64 {
    let c = u.dot(v);
    let perp = (u - v * c).norm();
    perp.atan2(c.abs())
}

fn layer_record(l: usize, k: &DenseKernel, reference: Option<&DVector<f64>>) -> LayerRecord {
    let m = k.matrix();
    let eig = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].abs().total_cmp(&eig.eigenvalues[a].abs()));
    let s1 = eig.eigenvalues[order[0]].abs();
    let s2 = order.get(1).map_or(0.0, |&i| eig.eigenvalues[i].abs());
    let top = eig.eigenvectors.column(order[0]).into_owned();
    let norm = m.norm();
    let (scaled_gap, perron_angle) = match reference {
        Some(v) => {
            let c = v.dot(&(m * v));
            let gap = if norm > 0.0 {
                (m - v * v.transpose() * c).norm() / norm
            } else {
                f64::NAN
            };
            (Some(gap), Some(angle(&top, v)))
        }
        None => (None, None),
    };
    LayerRecord {
        l,
        rho_min: min_correlation(k),
        trace: k.trace(),
        top2_singular_ratio: if s1 > 0.0 { s2 / s1 } else { 0.0 },
        scaled_gap,
        perron_angle,
        cauchy_gap: None,
    }
}

fn records(kernels: &[DenseKernel], reference: Option<&DVector<f64>>) -> Vec<LayerRecord> {
    let mut out: Vec<LayerRecord> = kernels
        .iter()
        .enumerate()
        .map(|(i, k)| layer_record(i + 1, k, reference))
        .collect();
    for (i, rec) in out.iter_mut().enumerate() {
        if let Some(later) = kernels.get(i + CAUCHY_LAG) {
            rec.cauchy_gap = Some((later.matrix() - kernels[i].matrix()).norm());
        }
    }
    out
}

/// Check the assumptions behind the depth limits on `a`.
pub fn check_depth_preconditions(a: &SparseAdjacency) -> Result<()> {
    let n = a.n_nodes();
    if n > MAX_SCAN_NODES {
        return Err(Error::Precondition(format!(
            "depth scans run on the exact path and accept at most {MAX_SCAN_NODES} nodes, got {n}"
        )));
    }
    if a.values().iter().any(|&v| v < 0.0) {
        return Err(Error::Precondition("graph operator has negative entries".into()));
    }
    if !a.is_symmetric(1e-12) {
        return Err(Error::Precondition("graph operator is not symmetric".into()));
    }
    if !a.is_irreducible() {
        return Err(Error::Precondition(
            "graph operator is reducible (graph is disconnected); depth limits assume irreducibility".into(),
        ));
    }
    if !a.has_positive_diagonal() {
        return Err(Error::Precondition(
            "graph operator needs a positive diagonal (self-loops) for aperiodicity".into(),
        ));
    }
    Ok(())
}

/// Per-layer statistics of `program` run exactly from `k0`, for `l = 1…depth`.
///
/// The reference vector of `scaled_gap` and `perron_angle` is the Perron vector of `a`.
pub fn depth_scan(program: &KernelProgram, a: &SparseAdjacency, k0: &DenseKernel) -> Result<DepthTrace> {
    check_depth_preconditions(a)?;
    if k0.n() != a.n_nodes() {
        return Err(Error::input(format!(
            "input kernel has dimension {} but graph has {} nodes",
            k0.n(),
            a.n_nodes()
        )));
    }
    let info = spectral_radius(a, DEFAULT_POWER_TOL, DEFAULT_POWER_MAX_ITER)?;
    let kernels = program.run_exact(k0)?;
    Ok(DepthTrace {
        lambda: info.lambda,
        records: records(&kernels, Some(&info.v)),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum MlpRegime {
    /// `σ_w² < 2`: `K⁽ˡ⁾ → q·𝟙` with `q = σ_b²/(1 − σ_w²/2)`.
    Bounded { q: f64 },
    /// `σ_w² > 2`: `K⁽ˡ⁾/(σ_w²/2)ˡ → vvᵀ` with `v_x = √(σ_b²/(σ_w²/2 − 1) + K⁽⁰⁾(x,x))`.
    Exploding { v: DVector<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpLimit {
    pub regime: MlpRegime,
    pub trace: DepthTrace,
    /// Max-abs distance to the limit for `l = 1…L`, after scaling by `(σ_w²/2)ˡ` when exploding.
    pub deviation: Vec<f64>,
    /// Same restricted to the diagonal.
    pub diagonal_deviation: Vec<f64>,
}

impl MlpLimit {
    pub fn final_deviation(&self) -> f64 {
        *self.deviation.last().expect("at least one layer")
    }
}

/// The MLP recursion `K ← σ_b² + σ_w² g(K)`, activation applied from the first layer.
pub fn mlp_program(sigma_b: f64, sigma_w: f64, depth: usize) -> Result<KernelProgram> {
    let layer = vec![Block::Activation, Block::Weight(sigma_w), Block::Bias(sigma_b)];
    KernelProgram::from_layers(Architecture::Mlp, vec![layer; depth])
}

/// Iterate the MLP kernel `l_max` layers and measure the distance to its limit.
pub fn mlp_fixed_point(sigma_b: f64, sigma_w: f64, k0: &DenseKernel, l_max: usize) -> Result<MlpLimit> {
    let s2 = sigma_w * sigma_w;
    let b2 = sigma_b * sigma_b;
    if (s2 - 2.0).abs() <= CRITICAL_TOL {
        return Err(Error::Unsupported(
            "sigma_w^2 = 2 is the critical case with no limit statement".into(),
        ));
    }
    let kernels = mlp_program(sigma_b, sigma_w, l_max)?.run_exact(k0)?;
    let n = k0.n();
    let (regime, target, growth) = if s2 < 2.0 {
        let q = b2 / (1.0 - s2 / 2.0);
        (MlpRegime::Bounded { q }, DMatrix::from_element(n, n, q), 1.0)
    } else {
        let v = k0.diagonal().map(|d| (b2 / (s2 / 2.0 - 1.0) + d).sqrt());
        let target = &v * v.transpose();
        (MlpRegime::Exploding { v }, target, s2 / 2.0)
    };
    let mut deviation = Vec::with_capacity(l_max);
    let mut diagonal_deviation = Vec::with_capacity(l_max);
    for (i, k) in kernels.iter().enumerate() {
        let scaled = k.matrix() / growth.powi(i as i32 + 1);
        let diff = scaled - &target;
        deviation.push(diff.amax());
        diagonal_deviation.push(diff.diagonal().amax());
    }
    let reference = match &regime {
        MlpRegime::Exploding { v } if v.norm() > 0.0 => Some(v.normalize()),
        _ => None,
    };
    Ok(MlpLimit {
        regime,
        trace: DepthTrace {
            lambda: 1.0,
            records: records(&kernels, reference.as_ref()),
        },
        deviation,
        diagonal_deviation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_adjacency, normalize_sym};
    use approx::assert_relative_eq;
    use std::sync::Arc;

    fn cycle(n: usize) -> SparseAdjacency {
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        normalize_sym(&build_adjacency(&edges, n, false).unwrap()).unwrap()
    }

    #[test]
    fn bounded_mlp_reaches_constant() {
        let k0 = DenseKernel::identity(3);
        let r = mlp_fixed_point(0.1f64.sqrt(), 1.0, &k0, 60).unwrap();
        assert_eq!(r.regime, MlpRegime::Bounded { q: 0.1 / 0.5 });
        assert!(r.final_deviation() <= 1e-6, "{}", r.final_deviation());
    }

    #[test]
    fn exploding_mlp_diagonal_converges() {
        let k0 = DenseKernel::identity(3);
        let r = mlp_fixed_point(0.1f64.sqrt(), 2.0, &k0, 60).unwrap();
        match &r.regime {
            MlpRegime::Exploding { v } => assert_relative_eq!(v[0], 1.1f64.sqrt(), epsilon = 1e-15),
            other => panic!("{other:?}"),
        }
        assert!(*r.diagonal_deviation.last().unwrap() < 1e-12);
    }

    #[test]
    fn critical_mlp_is_unsupported() {
        let err = mlp_fixed_point(0.0, 2f64.sqrt(), &DenseKernel::identity(2), 5).unwrap_err();
        assert!(matches!(err, Error::Unsupported(_)));
    }

    #[test]
    fn critical_diagonal_is_preserved() {
        let k0 = DenseKernel::identity(3).scaled(3.0);
        let p = mlp_program(0.0, 2f64.sqrt(), 20).unwrap();
        for k in p.run_exact(&k0).unwrap() {
            for i in 0..3 {
                assert_relative_eq!(k.get(i, i), 3.0, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn scan_rejects_disconnected_graph() {
        let a = normalize_sym(&build_adjacency(&[(0, 1)], 3, false).unwrap()).unwrap();
        let p = KernelProgram::gcn(Arc::new(a.clone()), 0.0, 1.0, 2).unwrap();
        let err = depth_scan(&p, &a, &DenseKernel::identity(3)).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
    }

    #[test]
    fn scan_records_every_layer() {
        let a = cycle(5);
        let p = KernelProgram::gcn(Arc::new(a.clone()), 0.0, 1.0, 15).unwrap();
        let x = DMatrix::from_fn(5, 2, |i, j| (i as f64 + 1.0) * if j == 0 { 1.0 } else { -0.3 });
        let t = depth_scan(&p, &a, &crate::kernel::base_inner(&x).unwrap()).unwrap();
        assert_eq!(t.records.len(), 15);
        assert_relative_eq!(t.lambda, 1.0, epsilon = 1e-9);
        assert!(t.records[4].cauchy_gap.is_some());
        assert!(t.records[5].cauchy_gap.is_none());
        for r in &t.records {
            assert!((-1.0..=1.0).contains(&r.rho_min));
            assert!(r.top2_singular_ratio >= 0.0);
        }
    }

    #[test]
    fn trace_bound_formula() {
        let (delta, bound) = trace_bound(10, 0.5, 1.0, 1.0);
        assert_eq!(delta, 0.5);
        assert_relative_eq!(bound.unwrap(), 10.0 * 0.25 / 0.5 + 1.0);
        assert!(trace_bound(10, 0.5, 2.0, 1.0).1.is_none());
    }

    #[test]
    fn correlation_of_rank_one_is_one() {
        let v = DVector::from_vec(vec![1.0, 2.0, 0.5]);
        let k = DenseKernel::new(&v * v.transpose()).unwrap();
        assert_relative_eq!(min_correlation(&k), 1.0, epsilon = 1e-15);
    }
}
