#![allow(dead_code)]

use std::sync::Arc;

use gnngp::graph::{normalize_sym, SparseAdjacency};
use gnngp::kernel::{base_inner, correlation_map, relu_expectation, DenseKernel, Operator};
use gnngp::programs::KernelProgram;
use gnngp::synth::{random_connected_graph, random_features};
use nalgebra::DMatrix;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};

pub fn fixture_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/tiny4")
}

/// Symmetric-normalized operator of a seeded random connected graph.
pub fn random_operator(n: usize, seed: u64) -> Operator {
    Arc::new(normalize_sym(&random_connected_graph(n, n, seed).unwrap()).unwrap())
}

pub fn random_raw_graph(n: usize, seed: u64) -> SparseAdjacency {
    random_connected_graph(n, n, seed).unwrap()
}

/// `X Xᵀ` for a seeded Gaussian `n × d` matrix.
pub fn random_psd(n: usize, d: usize, seed: u64) -> DenseKernel {
    base_inner(&random_features(n, d, seed)).unwrap()
}

fn psd_from(entries: &[f64], n: usize, d: usize) -> DenseKernel {
    base_inner(&DMatrix::from_column_slice(n, d, &entries[..n * d])).unwrap()
}

/// Generator of small PSD kernels `X Xᵀ` with `X` up to 8×5.
pub fn psd_strategy() -> impl Strategy<Value = DenseKernel> {
    (2usize..=8, 1usize..=5)
        .prop_flat_map(|(n, d)| (Just(n), Just(d), prop::collection::vec(-3.0f64..3.0, n * d)))
        .prop_map(|(n, d, v)| psd_from(&v, n, d))
}

pub fn check_contraction(r1: f64, r2: f64) -> Result<(), TestCaseError> {
    let d = (correlation_map(r1) - correlation_map(r2)).abs();
    prop_assert!(d <= (r1 - r2).abs() + 1e-12, "|f({r1}) - f({r2})| = {d}");
    Ok(())
}

pub fn check_above_identity(r: f64) -> Result<(), TestCaseError> {
    let f = correlation_map(r);
    prop_assert!(f >= r - 1e-12, "f({r}) = {f}");
    prop_assert!((-1e-12..=1.0 + 1e-12).contains(&f));
    Ok(())
}

pub fn check_diagonal_halving(k: &DenseKernel) -> Result<(), TestCaseError> {
    let g = relu_expectation(k);
    let floor = 1e-12 * k.diagonal().max();
    for i in 0..k.n() {
        let want = if k.get(i, i) > floor { k.get(i, i) / 2.0 } else { 0.0 };
        prop_assert!((g.get(i, i) - want).abs() <= 1e-12 * (1.0 + want));
    }
    Ok(())
}

/// `g(K) ≥ max(K/2, 0)` entrywise.
pub fn check_dominance(k: &DenseKernel) -> Result<(), TestCaseError> {
    let g = relu_expectation(k);
    let scale = k.diagonal().max().max(1.0);
    for i in 0..k.n() {
        for j in 0..k.n() {
            let lower = (k.get(i, j) / 2.0).max(0.0);
            prop_assert!(
                g.get(i, j) >= lower - 1e-10 * scale,
                "g[{i},{j}] = {} < {lower}",
                g.get(i, j)
            );
        }
    }
    Ok(())
}

/// One GCN layer: `tr K⁽ˡ⁺¹⁾ ≤ (σ_w²λ²/2) tr K⁽ˡ⁾ + Nσ_b²` with `λ = 1`.
pub fn check_trace_contraction(n: usize, graph_seed: u64, k: &DenseKernel, sigma_b: f64, sigma_w: f64)
    -> Result<(), TestCaseError> {
    let op = random_operator(n, graph_seed);
    let k2 = KernelProgram::gcn(op, sigma_b, sigma_w, 2).unwrap().run_exact(k).unwrap();
    let (k1, k2) = (&k2[0], &k2[1]);
    let bound = sigma_w * sigma_w / 2.0 * k1.trace() + n as f64 * sigma_b * sigma_b;
    prop_assert!(k2.trace() <= bound * (1.0 + 1e-10) + 1e-12, "{} > {bound}", k2.trace());
    Ok(())
}

fn kernel_for(n: usize, seed: u64) -> DenseKernel {
    random_psd(n, 1 + (seed % 4) as usize, seed)
}

/// The full property suite with `cases` random cases per property.
pub fn property_suite(cases: u32) -> Result<(), String> {
    let mut runner = TestRunner::new(Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    });
    let rho = -1.0f64..=1.0;
    runner
        .run(&(rho.clone(), rho.clone()), |(a, b)| check_contraction(a, b))
        .map_err(|e| format!("contraction: {e}"))?;
    runner
        .run(&rho, check_above_identity)
        .map_err(|e| format!("f(rho) >= rho: {e}"))?;
    runner
        .run(&psd_strategy(), |k| check_diagonal_halving(&k))
        .map_err(|e| format!("diagonal halving: {e}"))?;
    runner
        .run(&psd_strategy(), |k| check_dominance(&k))
        .map_err(|e| format!("elementwise dominance: {e}"))?;
    runner
        .run(
            &(3usize..=12, any::<u64>(), 0.0f64..1.0, 0.1f64..2.5),
            |(n, seed, sb, sw)| check_trace_contraction(n, seed, &kernel_for(n, seed), sb, sw),
        )
        .map_err(|e| format!("trace contraction: {e}"))?;
    Ok(())
}

/// Smallest absolute eigenvalue of a symmetric operator. A (near) singular
/// operator caps the rank of every propagated kernel `A C Aᵀ`.
pub fn min_abs_eigenvalue(op: &SparseAdjacency) -> f64 {
    op.to_dense().symmetric_eigen().eigenvalues.amin()
}

/// The first `count` seeds whose random operator is nonsingular.
pub fn nonsingular_operators(n: usize, count: usize) -> Vec<(u64, Operator)> {
    (0u64..)
        .map(|seed| (seed, random_operator(n, seed)))
        .filter(|(_, op)| min_abs_eigenvalue(op) > 1e-6)
        .take(count)
        .collect()
}
