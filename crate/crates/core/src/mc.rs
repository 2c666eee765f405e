//! Monte-Carlo covariance of finite-width random networks.
//!
//! Each draw samples every weight `W ~ N(0, σ_w²/d_in)` and bias `b ~ N(0, σ_b²)`,
//! runs the forward pass, and records `z⁽ᴸ⁾z⁽ᴸ⁾ᵀ` pooled over the `d` output
//! channels. As the width grows the pooled average approaches the analytic
//! kernel of the matching [`KernelProgram`](crate::programs::KernelProgram).
//!
//! Networks follow the kernel programs layer for layer, including the absence
//! of an activation before the first layer. The GCNII skip term is a fresh
//! projection `X W_in⁽ˡ⁾` at every layer (covariance `K⁽⁰⁾`, independent of the
//! main branch) and the first hidden state is another such projection.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::SparseAdjacency;
use crate::kernel::DenseKernel;
use crate::programs::{gcnii_betas, Architecture, Hyperparams};

/// How `H W` is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Sampling {
    /// Gram sampling whenever `d_in` exceeds the node count.
    #[default]
    Auto,
    /// Always materialize `W`.
    Explicit,
    /// Always draw `H W` from its conditional law `N(0, σ²/d_in · HHᵀ)` per column.
    Gram,
}

#[derive(Debug, Clone, PartialEq)]
pub struct McConfig {
    pub arch: Architecture,
    pub width: usize,
    pub n_samples: usize,
    pub seed: u64,
    pub depth: usize,
    pub hyper: Hyperparams,
    pub sampling: Sampling,
    /// Output channels whose individual estimates are kept.
    pub track_channels: usize,
}

impl McConfig {
    pub fn new(arch: Architecture, depth: usize, width: usize, n_samples: usize, seed: u64) -> Self {
        Self {
            arch,
            width,
            n_samples,
            seed,
            depth,
            hyper: Hyperparams::default(),
            sampling: Sampling::Auto,
            track_channels: 4,
        }
    }

    pub fn with_hyper(mut self, hyper: Hyperparams) -> Self {
        self.hyper = hyper;
        self
    }

    fn validate(&self) -> Result<()> {
        if !self.arch.has_network() {
            return Err(Error::input(format!(
                "architecture {} has no finite-width network",
                self.arch
            )));
        }
        if self.width == 0 {
            return Err(Error::input("width must be at least 1"));
        }
        if self.n_samples < 2 {
            return Err(Error::input("at least two weight samples are needed"));
        }
        if self.depth == 0 {
            return Err(Error::input("depth must be at least 1"));
        }
        Ok(())
    }
}

/// Estimate from a single output channel across all draws.
#[derive(Debug, Clone, PartialEq)]
pub struct CoordinateEstimate {
    pub channel: usize,
    pub mean: DMatrix<f64>,
    pub stderr: DMatrix<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct McEstimate {
    /// Pooled empirical covariance.
    pub kernel: DenseKernel,
    pub coordinates: Vec<CoordinateEstimate>,
}

struct Draw {
    rng: ChaCha8Rng,
    sampling: Sampling,
}

impl Draw {
    fn normal(&mut self, rows: usize, cols: usize) -> DMatrix<f64> {
        DMatrix::from_fn(rows, cols, |_, _| self.rng.sample::<f64, _>(StandardNormal))
    }

    /// `H W` with `W_ij ~ N(0, σ²/d_in)`.
    fn project(&mut self, h: &DMatrix<f64>, sigma: f64, d_out: usize) -> DMatrix<f64> {
        let (n, d_in) = h.shape();
        if sigma == 0.0 {
            return DMatrix::zeros(n, d_out);
        }
        let scale = sigma / (d_in as f64).sqrt();
        let gram = match self.sampling {
            Sampling::Auto => d_in > n,
            Sampling::Explicit => false,
            Sampling::Gram => true,
        };
        if gram {
            let eig = (h * h.transpose()).symmetric_eigen();
            let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt() * scale);
            let l = &eig.eigenvectors * DMatrix::from_diagonal(&roots);
            l * self.normal(n, d_out)
        } else {
            h * (self.normal(d_in, d_out) * scale)
        }
    }

    fn add_bias(&mut self, z: &mut DMatrix<f64>, sigma: f64) {
        if sigma == 0.0 {
            return;
        }
        for mut col in z.column_iter_mut() {
            let b = sigma * self.rng.sample::<f64, _>(StandardNormal);
            col.add_scalar_mut(b);
        }
    }
}

fn relu(m: &DMatrix<f64>) -> DMatrix<f64> {
    m.map(|v| v.max(0.0))
}

fn layer_rng(seed: u64, sample: usize, layer: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((sample as u64) << 16) | layer as u64);
    rng
}

/// One forward pass; returns the N×d output of the last layer.
fn forward(cfg: &McConfig, a: &SparseAdjacency, x0: &DMatrix<f64>, sample: usize) -> DMatrix<f64> {
    let hp = &cfg.hyper;
    let d = cfg.width;
    let betas = gcnii_betas(hp.lambda, cfg.depth);
    let mut z: Option<DMatrix<f64>> = None;
    for (l, &beta) in betas.iter().enumerate() {
        let mut draw = Draw {
            rng: layer_rng(cfg.seed, sample, l),
            sampling: cfg.sampling,
        };
        let h = match (&z, cfg.arch) {
            (Some(prev), _) => relu(prev),
            (None, Architecture::Gcnii) => draw.project(x0, 1.0, d),
            (None, _) => x0.clone(),
        };
        let out = match cfg.arch {
            Architecture::Gcn => {
                let mut out = a.mul_dense(&draw.project(&h, hp.sigma_w, d));
                draw.add_bias(&mut out, hp.sigma_b);
                out
            }
            Architecture::Gin => {
                let mut b = a.mul_dense(&draw.project(&h, hp.sigma_w, d));
                draw.add_bias(&mut b, hp.sigma_b);
                let mut out = draw.project(&relu(&b), hp.sigma_w, d);
                draw.add_bias(&mut out, hp.sigma_b);
                out
            }
            Architecture::Sage => {
                let own = draw.project(&h, hp.sigma_w1, d);
                let neigh = a.mul_dense(&draw.project(&h, hp.sigma_w2, d));
                own + neigh
            }
            Architecture::Mlp => {
                let mut out = draw.project(&h, hp.sigma_w, d);
                draw.add_bias(&mut out, hp.sigma_b);
                out
            }
            Architecture::Gcnii => {
                let skip = draw.project(x0, 1.0, d);
                let p = a.mul_dense(&h) * (1.0 - hp.alpha) + skip * hp.alpha;
                let mixed = draw.project(&p, hp.sigma_w, d);
                p * (1.0 - beta) + mixed * beta
            }
            Architecture::Ggp | Architecture::Rbf => unreachable!("rejected by validate"),
        };
        z = Some(out);
    }
    z.expect("depth >= 1")
}

struct SampleStats {
    pooled: DMatrix<f64>,
    tracked: Vec<DMatrix<f64>>,
}

/// Empirical output covariance over `cfg.n_samples` independent networks.
///
/// `a` must be normalized as the architecture expects and is unused by the MLP.
/// Results are bit-reproducible for a fixed configuration: every draw owns
/// its random streams and the per-draw results are summed in draw order.
pub fn sample_covariance(cfg: &McConfig, a: &SparseAdjacency, x0: &DMatrix<f64>) -> Result<McEstimate> {
    cfg.validate()?;
    let n = x0.nrows();
    if n == 0 || x0.ncols() == 0 {
        return Err(Error::input("feature matrix must be non-empty"));
    }
    if a.n_nodes() != n {
        return Err(Error::input(format!(
            "graph has {} nodes but features have {n} rows",
            a.n_nodes()
        )));
    }
    let track = cfg.track_channels.min(cfg.width);
    let stats: Vec<SampleStats> = (0..cfg.n_samples)
        .into_par_iter()
        .map(|s| {
            let z = forward(cfg, a, x0, s);
            let pooled = &z * z.transpose() / cfg.width as f64;
            let tracked = (0..track)
                .map(|c| {
                    let col = z.column(c);
                    col * col.transpose()
                })
                .collect();
            SampleStats { pooled, tracked }
        })
        .collect();

    let s = cfg.n_samples as f64;
    let mut pooled = DMatrix::zeros(n, n);
    for st in &stats {
        pooled += &st.pooled;
    }
    pooled /= s;

    let coordinates = (0..track)
        .map(|c| {
            let mut mean = DMatrix::zeros(n, n);
            for st in &stats {
                mean += &st.tracked[c];
            }
            mean /= s;
            let mut var = DMatrix::zeros(n, n);
            for st in &stats {
                let dev = &st.tracked[c] - &mean;
                var += dev.component_mul(&dev);
            }
            let stderr = (var / (s - 1.0)).map(|v| (v / s).sqrt());
            CoordinateEstimate {
                channel: c,
                mean,
                stderr,
            }
        })
        .collect();

    Ok(McEstimate {
        kernel: DenseKernel::new(pooled)?,
        coordinates,
    })
}

/// `‖K̃ − K‖_F / ‖K‖_F`.
pub fn compare_covariance(empirical: &DenseKernel, analytic: &DenseKernel) -> Result<f64> {
    if empirical.n() != analytic.n() {
        return Err(Error::input(format!(
            "dimension mismatch: {} vs {}",
            empirical.n(),
            analytic.n()
        )));
    }
    let norm = analytic.matrix().norm();
    if norm == 0.0 {
        return Err(Error::input("analytic kernel has zero norm"));
    }
    Ok((empirical.matrix() - analytic.matrix()).norm() / norm)
}

/// Mean relative error against `analytic` for each width, averaged over `seeds`.
pub fn width_sweep(
    base: &McConfig,
    widths: &[usize],
    seeds: &[u64],
    a: &SparseAdjacency,
    x0: &DMatrix<f64>,
    analytic: &DenseKernel,
) -> Result<Vec<(usize, f64)>> {
    if seeds.is_empty() {
        return Err(Error::input("width sweep needs at least one seed"));
    }
    widths
        .iter()
        .map(|&width| {
            let mut total = 0.0;
            for &seed in seeds {
                let cfg = McConfig {
                    width,
                    seed,
                    track_channels: 0,
                    ..base.clone()
                };
                total += compare_covariance(&sample_covariance(&cfg, a, x0)?.kernel, analytic)?;
            }
            Ok((width, total / seeds.len() as f64))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::base_inner;
    use approx::assert_relative_eq;

    #[test]
    fn reproducible_for_fixed_seed() {
        let a = SparseAdjacency::identity(3).unwrap();
        let x = DMatrix::from_fn(3, 2, |i, j| (i + j) as f64);
        let cfg = McConfig::new(Architecture::Gcn, 2, 8, 2, 11);
        let e1 = sample_covariance(&cfg, &a, &x).unwrap();
        let e2 = sample_covariance(&cfg, &a, &x).unwrap();
        assert_eq!(e1, e2);
        let other = sample_covariance(&McConfig { seed: 12, ..cfg }, &a, &x).unwrap();
        assert_ne!(e1.kernel, other.kernel);
    }

    #[test]
    fn first_layer_identity_case() {
        let a = SparseAdjacency::identity(4).unwrap();
        let x = DMatrix::identity(4, 4);
        let cfg = McConfig::new(Architecture::Gcn, 1, 4096, 200, 3);
        let emp = sample_covariance(&cfg, &a, &x).unwrap();
        let analytic = base_inner(&x).unwrap();
        assert!(compare_covariance(&emp.kernel, &analytic).unwrap() < 0.05);
    }

    #[test]
    fn sampling_modes_agree_in_law() {
        let a = SparseAdjacency::from_dense(&DMatrix::from_element(2, 2, 0.5)).unwrap();
        let x = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 0.5, -0.2, 1.0, 0.3]);
        let mut cfg = McConfig::new(Architecture::Gcn, 2, 256, 200, 5);
        cfg.sampling = Sampling::Explicit;
        let e = sample_covariance(&cfg, &a, &x).unwrap().kernel;
        cfg.sampling = Sampling::Gram;
        let g = sample_covariance(&cfg, &a, &x).unwrap().kernel;
        assert!(compare_covariance(&e, &g).unwrap() < 0.05);
    }

    #[test]
    fn rejects_bad_configs() {
        let a = SparseAdjacency::identity(2).unwrap();
        let x = DMatrix::identity(2, 2);
        for cfg in [
            McConfig::new(Architecture::Ggp, 1, 4, 4, 0),
            McConfig::new(Architecture::Gcn, 1, 4, 1, 0),
            McConfig::new(Architecture::Gcn, 1, 0, 4, 0),
        ] {
            assert!(matches!(sample_covariance(&cfg, &a, &x), Err(Error::Input(_))));
        }
    }

    #[test]
    fn comparison_cases() {
        let k = DenseKernel::new(DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 3.0])).unwrap();
        assert_eq!(compare_covariance(&k, &k).unwrap(), 0.0);
        assert_relative_eq!(compare_covariance(&k.scaled(2.0), &k).unwrap(), 1.0);
        assert!(compare_covariance(&k, &DenseKernel::zeros(2)).is_err());
    }
}
