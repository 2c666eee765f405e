//! Kernel programs: GNN architectures written as sequences of kernel blocks.
//!
//! A [`KernelProgram`] is a list of layers, each a list of [`Block`]s. The same
//! program runs on the exact path (dense `K`) or the low-rank path (factor `Q`).
//!
//! The first layer acts on the input kernel `K⁽⁰⁾` directly: there is no
//! activation in front of the first graph convolution, since the input kernel
//! already is the covariance of the layer input.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::graph::SparseAdjacency;
use crate::kernel::blocks::{apply_blocks_exact, apply_blocks_lowrank};
use crate::kernel::{BaseKernel, Block, DenseKernel, LandmarkSet, LowRankFactor, Operator};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Architecture {
    Gcn,
    Gcnii,
    Gin,
    Sage,
    Ggp,
    Mlp,
    /// Graph-free GP with the squared-exponential input kernel.
    Rbf,
}

impl Architecture {
    pub const ALL: [Architecture; 7] = [
        Architecture::Gcn,
        Architecture::Gcnii,
        Architecture::Gin,
        Architecture::Sage,
        Architecture::Ggp,
        Architecture::Mlp,
        Architecture::Rbf,
    ];

    /// True for the architectures that have a finite-width network counterpart.
    pub fn has_network(self) -> bool {
        !matches!(self, Architecture::Ggp | Architecture::Rbf)
    }

    /// Default input kernel.
    pub fn default_base(self) -> BaseKernel {
        match self {
            Architecture::Ggp => BaseKernel::ggp_default(),
            Architecture::Rbf => BaseKernel::Rbf { gamma: 1.0 },
            _ => BaseKernel::Inner,
        }
    }

    /// GraphSAGE and GGP aggregate with the row-normalized operator.
    pub fn uses_row_normalization(self) -> bool {
        matches!(self, Architecture::Sage | Architecture::Ggp)
    }

    pub fn name(self) -> &'static str {
        match self {
            Architecture::Gcn => "gcn",
            Architecture::Gcnii => "gcnii",
            Architecture::Gin => "gin",
            Architecture::Sage => "sage",
            Architecture::Ggp => "ggp",
            Architecture::Mlp => "mlp",
            Architecture::Rbf => "rbf",
        }
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Architecture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Architecture::ALL
            .into_iter()
            .find(|a| a.name() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::input(format!("unknown architecture {s:?}")))
    }
}

/// Architecture hyperparameters. Unused fields are ignored by each program.
#[derive(Debug, Clone, PartialEq)]
pub struct Hyperparams {
    pub sigma_b: f64,
    pub sigma_w: f64,
    /// GCNII initial-residual weight.
    pub alpha: f64,
    /// GCNII identity-mapping strength; `β_l = ln(λ/l + 1)`.
    pub lambda: f64,
    /// GraphSAGE self weight.
    pub sigma_w1: f64,
    /// GraphSAGE neighbor weight.
    pub sigma_w2: f64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            sigma_b: 0.0,
            sigma_w: 1.0,
            alpha: 0.1,
            lambda: 0.5,
            sigma_w1: 0.0,
            sigma_w2: 1.0,
        }
    }
}

impl Hyperparams {
    /// Defaults used for regression targets (`σ_b² = 0.1`).
    pub fn regression() -> Self {
        Self {
            sigma_b: 0.1f64.sqrt(),
            ..Self::default()
        }
    }
}

/// `β_l = ln(λ/l + 1)` for `l = 1..=depth`.
pub fn gcnii_betas(lambda: f64, depth: usize) -> Vec<f64> {
    (1..=depth).map(|l| (lambda / l as f64 + 1.0).ln()).collect()
}

#[derive(Debug, Clone)]
pub struct KernelProgram {
    arch: Architecture,
    layers: Vec<Vec<Block>>,
}

fn activation_after_first(layer: usize) -> Option<Block> {
    (layer > 0).then_some(Block::Activation)
}

impl KernelProgram {
    /// Wrap hand-written layers. Every layer must be non-empty.
    pub fn from_layers(arch: Architecture, layers: Vec<Vec<Block>>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::input("a kernel program needs at least one layer"));
        }
        if layers.iter().any(Vec::is_empty) {
            return Err(Error::input("kernel program layers must not be empty"));
        }
        Ok(Self { arch, layers })
    }

    /// Standard program for `arch`. `op` must already be normalized the way
    /// the architecture expects (see [`Architecture::uses_row_normalization`]);
    /// it is ignored for the MLP.
    pub fn build(arch: Architecture, op: Operator, depth: usize, hp: &Hyperparams) -> Result<Self> {
        match arch {
            Architecture::Gcn => Self::gcn(op, hp.sigma_b, hp.sigma_w, depth),
            Architecture::Gcnii => {
                Self::gcnii(op, hp.sigma_w, hp.alpha, &gcnii_betas(hp.lambda, depth))
            }
            Architecture::Gin => Self::gin(op, hp.sigma_b, hp.sigma_w, depth),
            Architecture::Sage => Self::sage(op, hp.sigma_w1, hp.sigma_w2, depth),
            Architecture::Ggp => Self::ggp(op),
            Architecture::Mlp => Self::mlp(hp.sigma_b, hp.sigma_w, depth),
            Architecture::Rbf => Self::identity(),
        }
    }

    /// `K ← σ_w² A g(K) Aᵀ + σ_b²·𝟙`
    pub fn gcn(op: Operator, sigma_b: f64, sigma_w: f64, depth: usize) -> Result<Self> {
        let layers = (0..depth)
            .map(|l| {
                activation_after_first(l)
                    .into_iter()
                    .chain([
                        Block::GraphConv(op.clone()),
                        Block::Weight(sigma_w),
                        Block::Bias(sigma_b),
                    ])
                    .collect()
            })
            .collect();
        Self::from_layers(Architecture::Gcn, layers)
    }

    /// `K ← ((1−α)² A g(K) Aᵀ + α² K⁽⁰⁾)((1−β_l)² + β_l²σ_w²)`, one layer per entry of `betas`.
    pub fn gcnii(op: Operator, sigma_w: f64, alpha: f64, betas: &[f64]) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::input(format!("GCNII alpha must lie in [0, 1], got {alpha}")));
        }
        if let Some(b) = betas.iter().find(|b| !(0.0..=1.0).contains(*b)) {
            return Err(Error::input(format!("GCNII beta must lie in [0, 1], got {b}")));
        }
        let layers = betas
            .iter()
            .enumerate()
            .map(|(l, &beta)| {
                let main = activation_after_first(l)
                    .into_iter()
                    .chain([Block::GraphConv(op.clone()), Block::Weight(1.0 - alpha)])
                    .collect();
                vec![
                    Block::IndependentAdd(main, vec![Block::Input, Block::Weight(alpha)]),
                    Block::MixedWeight {
                        alpha: 1.0 - beta,
                        beta,
                        sigma_w,
                    },
                ]
            })
            .collect();
        Self::from_layers(Architecture::Gcnii, layers)
    }

    /// `B = σ_w² A g(K) Aᵀ + σ_b²·𝟙`, `K ← σ_w² g(B) + σ_b²·𝟙`.
    pub fn gin(op: Operator, sigma_b: f64, sigma_w: f64, depth: usize) -> Result<Self> {
        let layers = (0..depth)
            .map(|l| {
                activation_after_first(l)
                    .into_iter()
                    .chain([
                        Block::GraphConv(op.clone()),
                        Block::Weight(sigma_w),
                        Block::Bias(sigma_b),
                        Block::Activation,
                        Block::Weight(sigma_w),
                        Block::Bias(sigma_b),
                    ])
                    .collect()
            })
            .collect();
        Self::from_layers(Architecture::Gin, layers)
    }

    /// `K ← σ_w1² g(K) + σ_w2² A g(K) Aᵀ` with a row-normalized `A`.
    pub fn sage(op: Operator, sigma_w1: f64, sigma_w2: f64, depth: usize) -> Result<Self> {
        let layers = (0..depth)
            .map(|l| {
                activation_after_first(l)
                    .into_iter()
                    .chain([Block::IndependentAdd(
                        vec![Block::Weight(sigma_w1)],
                        vec![Block::GraphConv(op.clone()), Block::Weight(sigma_w2)],
                    )])
                    .collect()
            })
            .collect();
        Self::from_layers(Architecture::Sage, layers)
    }

    /// `K = A K₀ Aᵀ`, a single graph convolution of the input kernel.
    pub fn ggp(op: Operator) -> Result<Self> {
        Self::from_layers(Architecture::Ggp, vec![vec![Block::GraphConv(op)]])
    }

    /// `K = K₀`. Paired with the squared-exponential base kernel this is the RBF baseline.
    pub fn identity() -> Result<Self> {
        Self::from_layers(Architecture::Rbf, vec![vec![Block::Weight(1.0)]])
    }

    /// `K ← σ_w² g(K) + σ_b²·𝟙`, no graph.
    pub fn mlp(sigma_b: f64, sigma_w: f64, depth: usize) -> Result<Self> {
        let layers = (0..depth)
            .map(|l| {
                activation_after_first(l)
                    .into_iter()
                    .chain([Block::Weight(sigma_w), Block::Bias(sigma_b)])
                    .collect()
            })
            .collect();
        Self::from_layers(Architecture::Mlp, layers)
    }

    pub fn architecture(&self) -> Architecture {
        self.arch
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn layers(&self) -> &[Vec<Block>] {
        &self.layers
    }

    /// True when some layer reads the program input through [`Block::Input`].
    pub fn uses_input(&self) -> bool {
        fn any_input(blocks: &[Block]) -> bool {
            blocks.iter().any(|b| match b {
                Block::Input => true,
                Block::IndependentAdd(l, r) => any_input(l) || any_input(r),
                _ => false,
            })
        }
        self.layers.iter().any(|l| any_input(l))
    }

    /// Exact kernels after every layer, `K⁽¹⁾ … K⁽ᴸ⁾`.
    pub fn run_exact(&self, k0: &DenseKernel) -> Result<Vec<DenseKernel>> {
        let mut out = Vec::with_capacity(self.depth());
        let mut state = k0.clone();
        for (l, layer) in self.layers.iter().enumerate() {
            state = apply_blocks_exact(&state, layer, k0).map_err(|e| e.at_layer(l + 1))?;
            out.push(state.clone());
        }
        Ok(out)
    }

    /// Final exact kernel `K⁽ᴸ⁾`.
    pub fn final_exact(&self, k0: &DenseKernel) -> Result<DenseKernel> {
        let mut state = k0.clone();
        for (l, layer) in self.layers.iter().enumerate() {
            state = apply_blocks_exact(&state, layer, k0).map_err(|e| e.at_layer(l + 1))?;
        }
        Ok(state)
    }

    /// Low-rank factor `Q⁽ᴸ⁾` with `K⁽ᴸ⁾ ≈ Q⁽ᴸ⁾Q⁽ᴸ⁾ᵀ`.
    pub fn run_lowrank(&self, q0: &LowRankFactor, landmarks: &LandmarkSet) -> Result<LowRankFactor> {
        let mut state = q0.clone();
        for (l, layer) in self.layers.iter().enumerate() {
            state = apply_blocks_lowrank(&state, layer, landmarks, q0)
                .map_err(|e| e.at_layer(l + 1))?;
        }
        Ok(state)
    }
}

fn shared(a: &SparseAdjacency) -> Operator {
    Arc::new(a.clone())
}

/// GCN kernels `K⁽¹⁾ … K⁽ᴸ⁾`.
pub fn gcn_exact(
    a: &SparseAdjacency,
    k0: &DenseKernel,
    sigma_b: f64,
    sigma_w: f64,
    depth: usize,
) -> Result<Vec<DenseKernel>> {
    KernelProgram::gcn(shared(a), sigma_b, sigma_w, depth)?.run_exact(k0)
}

/// GCN low-rank factor `Q⁽ᴸ⁾`, rank at most `Nₐ + 1`.
pub fn gcn_lowrank(
    a: &SparseAdjacency,
    q0: &LowRankFactor,
    landmarks: &LandmarkSet,
    sigma_b: f64,
    sigma_w: f64,
    depth: usize,
) -> Result<LowRankFactor> {
    KernelProgram::gcn(shared(a), sigma_b, sigma_w, depth)?.run_lowrank(q0, landmarks)
}

pub fn gcnii_exact(
    a: &SparseAdjacency,
    k0: &DenseKernel,
    sigma_w: f64,
    alpha: f64,
    betas: &[f64],
) -> Result<DenseKernel> {
    KernelProgram::gcnii(shared(a), sigma_w, alpha, betas)?.final_exact(k0)
}

pub fn gin_exact(
    a: &SparseAdjacency,
    k0: &DenseKernel,
    sigma_b: f64,
    sigma_w: f64,
    depth: usize,
) -> Result<DenseKernel> {
    KernelProgram::gin(shared(a), sigma_b, sigma_w, depth)?.final_exact(k0)
}

pub fn sage_exact(
    a_row: &SparseAdjacency,
    k0: &DenseKernel,
    sigma_w1: f64,
    sigma_w2: f64,
    depth: usize,
) -> Result<DenseKernel> {
    KernelProgram::sage(shared(a_row), sigma_w1, sigma_w2, depth)?.final_exact(k0)
}

/// GGP kernel `A K₀ Aᵀ` with the polynomial input kernel `(xᵀx′ + c)^d`.
pub fn ggp_kernel(
    a_row: &SparseAdjacency,
    features: &DMatrix<f64>,
    c: f64,
    degree: f64,
) -> Result<DenseKernel> {
    let k0 = BaseKernel::Poly { c, degree }.evaluate(features)?;
    KernelProgram::ggp(shared(a_row))?.final_exact(&k0)
}

/// Low-rank run of any program.
pub fn lowrank_variant(
    program: &KernelProgram,
    q0: &LowRankFactor,
    landmarks: &LandmarkSet,
) -> Result<LowRankFactor> {
    program.run_lowrank(q0, landmarks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_adjacency, normalize_row};
    use crate::kernel::relu_expectation;
    use approx::assert_relative_eq;

    fn half() -> SparseAdjacency {
        SparseAdjacency::from_dense(&DMatrix::from_element(2, 2, 0.5)).unwrap()
    }

    #[test]
    fn gcn_one_layer_examples() {
        let eye = SparseAdjacency::identity(2).unwrap();
        let k = gcn_exact(&eye, &DenseKernel::identity(2), 0.0, 2f64.sqrt(), 1).unwrap();
        assert_relative_eq!(k[0].matrix(), &(DMatrix::identity(2, 2) * 2.0), epsilon = 1e-14);

        let k = gcn_exact(&half(), &DenseKernel::identity(2), 0.0, 1.0, 1).unwrap();
        assert_relative_eq!(k[0].matrix(), &DMatrix::from_element(2, 2, 0.5), epsilon = 1e-15);
    }

    #[test]
    fn gcn_recursion_by_hand() {
        let a = crate::graph::normalize_sym(&build_adjacency(&[(0, 1), (1, 2)], 3, false).unwrap())
            .unwrap();
        let ad = a.to_dense();
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.5, 0.5, -0.2, 1.0]);
        let k0 = crate::kernel::base_inner(&x).unwrap();
        let ks = gcn_exact(&a, &k0, 0.3, 1.2, 2).unwrap();
        let k1 = (&ad * k0.matrix() * ad.transpose()) * 1.44;
        let k1 = k1.add_scalar(0.09);
        assert_relative_eq!(ks[0].matrix(), &k1, epsilon = 1e-13);
        let c1 = relu_expectation(&DenseKernel::new(k1).unwrap());
        let k2 = (&ad * c1.matrix() * ad.transpose() * 1.44).add_scalar(0.09);
        assert_relative_eq!(ks[1].matrix(), &k2, epsilon = 1e-13);
    }

    #[test]
    fn gcnii_limits() {
        let a = half();
        let k0 = DenseKernel::new(DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.2, 0.7])).unwrap();
        let beta = [0.3];
        let m = 0.7f64.powi(2) + 0.09 * 4.0;
        // alpha = 1: pure skip
        let k = gcnii_exact(&a, &k0, 2.0, 1.0, &beta).unwrap();
        assert_relative_eq!(k.matrix(), &(k0.matrix() * m), epsilon = 1e-14);
        // alpha = 0: bias-free GCN layer with mixed-weight scaling
        let betas = [0.3, 0.2];
        let k = gcnii_exact(&a, &k0, 2.0, 0.0, &betas).unwrap();
        let m2 = 0.8f64.powi(2) + 0.04 * 4.0;
        let gcn = KernelProgram::from_layers(
            Architecture::Gcn,
            vec![
                vec![Block::GraphConv(shared(&a)), Block::Weight(m.sqrt())],
                vec![Block::Activation, Block::GraphConv(shared(&a)), Block::Weight(m2.sqrt())],
            ],
        )
        .unwrap()
        .final_exact(&k0)
        .unwrap();
        assert_relative_eq!(k.matrix(), gcn.matrix(), epsilon = 1e-14);
    }

    #[test]
    fn gin_without_weights_is_constant() {
        let a = half();
        let k = gin_exact(&a, &DenseKernel::identity(2), 0.4, 0.0, 3).unwrap();
        assert_relative_eq!(k.matrix(), &DMatrix::from_element(2, 2, 0.16), epsilon = 1e-15);
    }

    #[test]
    fn gin_matches_manual_composition() {
        let eye = SparseAdjacency::identity(3).unwrap();
        let k0 = DenseKernel::new(DMatrix::from_row_slice(
            3,
            3,
            &[1.0, 0.3, -0.2, 0.3, 0.8, 0.1, -0.2, 0.1, 1.5],
        ))
        .unwrap();
        let (sb, sw) = (0.2, 1.3);
        let ks = KernelProgram::gin(shared(&eye), sb, sw, 2).unwrap().run_exact(&k0).unwrap();
        let mlp = |k: &DenseKernel, act: bool| {
            let c = if act { relu_expectation(k) } else { k.clone() };
            DenseKernel::new(c.matrix() * (sw * sw)).unwrap().matrix().add_scalar(sb * sb)
        };
        let b1 = DenseKernel::new(mlp(&k0, false)).unwrap();
        let k1 = DenseKernel::new(mlp(&b1, true)).unwrap();
        assert_relative_eq!(ks[0].matrix(), k1.matrix(), epsilon = 1e-14);
        let b2 = DenseKernel::new(mlp(&k1, true)).unwrap();
        let k2 = DenseKernel::new(mlp(&b2, true)).unwrap();
        assert_relative_eq!(ks[1].matrix(), k2.matrix(), epsilon = 1e-14);
    }

    #[test]
    fn sage_special_cases() {
        let raw = build_adjacency(&[(0, 1), (1, 2), (2, 3)], 4, false).unwrap();
        let a = normalize_row(&raw).unwrap();
        let x = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0, -1.0, 0.5]);
        let k0 = crate::kernel::base_inner(&x).unwrap();

        let mlp = KernelProgram::mlp(0.0, 0.7, 3).unwrap().final_exact(&k0).unwrap();
        let sage = sage_exact(&a, &k0, 0.7, 0.0, 3).unwrap();
        assert_relative_eq!(sage.matrix(), mlp.matrix(), epsilon = 1e-14);

        let gcn = gcn_exact(&a, &k0, 0.0, 1.1, 3).unwrap();
        let sage = sage_exact(&a, &k0, 0.0, 1.1, 3).unwrap();
        assert_relative_eq!(sage.matrix(), gcn[2].matrix(), epsilon = 1e-14);
    }

    #[test]
    fn ggp_examples() {
        let x = DMatrix::from_row_slice(3, 2, &[0.1, 0.2, -0.4, 1.0, 0.3, 0.3]);
        let eye = SparseAdjacency::identity(3).unwrap();
        let k = ggp_kernel(&eye, &x, 5.0, 3.0).unwrap();
        let k0 = crate::kernel::base_poly(&x, 5.0, 3.0).unwrap();
        assert_relative_eq!(k.matrix(), k0.matrix(), epsilon = 1e-12);

        let raw = build_adjacency(&[(0, 1), (1, 2)], 3, false).unwrap();
        let a = normalize_row(&raw).unwrap();
        let k = ggp_kernel(&a, &DMatrix::zeros(3, 2), 5.0, 3.0).unwrap();
        assert_relative_eq!(k.matrix(), &DMatrix::from_element(3, 3, 125.0), epsilon = 1e-12);
    }

    #[test]
    fn ggp_matches_dense_triple_product() {
        let raw = build_adjacency(&[(0, 1), (1, 2), (2, 3), (3, 4), (0, 4), (1, 3)], 5, false).unwrap();
        let a = normalize_row(&raw).unwrap();
        let x = DMatrix::from_fn(5, 3, |i, j| ((i * 3 + j) as f64 * 0.37).sin());
        let k = ggp_kernel(&a, &x, 5.0, 3.0).unwrap();
        let ad = a.to_dense();
        let mut k0 = DMatrix::zeros(5, 5);
        for i in 0..5 {
            for j in 0..5 {
                k0[(i, j)] = (x.row(i).dot(&x.row(j)) + 5.0f64).powi(3);
            }
        }
        let expected = &ad * k0 * ad.transpose();
        assert_relative_eq!(k.matrix(), &expected, max_relative = 1e-12);
    }

    #[test]
    fn betas_follow_schedule() {
        let b = gcnii_betas(0.5, 2);
        assert_relative_eq!(b[0], 1.5f64.ln());
        assert_relative_eq!(b[1], 1.25f64.ln());
    }

    #[test]
    fn program_metadata() {
        let a = shared(&half());
        let p = KernelProgram::build(Architecture::Gcnii, a.clone(), 2, &Hyperparams::default()).unwrap();
        assert!(p.uses_input());
        assert_eq!(p.depth(), 2);
        let p = KernelProgram::build(Architecture::Gcn, a, 2, &Hyperparams::default()).unwrap();
        assert!(!p.uses_input());
        assert!(KernelProgram::mlp(0.0, 1.0, 0).is_err());
        assert_eq!("GIN".parse::<Architecture>().unwrap(), Architecture::Gin);
        assert!("gat".parse::<Architecture>().is_err());
    }

    #[test]
    fn lowrank_errors_name_the_layer() {
        let a = shared(&half());
        let p = KernelProgram::gcn(a, 0.0, 1.0, 2).unwrap();
        let q0 = LowRankFactor::new(DMatrix::from_row_slice(2, 1, &[f64::NAN, 1.0]));
        let err = p.run_lowrank(&q0, &LandmarkSet::all(2).unwrap()).unwrap_err();
        assert!(matches!(err, Error::Layer { layer: 2, .. }), "{err}");
    }
}
