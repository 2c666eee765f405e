//! GP posterior inference on graph nodes.
//!
//! Exact path: `ŷ = K_*b (K_bb + εI)⁻¹ y_b`.
//! Low-rank path, through the Woodbury identity on `K̂ = QQᵀ`:
//! `ŷ = Q_* (Q_bᵀQ_b + εI)⁻¹ Q_bᵀ y_b` and `var = ε diag(Q_* (Q_bᵀQ_b + εI)⁻¹ Q_*ᵀ)`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{DenseKernel, LowRankFactor};
use crate::metrics::{micro_f1, r2};

/// Relative jitter `1e-10 · trace / N` added on a failed factorization.
pub const SOLVE_JITTER_REL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

impl SplitIndices {
    pub fn new(train: Vec<usize>, val: Vec<usize>, test: Vec<usize>, n_nodes: usize) -> Result<Self> {
        let s = Self { train, val, test };
        s.validate(n_nodes)?;
        Ok(s)
    }

    /// Indices in range, each split duplicate-free, splits pairwise disjoint.
    pub fn validate(&self, n_nodes: usize) -> Result<()> {
        let mut owner = vec![None; n_nodes];
        for (name, idx) in [("train", &self.train), ("val", &self.val), ("test", &self.test)] {
            for &i in idx {
                if i >= n_nodes {
                    return Err(Error::input(format!(
                        "{name} index {i} out of range for {n_nodes} nodes"
                    )));
                }
                if let Some(prev) = owner[i].replace(name) {
                    return Err(Error::input(format!("node {i} appears in both {prev} and {name}")));
                }
            }
        }
        if self.train.is_empty() {
            return Err(Error::input("training split is empty"));
        }
        Ok(())
    }
}

/// Node targets.
#[derive(Debug, Clone, PartialEq)]
pub enum Targets {
    Classes { labels: Vec<usize>, n_classes: usize },
    Real(Vec<f64>),
}

impl Targets {
    pub fn classes(labels: Vec<usize>) -> Result<Self> {
        let n_classes = labels.iter().max().map_or(0, |m| m + 1);
        if n_classes < 2 {
            return Err(Error::input("classification needs at least two classes"));
        }
        Ok(Targets::Classes { labels, n_classes })
    }

    pub fn real(values: Vec<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::input(format!("non-finite regression target {v}")));
        }
        Ok(Targets::Real(values))
    }

    pub fn len(&self) -> usize {
        match self {
            Targets::Classes { labels, .. } => labels.len(),
            Targets::Real(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_classification(&self) -> bool {
        matches!(self, Targets::Classes { .. })
    }

    pub fn n_channels(&self) -> usize {
        match self {
            Targets::Classes { n_classes, .. } => *n_classes,
            Targets::Real(_) => 1,
        }
    }

    pub fn metric_name(&self) -> &'static str {
        if self.is_classification() {
            "micro_f1"
        } else {
            "r2"
        }
    }

    pub fn channel_names(&self) -> Vec<String> {
        match self {
            Targets::Classes { n_classes, .. } => (0..*n_classes).map(|c| format!("class_{c}")).collect(),
            Targets::Real(_) => vec!["y".to_string()],
        }
    }

    /// Rows of the target matrix: plain one-hot for classes, one column for reals.
    pub fn matrix(&self, idx: &[usize]) -> DMatrix<f64> {
        match self {
            Targets::Classes { labels, n_classes } => {
                DMatrix::from_fn(idx.len(), *n_classes, |r, c| f64::from(labels[idx[r]] == c))
            }
            Targets::Real(v) => DMatrix::from_fn(idx.len(), 1, |r, _| v[idx[r]]),
        }
    }

    /// Micro-F1 or R² of `mean` (one row per entry of `idx`).
    pub fn score(&self, mean: &DMatrix<f64>, idx: &[usize]) -> Result<f64> {
        match self {
            Targets::Classes { labels, .. } => {
                let truth: Vec<usize> = idx.iter().map(|&i| labels[i]).collect();
                micro_f1(&classify_onehot(mean)?, &truth)
            }
            Targets::Real(v) => {
                let truth: Vec<f64> = idx.iter().map(|&i| v[i]).collect();
                r2(mean.column(0).as_slice(), &truth)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorResult {
    /// N_*×C posterior mean.
    pub mean: DMatrix<f64>,
    pub variance_diag: Option<DVector<f64>>,
    pub nugget: f64,
    pub channel_names: Vec<String>,
}

impl PosteriorResult {
    /// Variance with round-off negatives set to 0.
    pub fn clamped_variance(&self) -> Option<DVector<f64>> {
        self.variance_diag.as_ref().map(|v| v.map(|x| x.max(0.0)))
    }
}

fn condition_estimate(m: &DMatrix<f64>) -> f64 {
    let eig = m.clone().symmetric_eigen().eigenvalues;
    let (lmin, lmax) = (eig.min(), eig.max());
    if lmin > 0.0 {
        lmax / lmin
    } else {
        f64::INFINITY
    }
}

/// Cholesky factorization with one jittered retry.
pub(crate) fn spd_factor(mut m: DMatrix<f64>) -> Result<Cholesky<f64, Dyn>> {
    if let Some(c) = m.clone().cholesky() {
        return Ok(c);
    }
    let n = m.nrows().max(1);
    let jitter = SOLVE_JITTER_REL * m.trace().abs() / n as f64;
    for i in 0..m.nrows() {
        m[(i, i)] += jitter;
    }
    m.clone().cholesky().ok_or_else(|| Error::Solve {
        condition: condition_estimate(&m),
    })
}

fn check_nugget(nugget: f64, strict: bool) -> Result<()> {
    let ok = nugget.is_finite() && if strict { nugget > 0.0 } else { nugget >= 0.0 };
    if ok {
        Ok(())
    } else {
        Err(Error::input(format!("invalid nugget {nugget}")))
    }
}

fn check_indices(n: usize, train: &[usize], predict: &[usize], y_rows: Option<usize>) -> Result<()> {
    if train.is_empty() {
        return Err(Error::input("no training nodes"));
    }
    if let Some(&bad) = train.iter().chain(predict).find(|&&i| i >= n) {
        return Err(Error::input(format!("node index {bad} out of range for {n} nodes")));
    }
    match y_rows {
        Some(r) if r != train.len() => Err(Error::input(format!(
            "{} training nodes but {r} target rows",
            train.len()
        ))),
        _ => Ok(()),
    }
}

/// Covariance prior that can be conditioned on training nodes.
pub trait Prior {
    fn n(&self) -> usize;

    /// Posterior mean at `predict` given targets `y` (one row per training node).
    fn mean(&self, train: &[usize], predict: &[usize], y: &DMatrix<f64>, nugget: f64)
        -> Result<DMatrix<f64>>;

    /// Posterior variance diagonal at `predict` (unclamped).
    fn variance(&self, train: &[usize], predict: &[usize], nugget: f64) -> Result<DVector<f64>>;
}

impl Prior for DenseKernel {
    fn n(&self) -> usize {
        DenseKernel::n(self)
    }

    fn mean(&self, train: &[usize], predict: &[usize], y: &DMatrix<f64>, nugget: f64)
        -> Result<DMatrix<f64>> {
        check_nugget(nugget, false)?;
        check_indices(self.n(), train, predict, Some(y.nrows()))?;
        let kbb = self.select(train, train) + DMatrix::identity(train.len(), train.len()) * nugget;
        let chol = spd_factor(kbb)?;
        let alpha = chol.solve(y);
        Ok(self.select(predict, train) * alpha)
    }

    fn variance(&self, train: &[usize], predict: &[usize], nugget: f64) -> Result<DVector<f64>> {
        check_nugget(nugget, false)?;
        check_indices(self.n(), train, predict, None)?;
        let kbb = self.select(train, train) + DMatrix::identity(train.len(), train.len()) * nugget;
        let chol = spd_factor(kbb)?;
        let kbs = self.select(train, predict);
        let w = chol
            .l()
            .solve_lower_triangular(&kbs)
            .ok_or(Error::Solve { condition: f64::INFINITY })?;
        Ok(DVector::from_fn(predict.len(), |r, _| {
            self.get(predict[r], predict[r]) - w.column(r).norm_squared()
        }))
    }
}

impl LowRankFactor {
    fn woodbury(&self, train: &[usize], nugget: f64) -> Result<Option<Cholesky<f64, Dyn>>> {
        if self.rank() == 0 {
            return Ok(None);
        }
        let qb = self.rows(train);
        let m = qb.transpose() * &qb + DMatrix::identity(self.rank(), self.rank()) * nugget;
        spd_factor(m).map(Some)
    }
}

impl Prior for LowRankFactor {
    fn n(&self) -> usize {
        LowRankFactor::n(self)
    }

    fn mean(&self, train: &[usize], predict: &[usize], y: &DMatrix<f64>, nugget: f64)
        -> Result<DMatrix<f64>> {
        check_nugget(nugget, true)?;
        check_indices(self.n(), train, predict, Some(y.nrows()))?;
        let Some(chol) = self.woodbury(train, nugget)? else {
            return Ok(DMatrix::zeros(predict.len(), y.ncols()));
        };
        let rhs = self.rows(train).transpose() * y;
        Ok(self.rows(predict) * chol.solve(&rhs))
    }

    fn variance(&self, train: &[usize], predict: &[usize], nugget: f64) -> Result<DVector<f64>> {
        check_nugget(nugget, true)?;
        check_indices(self.n(), train, predict, None)?;
        let Some(chol) = self.woodbury(train, nugget)? else {
            return Ok(DVector::zeros(predict.len()));
        };
        let w = chol
            .l()
            .solve_lower_triangular(&self.rows(predict).transpose())
            .ok_or(Error::Solve { condition: f64::INFINITY })?;
        Ok(DVector::from_fn(predict.len(), |r, _| nugget * w.column(r).norm_squared()))
    }
}

fn default_names(c: usize) -> Vec<String> {
    (0..c).map(|i| format!("channel_{i}")).collect()
}

/// Posterior at the test nodes of `split`.
pub fn posterior<P: Prior + ?Sized>(
    prior: &P,
    split: &SplitIndices,
    y_train: &DMatrix<f64>,
    nugget: f64,
    with_variance: bool,
) -> Result<PosteriorResult> {
    let mean = prior.mean(&split.train, &split.test, y_train, nugget)?;
    let variance_diag = if with_variance {
        Some(prior.variance(&split.train, &split.test, nugget)?)
    } else {
        None
    };
    Ok(PosteriorResult {
        channel_names: default_names(mean.ncols()),
        mean,
        variance_diag,
        nugget,
    })
}

pub fn posterior_mean_exact(
    k: &DenseKernel,
    split: &SplitIndices,
    y_train: &DMatrix<f64>,
    nugget: f64,
) -> Result<PosteriorResult> {
    posterior(k, split, y_train, nugget, false)
}

pub fn posterior_variance_exact(k: &DenseKernel, split: &SplitIndices, nugget: f64) -> Result<DVector<f64>> {
    k.variance(&split.train, &split.test, nugget)
}

pub fn posterior_mean_lowrank(
    q: &LowRankFactor,
    split: &SplitIndices,
    y_train: &DMatrix<f64>,
    nugget: f64,
) -> Result<PosteriorResult> {
    posterior(q, split, y_train, nugget, false)
}

pub fn posterior_variance_lowrank(q: &LowRankFactor, split: &SplitIndices, nugget: f64) -> Result<DVector<f64>> {
    q.variance(&split.train, &split.test, nugget)
}

/// Row-wise argmax; ties go to the lowest class index.
pub fn classify_onehot(mean: &DMatrix<f64>) -> Result<Vec<usize>> {
    if mean.ncols() < 2 {
        return Err(Error::input("classification needs at least two output channels"));
    }
    Ok(mean
        .row_iter()
        .map(|row| {
            let mut best = 0;
            for c in 1..row.len() {
                if row[c] > row[best] {
                    best = c;
                }
            }
            best
        })
        .collect())
}

/// `points` logarithmically spaced values from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi >= lo && hi.is_finite()) || points == 0 {
        return Err(Error::input(format!("invalid grid {lo},{hi},{points}")));
    }
    if points == 1 {
        return Ok(vec![lo]);
    }
    let (a, b) = (lo.log10(), hi.log10());
    Ok((0..points)
        .map(|i| 10f64.powf(a + (b - a) * i as f64 / (points - 1) as f64))
        .collect())
}

/// 13 points from 1e-3 to 1e1, three per decade.
pub fn default_nugget_grid() -> Vec<f64> {
    log_grid(1e-3, 1e1, 13).expect("static grid")
}

#[derive(Debug, Clone, PartialEq)]
pub struct NuggetSearch {
    pub nugget: f64,
    /// `(ε, validation score)` in ascending `ε`.
    pub scores: Vec<(f64, f64)>,
    pub warning: Option<String>,
}

/// Grid search for `ε` maximizing the validation score; ties go to the smaller `ε`.
///
/// A grid point whose solve fails scores NaN. If every score is NaN (for
/// instance constant regression targets) the smallest `ε` is returned with a
/// warning.
pub fn select_nugget<P: Prior + ?Sized>(
    prior: &P,
    split: &SplitIndices,
    targets: &Targets,
    grid: &[f64],
) -> Result<NuggetSearch> {
    if grid.is_empty() {
        return Err(Error::input("nugget grid is empty"));
    }
    if split.val.is_empty() {
        return Err(Error::input("nugget selection needs a validation split"));
    }
    if targets.len() != prior.n() {
        return Err(Error::input(format!(
            "{} targets for {} nodes",
            targets.len(),
            prior.n()
        )));
    }
    let mut sorted = grid.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    let y = targets.matrix(&split.train);
    let mut scores = Vec::with_capacity(sorted.len());
    let mut best: Option<(f64, f64)> = None;
    for &eps in &sorted {
        let score = match prior.mean(&split.train, &split.val, &y, eps) {
            Ok(mean) => targets.score(&mean, &split.val)?,
            Err(Error::Solve { .. }) => f64::NAN,
            Err(e) => return Err(e),
        };
        scores.push((eps, score));
        if !score.is_nan() && best.is_none_or(|(_, s)| score > s) {
            best = Some((eps, score));
        }
    }
    Ok(match best {
        Some((nugget, _)) => NuggetSearch {
            nugget,
            scores,
            warning: None,
        },
        None => NuggetSearch {
            nugget: sorted[0],
            scores,
            warning: Some(format!(
                "validation {} undefined at every grid point; using smallest nugget",
                targets.metric_name()
            )),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn split(train: &[usize], test: &[usize], n: usize) -> SplitIndices {
        SplitIndices::new(train.to_vec(), vec![], test.to_vec(), n).unwrap()
    }

    #[test]
    fn interpolates_training_point() {
        let k = DenseKernel::new(DMatrix::from_element(2, 2, 1.0)).unwrap();
        let y = DMatrix::from_element(1, 1, 3.0);
        let r = posterior_mean_exact(&k, &split(&[0], &[1], 2), &y, 1e-12).unwrap();
        assert_relative_eq!(r.mean[(0, 0)], 3.0, epsilon = 1e-9);
    }

    #[test]
    fn uncorrelated_test_node_gets_prior_mean() {
        let k = DenseKernel::identity(2);
        let y = DMatrix::from_element(1, 1, 3.0);
        let r = posterior_mean_exact(&k, &split(&[0], &[1], 2), &y, 0.1).unwrap();
        assert_eq!(r.mean[(0, 0)], 0.0);
    }

    #[test]
    fn exact_mean_matches_dense_inverse() {
        let x = DMatrix::from_fn(6, 3, |i, j| ((i * 7 + j * 3) as f64 * 0.61).sin());
        let k = DenseKernel::new(&x * x.transpose()).unwrap();
        let s = split(&[0, 2, 3], &[1, 4, 5], 6);
        let y = DMatrix::from_row_slice(3, 1, &[1.0, -0.5, 2.0]);
        let eps = 0.3;
        let r = posterior_mean_exact(&k, &s, &y, eps).unwrap();
        let kbb = k.select(&s.train, &s.train) + DMatrix::identity(3, 3) * eps;
        let inv = kbb.try_inverse().unwrap();
        let expected = k.select(&s.test, &s.train) * inv * &y;
        assert_relative_eq!(r.mean, expected, epsilon = 1e-12);
    }

    #[test]
    fn lowrank_scalar_cases() {
        let q = LowRankFactor::new(DMatrix::from_element(4, 1, 1.0));
        let y = DMatrix::from_element(1, 1, 2.0);
        let r = posterior_mean_lowrank(&q, &split(&[0], &[1, 2, 3], 4), &y, 1.0).unwrap();
        assert_relative_eq!(r.mean, DMatrix::from_element(3, 1, 1.0), epsilon = 1e-15);

        let zero = LowRankFactor::new(DMatrix::zeros(4, 2));
        let s = split(&[0, 1], &[2, 3], 4);
        let r = posterior_mean_lowrank(&zero, &s, &DMatrix::from_element(2, 1, 5.0), 0.5).unwrap();
        assert_eq!(r.mean, DMatrix::zeros(2, 1));
        assert_eq!(posterior_variance_lowrank(&zero, &s, 0.5).unwrap(), DVector::zeros(2));
        assert!(posterior_mean_lowrank(&zero, &s, &DMatrix::zeros(2, 1), 0.0).is_err());
    }

    #[test]
    fn woodbury_agrees_with_exact() {
        let q = LowRankFactor::new(DMatrix::from_fn(6, 2, |i, j| (i as f64 + 1.0) * (j as f64 - 0.4)));
        let k = q.gram();
        let s = split(&[0, 1, 2], &[3, 4, 5], 6);
        let y = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 0.0]);
        for eps in [1e-3, 1.0, 10.0] {
            let a = posterior_mean_lowrank(&q, &s, &y, eps).unwrap().mean;
            let b = posterior_mean_exact(&k, &s, &y, eps).unwrap().mean;
            assert_relative_eq!(a, b, epsilon = 1e-8, max_relative = 1e-8);
            let va = posterior_variance_lowrank(&q, &s, eps).unwrap();
            let vb = posterior_variance_exact(&k, &s, eps).unwrap();
            assert_relative_eq!(va, vb, epsilon = 1e-8, max_relative = 1e-8);
        }
    }

    #[test]
    fn variance_grows_with_nugget() {
        let q = LowRankFactor::new(DMatrix::from_fn(6, 3, |i, j| ((i + 2 * j) as f64).cos()));
        let s = split(&[0, 1, 2], &[3, 4, 5], 6);
        let v: Vec<_> = [0.01, 0.1, 1.0]
            .iter()
            .map(|&e| posterior_variance_lowrank(&q, &s, e).unwrap())
            .collect();
        for w in v.windows(2) {
            assert!(w[0].iter().zip(w[1].iter()).all(|(a, b)| a <= b));
        }
    }

    #[test]
    fn singular_kernel_without_nugget_fails_with_condition() {
        let k = DenseKernel::new(DMatrix::from_row_slice(
            3,
            3,
            &[1.0, 1.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, -1.0],
        ))
        .unwrap();
        let s = split(&[0, 1, 2], &[], 3);
        let err = k.mean(&s.train, &[], &DMatrix::zeros(3, 1), 0.0).unwrap_err();
        assert!(matches!(err, Error::Solve { condition } if condition.is_infinite()));
    }

    #[test]
    fn argmax_rules() {
        let m = DMatrix::from_row_slice(3, 2, &[0.1, 0.9, 0.5, 0.5, 2.0, -1.0]);
        assert_eq!(classify_onehot(&m).unwrap(), vec![1, 0, 0]);
        assert!(classify_onehot(&DMatrix::zeros(2, 1)).is_err());
    }

    #[test]
    fn split_validation() {
        assert!(SplitIndices::new(vec![0, 1], vec![1], vec![], 3).is_err());
        assert!(SplitIndices::new(vec![0], vec![], vec![3], 3).is_err());
        assert!(SplitIndices::new(vec![], vec![0], vec![1], 3).is_err());
        assert!(SplitIndices::new(vec![0], vec![1], vec![2], 3).is_ok());
    }

    #[test]
    fn grids() {
        let g = default_nugget_grid();
        assert_eq!(g.len(), 13);
        assert_relative_eq!(g[0], 1e-3, max_relative = 1e-12);
        assert_relative_eq!(g[12], 10.0, max_relative = 1e-12);
        assert_relative_eq!(g[1] / g[0], 10f64.powf(1.0 / 3.0), max_relative = 1e-12);
        assert_eq!(log_grid(0.5, 0.5, 1).unwrap(), vec![0.5]);
        assert!(log_grid(0.0, 1.0, 3).is_err());
    }

    #[test]
    fn nugget_selection_rules() {
        let k = DenseKernel::identity(4);
        let s = SplitIndices::new(vec![0, 1], vec![2, 3], vec![], 4).unwrap();
        let t = Targets::real(vec![1.0, 2.0, 3.0, 3.0]).unwrap();
        assert!(select_nugget(&k, &s, &t, &[]).is_err());
        let one = select_nugget(&k, &s, &t, &[0.7]).unwrap();
        assert_eq!(one.nugget, 0.7);
        assert!(one.warning.is_some());

        // identical predictions everywhere: tie goes to the smallest grid point
        let t = Targets::classes(vec![0, 1, 0, 1]).unwrap();
        let r = select_nugget(&k, &s, &t, &[1.0, 0.1, 10.0]).unwrap();
        assert_eq!(r.nugget, 0.1);
        assert_eq!(r.scores.len(), 3);
    }

    #[test]
    fn onehot_targets() {
        let t = Targets::classes(vec![2, 0, 1]).unwrap();
        assert_eq!(t.n_channels(), 3);
        let m = t.matrix(&[0, 2]);
        assert_eq!(m, DMatrix::from_row_slice(2, 3, &[0.0, 0.0, 1.0, 0.0, 1.0, 0.0]));
        assert!(Targets::classes(vec![0, 0]).is_err());
    }
}
