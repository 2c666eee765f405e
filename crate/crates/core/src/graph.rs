//! Sparse graph operators.
//!
//! [`SparseAdjacency`] stores the (normalized) graph operator `A` in CSR form
//! with sorted column indices per row. Raw adjacency matrices are built from
//! undirected edge lists and then normalized either symmetrically (GCN, GCNII,
//! GIN) or by rows (GraphSAGE, GGP).

use std::collections::VecDeque;
use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Graph operator in compressed sparse row form.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseAdjacency {
    n_nodes: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

/// Dominant (Perron-Frobenius) eigenpair of a nonnegative operator.
#[derive(Debug, Clone)]
pub struct SpectralInfo {
    pub lambda: f64,
    /// Unit 2-norm, elementwise nonnegative.
    pub v: DVector<f64>,
    pub iterations: usize,
    pub residual: f64,
}

pub const DEFAULT_POWER_TOL: f64 = 1e-10;
pub const DEFAULT_POWER_MAX_ITER: usize = 10_000;

impl SparseAdjacency {
    /// Assemble from raw CSR arrays, validating the structural invariants.
    pub fn from_csr(
        n_nodes: usize,
        row_offsets: Vec<usize>,
        col_indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if n_nodes == 0 {
            return Err(Error::input("graph must have at least one node"));
        }
        if row_offsets.len() != n_nodes + 1 || row_offsets[0] != 0 {
            return Err(Error::input("row_offsets must have length N+1 and start at 0"));
        }
        if row_offsets.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::input("row_offsets must be nondecreasing"));
        }
        let m = row_offsets[n_nodes];
        if col_indices.len() != m || values.len() != m {
            return Err(Error::input(format!(
                "row_offsets[N] = {m} but {} column indices and {} values",
                col_indices.len(),
                values.len()
            )));
        }
        if let Some(&c) = col_indices.iter().find(|&&c| c >= n_nodes) {
            return Err(Error::input(format!("column index {c} out of range for N={n_nodes}")));
        }
        for i in 0..n_nodes {
            let cols = &col_indices[row_offsets[i]..row_offsets[i + 1]];
            if cols.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::input(format!("row {i} column indices not strictly increasing")));
            }
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::input("values must be finite and nonnegative"));
        }
        Ok(Self {
            n_nodes,
            row_offsets,
            col_indices,
            values,
        })
    }

    /// Dense-to-sparse conversion, dropping exact zeros. Mostly useful in tests.
    pub fn from_dense(m: &DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::input("adjacency must be square"));
        }
        let n = m.nrows();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        offsets.push(0);
        for i in 0..n {
            for j in 0..n {
                let v = m[(i, j)];
                if v != 0.0 {
                    cols.push(j);
                    vals.push(v);
                }
            }
            offsets.push(cols.len());
        }
        Self::from_csr(n, offsets, cols, vals)
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::from_csr(n, (0..=n).collect(), (0..n).collect(), vec![1.0; n])
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    /// Number of stored nonzeros (directed count).
    pub fn n_edges(&self) -> usize {
        self.col_indices.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Iterate over `(column, value)` pairs of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_offsets[i]..self.row_offsets[i + 1];
        self.col_indices[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let range = self.row_offsets[i]..self.row_offsets[i + 1];
        match self.col_indices[range.clone()].binary_search(&j) {
            Ok(pos) => self.values[range.start + pos],
            Err(_) => 0.0,
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n_nodes, self.n_nodes);
        for i in 0..self.n_nodes {
            for (j, v) in self.row(i) {
                m[(i, j)] = v;
            }
        }
        m
    }

    /// Row sums of the stored values.
    pub fn degrees(&self) -> Vec<f64> {
        (0..self.n_nodes).map(|i| self.row(i).map(|(_, v)| v).sum()).collect()
    }

    pub fn has_self_loops(&self) -> bool {
        (0..self.n_nodes).any(|i| self.get(i, i) != 0.0)
    }

    /// Every diagonal entry strictly positive (aperiodicity witness).
    pub fn has_positive_diagonal(&self) -> bool {
        (0..self.n_nodes).all(|i| self.get(i, i) > 0.0)
    }

    /// Exact symmetry of both pattern and values, up to `tol`.
    pub fn is_symmetric(&self, tol: f64) -> bool {
        (0..self.n_nodes).all(|i| self.row(i).all(|(j, v)| (self.get(j, i) - v).abs() <= tol))
    }

    /// Strong connectivity of the nonzero pattern (irreducibility).
    pub fn is_irreducible(&self) -> bool {
        let reach = |adj: &dyn Fn(usize) -> Vec<usize>| {
            let mut seen = vec![false; self.n_nodes];
            let mut queue = VecDeque::from([0usize]);
            seen[0] = true;
            let mut count = 1;
            while let Some(u) = queue.pop_front() {
                for w in adj(u) {
                    if !seen[w] {
                        seen[w] = true;
                        count += 1;
                        queue.push_back(w);
                    }
                }
            }
            count == self.n_nodes
        };
        let forward = |u: usize| self.row(u).filter(|(_, v)| *v > 0.0).map(|(j, _)| j).collect();
        if !reach(&forward) {
            return false;
        }
        if self.is_symmetric(0.0) {
            return true;
        }
        let t = self.transpose();
        let backward = |u: usize| t.row(u).filter(|(_, v)| *v > 0.0).map(|(j, _)| j).collect();
        reach(&backward)
    }

    pub fn transpose(&self) -> SparseAdjacency {
        let n = self.n_nodes;
        let mut counts = vec![0usize; n + 1];
        for &c in &self.col_indices {
            counts[c + 1] += 1;
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let mut next = counts.clone();
        let mut cols = vec![0; self.n_edges()];
        let mut vals = vec![0.0; self.n_edges()];
        for i in 0..n {
            for (j, v) in self.row(i) {
                cols[next[j]] = i;
                vals[next[j]] = v;
                next[j] += 1;
            }
        }
        SparseAdjacency {
            n_nodes: n,
            row_offsets: counts,
            col_indices: cols,
            values: vals,
        }
    }

    pub fn mul_vec(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(
            self.n_nodes,
            (0..self.n_nodes).map(|i| self.row(i).map(|(j, v)| v * x[j]).sum::<f64>()),
        )
    }

    /// `A * m` for a dense `m` with `N` rows.
    pub fn mul_dense(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(m.nrows(), self.n_nodes, "dimension mismatch in sparse product");
        let mut out = DMatrix::zeros(self.n_nodes, m.ncols());
        for c in 0..m.ncols() {
            let src = m.column(c);
            let mut dst = out.column_mut(c);
            for i in 0..self.n_nodes {
                let mut acc = 0.0;
                for k in self.row_offsets[i]..self.row_offsets[i + 1] {
                    acc += self.values[k] * src[self.col_indices[k]];
                }
                dst[i] = acc;
            }
        }
        out
    }

    /// `A k Aᵀ` for a symmetric dense `k`; the result is re-symmetrized.
    pub fn sandwich(&self, k: &DMatrix<f64>) -> DMatrix<f64> {
        let ak = self.mul_dense(k);
        let mut out = self.mul_dense(&ak.transpose());
        symmetrize(&mut out);
        out
    }
}

/// Replace `m` by `(m + mᵀ)/2` in place.
pub(crate) fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for j in 0..n {
        for i in (j + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// Binary symmetric adjacency from an undirected edge list.
///
/// Duplicate and reversed edges are merged; self-edges in the input are
/// dropped, and the diagonal is filled iff `add_self_loops` is set.
pub fn build_adjacency(
    edges: &[(usize, usize)],
    n_nodes: usize,
    add_self_loops: bool,
) -> Result<SparseAdjacency> {
    if n_nodes == 0 {
        return Err(Error::input("n_nodes must be positive"));
    }
    let mut pairs = Vec::with_capacity(2 * edges.len() + n_nodes);
    for &(u, v) in edges {
        if u >= n_nodes || v >= n_nodes {
            return Err(Error::input(format!(
                "edge ({u}, {v}) out of range for {n_nodes} nodes"
            )));
        }
        if u != v {
            pairs.push((u, v));
            pairs.push((v, u));
        }
    }
    if add_self_loops {
        pairs.extend((0..n_nodes).map(|i| (i, i)));
    }
    pairs.sort_unstable();
    pairs.dedup();

    let mut offsets = vec![0usize; n_nodes + 1];
    for &(u, _) in &pairs {
        offsets[u + 1] += 1;
    }
    for i in 0..n_nodes {
        offsets[i + 1] += offsets[i];
    }
    let cols = pairs.iter().map(|&(_, v)| v).collect::<Vec<_>>();
    let vals = vec![1.0; cols.len()];
    SparseAdjacency::from_csr(n_nodes, offsets, cols, vals)
}

fn add_identity_scaled<F>(a: &SparseAdjacency, scale: F) -> Result<SparseAdjacency>
where
    F: Fn(usize, usize, f64) -> f64,
{
    if a.has_self_loops() {
        return Err(Error::input(
            "normalization expects the raw adjacency without self-loops",
        ));
    }
    let n = a.n_nodes;
    let mut offsets = Vec::with_capacity(n + 1);
    let mut cols = Vec::with_capacity(a.n_edges() + n);
    let mut vals = Vec::with_capacity(a.n_edges() + n);
    offsets.push(0);
    for i in 0..n {
        let mut diag_done = false;
        for (j, v) in a.row(i) {
            if !diag_done && j > i {
                cols.push(i);
                vals.push(scale(i, i, 1.0));
                diag_done = true;
            }
            cols.push(j);
            vals.push(scale(i, j, v));
        }
        if !diag_done {
            cols.push(i);
            vals.push(scale(i, i, 1.0));
        }
        offsets.push(cols.len());
    }
    SparseAdjacency::from_csr(n, offsets, cols, vals)
}

/// `(I+D)^(-1/2) (I+Ā) (I+D)^(-1/2)` with `D = diag(Σⱼ Āᵢⱼ)`.
pub fn normalize_sym(a: &SparseAdjacency) -> Result<SparseAdjacency> {
    let shifted: Vec<f64> = a.degrees().iter().map(|d| 1.0 + d).collect();
    add_identity_scaled(a, |i, j, v| v / (shifted[i] * shifted[j]).sqrt())
}

/// `(I+D)^(-1) (I+Ā)`, the mean-aggregation operator.
pub fn normalize_row(a: &SparseAdjacency) -> Result<SparseAdjacency> {
    let inv: Vec<f64> = a.degrees().iter().map(|d| 1.0 / (1.0 + d)).collect();
    add_identity_scaled(a, |i, _, v| inv[i] * v)
}

/// Dominant eigenpair by power iteration from the all-ones vector.
pub fn spectral_radius(a: &SparseAdjacency, tol: f64, max_iter: usize) -> Result<SpectralInfo> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::input("tolerance must be positive"));
    }
    let n = a.n_nodes;
    let mut v = DVector::from_element(n, 1.0 / (n as f64).sqrt());
    let mut residual = f64::INFINITY;
    for it in 1..=max_iter {
        let av = a.mul_vec(&v);
        let lambda = v.dot(&av);
        residual = (&av - &v * lambda).norm();
        if residual <= tol * lambda.abs() {
            return Ok(SpectralInfo {
                lambda,
                v,
                iterations: it,
                residual,
            });
        }
        let norm = av.norm();
        if norm == 0.0 {
            return Err(Error::Precondition(
                "operator annihilates the start vector".into(),
            ));
        }
        v = av / norm;
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        residual,
    })
}

/// Read a whitespace-separated edge list; `#` lines and blank lines are skipped.
pub fn read_edge_list(path: &Path) -> Result<Vec<(usize, usize)>> {
    let text = fs::read_to_string(path)?;
    parse_edge_list(&text, path)
}

pub(crate) fn parse_edge_list(text: &str, path: &Path) -> Result<Vec<(usize, usize)>> {
    let mut edges = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: lineno + 1,
            message,
        };
        let mut it = line.split_whitespace();
        let (Some(u), Some(v), None) = (it.next(), it.next(), it.next()) else {
            return Err(parse_err(format!("expected two node ids, got {line:?}")));
        };
        let u = u.parse::<usize>().map_err(|e| parse_err(format!("{u:?}: {e}")))?;
        let v = v.parse::<usize>().map_err(|e| parse_err(format!("{v:?}: {e}")))?;
        edges.push((u, v));
    }
    Ok(edges)
}
