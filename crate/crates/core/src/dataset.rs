//! On-disk node datasets.
//!
//! A dataset directory holds:
//!
//! * `edges.txt`: edge list, see [`read_edge_list`](crate::graph::read_edge_list);
//! * `features.csv` (one node per line, comma-separated reals) or `features.bin`
//!   (two little-endian `u64` dimensions, then row-major little-endian `f64`);
//! * `targets.txt`: one target per line, optionally preceded by
//!   `# task=classification` or `# task=regression`. Without the header the
//!   targets are class labels when every line is a nonnegative integer;
//! * `splits.json`: `{"train": [...], "val": [...], "test": [...]}`.

use std::fs;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::gp::{SplitIndices, Targets};
use crate::graph::{build_adjacency, read_edge_list, SparseAdjacency};

pub const EDGES_FILE: &str = "edges.txt";
pub const FEATURES_CSV: &str = "features.csv";
pub const FEATURES_BIN: &str = "features.bin";
pub const TARGETS_FILE: &str = "targets.txt";
pub const SPLITS_FILE: &str = "splits.json";

/// Train/val/test proportions used when a dataset ships without splits.
pub const DEFAULT_SPLIT_RATIOS: (f64, f64, f64) = (0.48, 0.32, 0.20);

#[derive(Debug, Clone)]
pub struct Dataset {
    pub name: String,
    /// Binary symmetric adjacency without self-loops.
    pub graph: SparseAdjacency,
    pub features: DMatrix<f64>,
    pub targets: Targets,
    pub splits: SplitIndices,
}

impl Dataset {
    pub fn new(
        name: impl Into<String>,
        graph: SparseAdjacency,
        features: DMatrix<f64>,
        targets: Targets,
        splits: SplitIndices,
    ) -> Result<Self> {
        let ds = Self {
            name: name.into(),
            graph,
            features,
            targets,
            splits,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn n_nodes(&self) -> usize {
        self.graph.n_nodes()
    }

    /// Undirected edge count, self-loops excluded.
    pub fn n_undirected_edges(&self) -> usize {
        let loops = (0..self.n_nodes()).filter(|&i| self.graph.get(i, i) != 0.0).count();
        (self.graph.n_edges() - loops) / 2
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.graph.n_nodes();
        if self.features.nrows() != n {
            return Err(Error::input(format!(
                "features have {} rows but the graph has {n} nodes",
                self.features.nrows()
            )));
        }
        if self.targets.len() != n {
            return Err(Error::input(format!(
                "targets have {} entries but the graph has {n} nodes",
                self.targets.len()
            )));
        }
        self.splits.validate(n)
    }
}

fn with_path<T>(path: &Path, r: std::io::Result<T>) -> Result<T> {
    r.map_err(|e| Error::Io(e).context(path.display().to_string()))
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

pub fn read_features_csv(path: &Path) -> Result<DMatrix<f64>> {
    let text = with_path(path, fs::read_to_string(path))?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (lineno, line) in content_lines(&text) {
        let row = line
            .split(',')
            .map(|f| {
                f.trim()
                    .parse::<f64>()
                    .map_err(|e| parse_err(path, lineno, format!("bad value {f:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = rows.first() {
            if row.len() != first.len() {
                return Err(parse_err(
                    path,
                    lineno,
                    format!("expected {} columns, found {}", first.len(), row.len()),
                ));
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::input(format!("{} contains no feature rows", path.display())));
    }
    let d = rows[0].len();
    Ok(DMatrix::from_row_iterator(rows.len(), d, rows.into_iter().flatten()))
}

pub fn read_features_bin(path: &Path) -> Result<DMatrix<f64>> {
    let mut bytes = Vec::new();
    with_path(path, fs::File::open(path).and_then(|mut f| f.read_to_end(&mut bytes)))?;
    let word = |i: usize| -> [u8; 8] { bytes[8 * i..8 * i + 8].try_into().expect("8 bytes") };
    if bytes.len() < 16 {
        return Err(Error::input(format!("{} is shorter than its header", path.display())));
    }
    let rows = u64::from_le_bytes(word(0)) as usize;
    let cols = u64::from_le_bytes(word(1)) as usize;
    let expected = rows.checked_mul(cols).and_then(|c| c.checked_mul(8)).and_then(|c| c.checked_add(16));
    if expected != Some(bytes.len()) {
        return Err(Error::input(format!(
            "{}: header says {rows}x{cols} but file has {} bytes",
            path.display(),
            bytes.len()
        )));
    }
    Ok(DMatrix::from_row_iterator(
        rows,
        cols,
        (0..rows * cols).map(|i| f64::from_le_bytes(word(2 + i))),
    ))
}

pub fn write_features_bin(path: &Path, features: &DMatrix<f64>) -> Result<()> {
    let mut w = BufWriter::new(with_path(path, fs::File::create(path))?);
    let mut write = |b: &[u8]| with_path(path, w.write_all(b));
    write(&(features.nrows() as u64).to_le_bytes())?;
    write(&(features.ncols() as u64).to_le_bytes())?;
    for row in features.row_iter() {
        for v in row.iter() {
            write(&v.to_le_bytes())?;
        }
    }
    with_path(path, w.flush())
}

pub fn write_features_csv(path: &Path, features: &DMatrix<f64>) -> Result<()> {
    let mut w = BufWriter::new(with_path(path, fs::File::create(path))?);
    for row in features.row_iter() {
        let line: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        with_path(path, writeln!(w, "{}", line.join(",")))?;
    }
    with_path(path, w.flush())
}

pub fn read_targets(path: &Path) -> Result<Targets> {
    let text = with_path(path, fs::read_to_string(path))?;
    let mut declared = None;
    for line in text.lines().map(str::trim).filter(|l| l.starts_with('#')) {
        if let Some(task) = line.trim_start_matches('#').trim().strip_prefix("task=") {
            declared = Some(match task.trim() {
                "classification" => true,
                "regression" => false,
                other => return Err(Error::input(format!("unknown task {other:?} in {}", path.display()))),
            });
        }
    }
    let lines: Vec<(usize, &str)> = content_lines(&text).collect();
    let classification =
        declared.unwrap_or_else(|| lines.iter().all(|(_, l)| l.parse::<usize>().is_ok()));
    if classification {
        let labels = lines
            .iter()
            .map(|&(n, l)| l.parse::<usize>().map_err(|e| parse_err(path, n, format!("bad label {l:?}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        Targets::classes(labels)
    } else {
        let values = lines
            .iter()
            .map(|&(n, l)| l.parse::<f64>().map_err(|e| parse_err(path, n, format!("bad target {l:?}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        Targets::real(values)
    }
}

pub fn write_targets(path: &Path, targets: &Targets) -> Result<()> {
    let mut w = BufWriter::new(with_path(path, fs::File::create(path))?);
    let mut put = |s: String| with_path(path, writeln!(w, "{s}"));
    match targets {
        Targets::Classes { labels, .. } => {
            put("# task=classification".into())?;
            labels.iter().try_for_each(|l| put(l.to_string()))?;
        }
        Targets::Real(v) => {
            put("# task=regression".into())?;
            v.iter().try_for_each(|x| put(format!("{x}")))?;
        }
    }
    with_path(path, w.flush())
}

pub fn read_splits(path: &Path) -> Result<SplitIndices> {
    let text = with_path(path, fs::read_to_string(path))?;
    serde_json::from_str(&text).map_err(|e| parse_err(path, e.line(), e.to_string()))
}

pub fn write_splits(path: &Path, splits: &SplitIndices) -> Result<()> {
    let text = serde_json::to_string(splits).expect("index arrays serialize");
    with_path(path, fs::write(path, text + "\n"))
}

fn write_edges(path: &Path, graph: &SparseAdjacency) -> Result<()> {
    let mut w = BufWriter::new(with_path(path, fs::File::create(path))?);
    for i in 0..graph.n_nodes() {
        for (j, _) in graph.row(i) {
            if j > i {
                with_path(path, writeln!(w, "{i} {j}"))?;
            }
        }
    }
    with_path(path, w.flush())
}

/// Load and validate a dataset directory. The name is the directory name.
pub fn load_dataset(dir: &Path) -> Result<Dataset> {
    let features = if dir.join(FEATURES_BIN).exists() {
        read_features_bin(&dir.join(FEATURES_BIN))?
    } else {
        read_features_csv(&dir.join(FEATURES_CSV))?
    };
    let n = features.nrows();
    let edges = read_edge_list(&dir.join(EDGES_FILE))?;
    let graph = build_adjacency(&edges, n, false).map_err(|e| e.context(dir.join(EDGES_FILE).display().to_string()))?;
    let targets = read_targets(&dir.join(TARGETS_FILE))?;
    let splits = read_splits(&dir.join(SPLITS_FILE))?;
    let name = dir
        .file_name()
        .map_or_else(|| dir.display().to_string(), |s| s.to_string_lossy().into_owned());
    Dataset::new(name, graph, features, targets, splits).map_err(|e| e.context(dir.display().to_string()))
}

/// Write `ds` in the directory layout read by [`load_dataset`].
/// Features go to `features.bin` when `binary` is set.
pub fn save_dataset(ds: &Dataset, dir: &Path, binary: bool) -> Result<()> {
    with_path(dir, fs::create_dir_all(dir))?;
    write_edges(&dir.join(EDGES_FILE), &ds.graph)?;
    if binary {
        write_features_bin(&dir.join(FEATURES_BIN), &ds.features)?;
    } else {
        write_features_csv(&dir.join(FEATURES_CSV), &ds.features)?;
    }
    write_targets(&dir.join(TARGETS_FILE), &ds.targets)?;
    write_splits(&dir.join(SPLITS_FILE), &ds.splits)
}

/// Seeded random split with the given proportions; the test split takes the remainder.
pub fn make_splits(n: usize, ratios: (f64, f64, f64), seed: u64) -> Result<SplitIndices> {
    let (tr, va, te) = ratios;
    if [tr, va, te].iter().any(|r| !(0.0..=1.0).contains(r)) || tr + va + te > 1.0 + 1e-12 {
        return Err(Error::input(format!("invalid split ratios {tr}/{va}/{te}")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = (tr * n as f64).round() as usize;
    let n_val = ((va * n as f64).round() as usize).min(n - n_train);
    let n_test = ((te * n as f64).round() as usize).min(n - n_train - n_val);
    let mut take = |k: usize| {
        let mut part: Vec<usize> = order.drain(..k).collect();
        part.sort_unstable();
        part
    };
    let train = take(n_train);
    let val = take(n_val);
    let test = take(n_test);
    SplitIndices::new(train, val, test, n)
}
