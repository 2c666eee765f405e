//! Command drivers: each turns a [`RunConfig`] into a [`Report`].

use std::sync::Arc;
use std::time::Instant;

use nalgebra::DMatrix;

use crate::config::{BaseSpec, LandmarkPool, LandmarkSpec, NuggetSpec, PathKind, RunConfig};
use crate::dataset::{load_dataset, make_splits, read_targets, write_splits, Dataset, SPLITS_FILE, TARGETS_FILE};
use crate::error::{Error, Result};
use crate::gp::{classify_onehot, select_nugget, Prior, Targets};
use crate::graph::{normalize_row, normalize_sym, SparseAdjacency};
use crate::kernel::{base_inner, BaseKernel, DenseKernel, LandmarkSet, LowRankFactor, Operator};
use crate::limits::{depth_scan, mlp_fixed_point, trace_bound, LayerRecord, MAX_SCAN_NODES};
use crate::mc::{compare_covariance, sample_covariance, width_sweep, McConfig};
use crate::metrics::loglog_slope;
use crate::pca::fit_pca;
use crate::programs::{Architecture, Hyperparams, KernelProgram};
use crate::report::{fmt_f64, Report};
use crate::synth::{planted_partition, random_connected_graph, random_features, PlantedPartition};

/// Landmark count used by the benchmark unless a count is configured.
pub const BENCHMARK_LANDMARKS: usize = 128;

/// Nodes in the synthetic graph used when no dataset is given.
pub const DEFAULT_SYNTHETIC_NODES: usize = 8;

/// Graph operator for `arch`: row-normalized for GraphSAGE and GGP, symmetric otherwise.
pub fn operator_for(arch: Architecture, graph: &SparseAdjacency) -> Result<Operator> {
    let a = if arch.uses_row_normalization() {
        normalize_row(graph)?
    } else {
        normalize_sym(graph)?
    };
    Ok(Arc::new(a))
}

/// Centering and PCA as configured.
pub fn preprocess_features(cfg: &RunConfig, features: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    match cfg.pca {
        Some(dim) => Ok(fit_pca(features, dim, cfg.center)?.transform(features)),
        None if cfg.center => {
            let mut x = features.clone();
            for mut col in x.column_iter_mut() {
                let m = col.mean();
                col.add_scalar_mut(-m);
            }
            Ok(x)
        }
        None => Ok(features.clone()),
    }
}

/// A built prior on either path.
#[derive(Debug, Clone)]
pub enum BuiltKernel {
    Exact(DenseKernel),
    Lowrank {
        q: LowRankFactor,
        landmarks: LandmarkSet,
    },
}

impl BuiltKernel {
    pub fn prior(&self) -> &dyn Prior {
        match self {
            BuiltKernel::Exact(k) => k,
            BuiltKernel::Lowrank { q, .. } => q,
        }
    }

    pub fn rank(&self) -> Option<usize> {
        match self {
            BuiltKernel::Exact(_) => None,
            BuiltKernel::Lowrank { q, .. } => Some(q.rank()),
        }
    }
}

/// Landmarks drawn from the configured pool.
pub fn choose_landmarks(cfg: &RunConfig, ds: &Dataset) -> Result<LandmarkSet> {
    let all: Vec<usize>;
    let pool: &[usize] = match cfg.landmark_pool {
        LandmarkPool::Train => &ds.splits.train,
        LandmarkPool::All => {
            all = (0..ds.n_nodes()).collect();
            &all
        }
    };
    let count = cfg.landmark_count(pool.len())?;
    LandmarkSet::sample(pool, count, ds.n_nodes(), cfg.seed)
}

pub fn build_kernel(
    program: &KernelProgram,
    base: BaseKernel,
    features: &DMatrix<f64>,
    path: PathKind,
    landmarks: Option<&LandmarkSet>,
) -> Result<BuiltKernel> {
    match path {
        PathKind::Exact => Ok(BuiltKernel::Exact(program.final_exact(&base.evaluate(features)?)?)),
        PathKind::Lowrank => {
            let landmarks = landmarks
                .ok_or_else(|| Error::input("the low-rank path needs landmarks"))?
                .clone();
            let q0 = base.factor(features, &landmarks)?;
            let q = program.run_lowrank(&q0, &landmarks)?;
            Ok(BuiltKernel::Lowrank { q, landmarks })
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SplitScores {
    pub train: Option<f64>,
    pub val: Option<f64>,
    pub test: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct InferOutcome {
    pub report: Report,
    pub nugget: f64,
    /// Selected RBF `γ` when it was grid-searched.
    pub gamma: Option<f64>,
    pub scores: SplitScores,
    /// Posterior mean for every node, one column per output channel.
    pub mean: DMatrix<f64>,
}

#[derive(Debug, Default)]
struct Timing {
    kernel_build: f64,
    nugget_search: f64,
    solve: f64,
    predict: f64,
}

fn timed<T>(acc: &mut f64, f: impl FnOnce() -> Result<T>) -> Result<T> {
    let t = Instant::now();
    let out = f();
    *acc += t.elapsed().as_secs_f64();
    out
}

fn split_label(ds: &Dataset) -> Vec<&'static str> {
    let mut label = vec!["none"; ds.n_nodes()];
    for (name, idx) in [("train", &ds.splits.train), ("val", &ds.splits.val), ("test", &ds.splits.test)] {
        for &i in idx {
            label[i] = name;
        }
    }
    label
}

fn base_name(base: &BaseKernel) -> String {
    match base {
        BaseKernel::Inner => "inner".into(),
        BaseKernel::Rbf { gamma } => format!("rbf(gamma={})", fmt_f64(*gamma)),
        BaseKernel::Poly { c, degree } => format!("poly(c={},d={})", fmt_f64(*c), fmt_f64(*degree)),
    }
}

fn echo_config(report: &mut Report, command: &str, cfg: &RunConfig, hyper: &Hyperparams) {
    let mut run = report.values("run");
    run.put("command", command)
        .put("arch", cfg.arch)
        .put("path", cfg.path.name())
        .put("layers", cfg.layers)
        .num("sigma_b", hyper.sigma_b)
        .num("sigma_w", hyper.sigma_w);
    match cfg.arch {
        Architecture::Gcnii => {
            run.num("alpha", hyper.alpha).num("lambda", hyper.lambda);
        }
        Architecture::Sage => {
            run.num("sigma_w1", hyper.sigma_w1).num("sigma_w2", hyper.sigma_w2);
        }
        _ => {}
    }
    run.put("seed", cfg.seed);
}

/// `infer` on an in-memory dataset.
pub fn infer_dataset(cfg: &RunConfig, ds: &Dataset) -> Result<InferOutcome> {
    let total = Instant::now();
    let regression = !ds.targets.is_classification();
    let hyper = cfg.resolved_hyper(regression);
    let features = preprocess_features(cfg, &ds.features)?;
    let op = operator_for(cfg.arch, &ds.graph)?;
    let program = KernelProgram::build(cfg.arch, op, cfg.layers, &hyper)?;

    let landmarks = match cfg.path {
        PathKind::Exact => None,
        PathKind::Lowrank => {
            let lm = choose_landmarks(cfg, ds)?;
            if let Some(dim) = cfg.pca {
                if dim >= lm.len() {
                    return Err(Error::input(format!(
                        "PCA dimension {dim} must be smaller than the landmark count {}",
                        lm.len()
                    )));
                }
            }
            Some(lm)
        }
    };

    let bases: Vec<BaseKernel> = match &cfg.base {
        BaseSpec::Fixed(b) => vec![*b],
        BaseSpec::RbfGrid(g) => g.iter().map(|&gamma| BaseKernel::Rbf { gamma }).collect(),
    };
    let grid = match &cfg.nugget {
        NuggetSpec::Fixed(e) => vec![*e],
        NuggetSpec::Grid(g) => g.clone(),
    };

    let mut timing = Timing::default();
    let mut best: Option<(BuiltKernel, BaseKernel, f64, f64)> = None;
    let mut search_rows = Vec::new();
    let mut warnings = Vec::new();
    for base in &bases {
        let built = timed(&mut timing.kernel_build, || {
            build_kernel(&program, *base, &features, cfg.path, landmarks.as_ref())
        })?;
        let (nugget, score) = if grid.len() == 1 && bases.len() == 1 {
            (grid[0], f64::NAN)
        } else {
            let search = timed(&mut timing.nugget_search, || {
                select_nugget(built.prior(), &ds.splits, &ds.targets, &grid)
            })?;
            for (eps, s) in &search.scores {
                search_rows.push(vec![base_name(base), fmt_f64(*eps), fmt_f64(*s)]);
            }
            warnings.extend(search.warning.clone());
            let best_score = search
                .scores
                .iter()
                .find(|(e, _)| *e == search.nugget)
                .map_or(f64::NAN, |(_, s)| *s);
            (search.nugget, best_score)
        };
        let better = match &best {
            None => true,
            Some((_, _, _, s)) => score > *s || (s.is_nan() && !score.is_nan()),
        };
        if better {
            best = Some((built, *base, nugget, score));
        }
    }
    let (built, base, nugget, _) = best.expect("at least one base kernel");

    let n = ds.n_nodes();
    let all: Vec<usize> = (0..n).collect();
    let y = ds.targets.matrix(&ds.splits.train);
    let mean = timed(&mut timing.solve, || built.prior().mean(&ds.splits.train, &all, &y, nugget))?;
    let variance = if cfg.variance {
        Some(timed(&mut timing.solve, || built.prior().variance(&ds.splits.train, &all, nugget))?)
    } else {
        None
    };

    let (scores, predicted) = timed(&mut timing.predict, || {
        let score = |idx: &[usize]| -> Result<Option<f64>> {
            if idx.is_empty() {
                return Ok(None);
            }
            ds.targets.score(&mean.select_rows(idx), idx).map(Some)
        };
        let scores = SplitScores {
            train: score(&ds.splits.train)?,
            val: score(&ds.splits.val)?,
            test: score(&ds.splits.test)?,
        };
        let predicted: Vec<String> = match &ds.targets {
            Targets::Classes { .. } => classify_onehot(&mean)?.iter().map(|c| c.to_string()).collect(),
            Targets::Real(_) => mean.column(0).iter().map(|v| fmt_f64(*v)).collect(),
        };
        Ok((scores, predicted))
    })?;

    let mut report = Report::new();
    echo_config(&mut report, "infer", cfg, &hyper);
    report
        .values("dataset")
        .put("name", &ds.name)
        .put("n_nodes", n)
        .put("n_edges", ds.n_undirected_edges())
        .put("n_features", features.ncols())
        .put("task", if regression { "regression" } else { "classification" })
        .put("n_train", ds.splits.train.len())
        .put("n_val", ds.splits.val.len())
        .put("n_test", ds.splits.test.len());
    let mut kernel = report.values("kernel");
    kernel.put("base", base_name(&base));
    if let Some(lm) = &landmarks {
        kernel.put("landmarks", lm.len());
    }
    if let Some(r) = built.rank() {
        kernel.put("rank", r);
    }
    report.values("nugget").num("selected", nugget).put("grid_points", grid.len());
    for w in &warnings {
        report.values("nugget").put("warning", w);
    }
    let metric = ds.targets.metric_name();
    let mut m = report.values("metrics");
    m.put("metric", metric);
    for (name, v) in [("train", scores.train), ("val", scores.val), ("test", scores.test)] {
        if let Some(v) = v {
            m.num(name, v);
        }
    }
    report
        .values("timing")
        .num("kernel_build_s", timing.kernel_build)
        .num("nugget_search_s", timing.nugget_search)
        .num("solve_s", timing.solve)
        .num("predict_s", timing.predict)
        .num("total_s", total.elapsed().as_secs_f64());
    if !search_rows.is_empty() {
        report.table("nugget_search", &["base", "nugget", "val_score"], search_rows);
    }
    let labels = split_label(ds);
    let rows = (0..n)
        .map(|i| {
            let mut row = vec![i.to_string(), labels[i].to_string(), predicted[i].clone()];
            if let Some(v) = &variance {
                row.push(fmt_f64(v[i].max(0.0)));
            }
            row
        })
        .collect();
    let header: &[&str] = if variance.is_some() {
        &["node", "split", "prediction", "variance"]
    } else {
        &["node", "split", "prediction"]
    };
    report.table("predictions", header, rows);

    Ok(InferOutcome {
        report,
        nugget,
        gamma: match (&cfg.base, base) {
            (BaseSpec::RbfGrid(_), BaseKernel::Rbf { gamma }) => Some(gamma),
            _ => None,
        },
        scores,
        mean,
    })
}

fn require_dataset(cfg: &RunConfig) -> Result<Dataset> {
    let dir = cfg
        .dataset
        .as_ref()
        .ok_or_else(|| Error::input("--dataset is required"))?;
    load_dataset(dir)
}

fn fixed_base(cfg: &RunConfig) -> Result<BaseKernel> {
    match &cfg.base {
        BaseSpec::Fixed(b) => Ok(*b),
        BaseSpec::RbfGrid(_) => Err(Error::input("this command needs a fixed gamma for the rbf base kernel")),
    }
}

fn emit(cfg: &RunConfig, report: Report) -> Result<Report> {
    if let Some(out) = &cfg.out {
        report.write(out)?;
    }
    Ok(report)
}

pub fn run_infer(cfg: &RunConfig) -> Result<Report> {
    let ds = require_dataset(cfg)?;
    let outcome = infer_dataset(cfg, &ds).map_err(|e| e.context("infer"))?;
    emit(cfg, outcome.report)
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, fmt_f64)
}

fn record_row(r: &LayerRecord) -> Vec<String> {
    vec![
        r.l.to_string(),
        fmt_f64(r.rho_min),
        fmt_f64(r.trace),
        fmt_f64(r.top2_singular_ratio),
        opt(r.scaled_gap),
        opt(r.perron_angle),
        opt(r.cauchy_gap),
    ]
}

const RECORD_HEADER: [&str; 7] = [
    "l",
    "rho_min",
    "trace",
    "top2_singular_ratio",
    "scaled_gap",
    "perron_angle",
    "cauchy_gap",
];

fn scan_dataset(cfg: &RunConfig) -> Result<Dataset> {
    match (&cfg.dataset, cfg.synthetic) {
        (Some(_), _) => require_dataset(cfg),
        (None, n) => planted_partition(
            &PlantedPartition {
                n_nodes: n.unwrap_or(DEFAULT_SYNTHETIC_NODES),
                n_features: cfg.features,
                connected: true,
                split_ratios: (0.1, 0.3, 0.6),
                ..Default::default()
            },
            cfg.seed,
        ),
    }
}

/// Per-layer limit diagnostics, plus per-depth accuracy when `eval` is set.
pub fn run_depth_scan(cfg: &RunConfig) -> Result<Report> {
    let ds = scan_dataset(cfg)?;
    let regression = !ds.targets.is_classification();
    let hyper = cfg.resolved_hyper(regression);
    let features = preprocess_features(cfg, &ds.features)?;
    let base = fixed_base(cfg)?;
    let mut report = Report::new();
    echo_config(&mut report, "depth-scan", cfg, &hyper);
    report
        .values("dataset")
        .put("name", &ds.name)
        .put("n_nodes", ds.n_nodes())
        .put("n_edges", ds.n_undirected_edges());

    let stats = !cfg.eval || ds.n_nodes() <= MAX_SCAN_NODES;
    if stats {
        let k0 = base.evaluate(&features)?;
        if cfg.arch == Architecture::Mlp {
            let lim = mlp_fixed_point(hyper.sigma_b, hyper.sigma_w, &k0, cfg.layers)?;
            let mut s = report.values("limit");
            match &lim.regime {
                crate::limits::MlpRegime::Bounded { q } => {
                    s.put("regime", "bounded").num("q", *q);
                }
                crate::limits::MlpRegime::Exploding { .. } => {
                    s.put("regime", "exploding");
                }
            }
            s.num("final_deviation", lim.final_deviation());
            let mut header = RECORD_HEADER.to_vec();
            header.extend(["deviation", "diagonal_deviation"]);
            let rows = lim
                .trace
                .records
                .iter()
                .enumerate()
                .map(|(i, r)| {
                    let mut row = record_row(r);
                    row.push(fmt_f64(lim.deviation[i]));
                    row.push(fmt_f64(lim.diagonal_deviation[i]));
                    row
                })
                .collect();
            report.table("layers", &header, rows);
        } else {
            let op = operator_for(cfg.arch, &ds.graph)?;
            let program = KernelProgram::build(cfg.arch, op.clone(), cfg.layers, &hyper)?;
            let trace = depth_scan(&program, &op, &k0)?;
            let (delta, bound) = trace_bound(ds.n_nodes(), hyper.sigma_b, hyper.sigma_w, trace.lambda);
            let mut s = report.values("limit");
            s.num("lambda", trace.lambda).num("delta", delta);
            if let Some(b) = bound {
                s.num("trace_bound", b);
            }
            report.table("layers", &RECORD_HEADER, trace.records.iter().map(record_row).collect());
        }
    } else {
        report
            .values("limit")
            .put("skipped", format!("diagnostics need at most {MAX_SCAN_NODES} nodes"));
    }

    if cfg.eval {
        let mut rows = Vec::new();
        for depth in 1..=cfg.layers {
            let sub = RunConfig {
                layers: depth,
                sigma_b: Some(hyper.sigma_b),
                ..cfg.clone()
            };
            let out = infer_dataset(&sub, &ds)?;
            rows.push(vec![
                depth.to_string(),
                opt(out.scores.val),
                opt(out.scores.test),
                fmt_f64(out.nugget),
            ]);
        }
        report.table("depth_eval", &["layers", "val_score", "test_score", "nugget"], rows);
    }
    emit(cfg, report)
}

fn mc_inputs(cfg: &RunConfig) -> Result<(SparseAdjacency, DMatrix<f64>, String)> {
    match &cfg.dataset {
        Some(_) => {
            let ds = require_dataset(cfg)?;
            let x = preprocess_features(cfg, &ds.features)?;
            Ok((ds.graph, x, ds.name))
        }
        None => {
            let n = cfg.synthetic.unwrap_or(DEFAULT_SYNTHETIC_NODES);
            let g = random_connected_graph(n, n, cfg.seed)?;
            let x = random_features(n, cfg.features, cfg.seed.wrapping_add(1));
            Ok((g, x, format!("random-{n}")))
        }
    }
}

/// Compare finite-width networks with the analytic kernel.
pub fn run_mc_verify(cfg: &RunConfig) -> Result<Report> {
    if fixed_base(cfg)? != BaseKernel::Inner {
        return Err(Error::input("mc-verify uses the inner-product input kernel"));
    }
    let (graph, x, name) = mc_inputs(cfg)?;
    let hyper = cfg.resolved_hyper(false);
    let op = operator_for(cfg.arch, &graph)?;
    let program = KernelProgram::build(cfg.arch, op.clone(), cfg.layers, &hyper)?;
    let analytic = program.final_exact(&base_inner(&x)?)?;
    let mc = McConfig {
        sampling: cfg.sampling,
        ..McConfig::new(cfg.arch, cfg.layers, cfg.width, cfg.samples, cfg.seed).with_hyper(hyper.clone())
    };
    let t = Instant::now();
    let est = sample_covariance(&mc, &op, &x)?;
    let error = compare_covariance(&est.kernel, &analytic)?;
    let elapsed = t.elapsed().as_secs_f64();

    let mut max_z: f64 = 0.0;
    if let Some(first) = est.coordinates.first() {
        for c in &est.coordinates[1..] {
            let diff = &c.mean - &first.mean;
            let se = (c.stderr.component_mul(&c.stderr) + first.stderr.component_mul(&first.stderr)).map(f64::sqrt);
            for (d, s) in diff.iter().zip(se.iter()) {
                if *s > 0.0 {
                    max_z = max_z.max(d.abs() / s);
                }
            }
        }
    }

    let mut report = Report::new();
    echo_config(&mut report, "mc-verify", cfg, &hyper);
    report
        .values("dataset")
        .put("name", name)
        .put("n_nodes", graph.n_nodes())
        .put("n_features", x.ncols());
    report
        .values("mc")
        .put("width", cfg.width)
        .put("samples", cfg.samples)
        .num("relative_error", error)
        .num("max_coordinate_z", max_z)
        .num("sampling_s", elapsed);

    if !cfg.widths.is_empty() {
        let seeds: Vec<u64> = (0..cfg.mc_seeds as u64).map(|s| cfg.seed.wrapping_add(s)).collect();
        let sweep = width_sweep(&mc, &cfg.widths, &seeds, &op, &x, &analytic)?;
        let decreasing = sweep.windows(2).all(|w| w[1].1 < w[0].1);
        let slope = if sweep.len() >= 2 {
            let (w, e): (Vec<f64>, Vec<f64>) = sweep.iter().map(|(w, e)| (*w as f64, *e)).unzip();
            loglog_slope(&w, &e).ok()
        } else {
            None
        };
        let mut s = report.values("width_sweep");
        s.put("seeds", seeds.len()).put("strictly_decreasing", decreasing);
        if let Some(sl) = slope {
            s.num("loglog_slope", sl);
        }
        report.table(
            "width_sweep",
            &["width", "mean_relative_error"],
            sweep.iter().map(|(w, e)| vec![w.to_string(), fmt_f64(*e)]).collect(),
        );
    }
    emit(cfg, report)
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// One benchmark point.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchPoint {
    pub n_nodes: usize,
    pub n_edges: usize,
    pub landmarks: usize,
    pub rank: Option<usize>,
    pub median_build_s: f64,
}

/// Kernel-build timing over synthetic graphs of increasing size.
pub fn benchmark_points(cfg: &RunConfig) -> Result<Vec<BenchPoint>> {
    let hyper = cfg.resolved_hyper(false);
    let base = fixed_base(cfg)?;
    cfg.sizes
        .iter()
        .map(|&n| {
            let ds = planted_partition(
                &PlantedPartition {
                    n_nodes: n,
                    n_features: cfg.features,
                    avg_degree: cfg.degree,
                    ..Default::default()
                },
                cfg.seed,
            )?;
            let features = preprocess_features(cfg, &ds.features)?;
            let op = operator_for(cfg.arch, &ds.graph)?;
            let program = KernelProgram::build(cfg.arch, op, cfg.layers, &hyper)?;
            let n_landmarks = match cfg.landmarks {
                LandmarkSpec::Count(k) => k,
                LandmarkSpec::Fraction(_) => BENCHMARK_LANDMARKS,
            }
            .min(n);
            let pool: Vec<usize> = (0..n).collect();
            let landmarks = LandmarkSet::sample(&pool, n_landmarks, n, cfg.seed)?;
            let mut times = Vec::with_capacity(cfg.repeats);
            let mut rank = None;
            for _ in 0..cfg.repeats {
                let t = Instant::now();
                let built = build_kernel(&program, base, &features, cfg.path, Some(&landmarks))?;
                times.push(t.elapsed().as_secs_f64());
                rank = built.rank();
            }
            Ok(BenchPoint {
                n_nodes: n,
                n_edges: ds.n_undirected_edges(),
                landmarks: n_landmarks,
                rank,
                median_build_s: median(times),
            })
        })
        .collect()
}

pub fn run_benchmark(cfg: &RunConfig) -> Result<Report> {
    let points = benchmark_points(cfg)?;
    let mut report = Report::new();
    echo_config(&mut report, "benchmark", cfg, &cfg.resolved_hyper(false));
    let sizes: Vec<f64> = points.iter().map(|p| p.n_nodes as f64).collect();
    let work: Vec<f64> = points.iter().map(|p| (p.n_nodes + 2 * p.n_edges) as f64).collect();
    let times: Vec<f64> = points.iter().map(|p| p.median_build_s).collect();
    let mut s = report.values("benchmark");
    s.put("repeats", cfg.repeats).put("features", cfg.features);
    if points.len() >= 2 {
        s.num("slope_vs_nodes", loglog_slope(&sizes, &times)?)
            .num("slope_vs_edges_plus_nodes", loglog_slope(&work, &times)?);
    }
    report.table(
        "points",
        &["n_nodes", "n_edges", "landmarks", "rank", "median_build_s"],
        points
            .iter()
            .map(|p| {
                vec![
                    p.n_nodes.to_string(),
                    p.n_edges.to_string(),
                    p.landmarks.to_string(),
                    p.rank.map_or_else(String::new, |r| r.to_string()),
                    fmt_f64(p.median_build_s),
                ]
            })
            .collect(),
    );
    emit(cfg, report)
}

/// Write `splits.json` for a dataset directory from the configured ratios.
///
/// The node count comes from `targets.txt`; the file goes to `--out` or into
/// the dataset directory.
pub fn run_make_splits(cfg: &RunConfig) -> Result<Report> {
    let dir = cfg
        .dataset
        .as_ref()
        .ok_or_else(|| Error::input("--dataset is required"))?;
    let n = read_targets(&dir.join(TARGETS_FILE))?.len();
    let splits = make_splits(n, cfg.ratios, cfg.seed)?;
    let path = cfg.out.clone().unwrap_or_else(|| dir.join(SPLITS_FILE));
    write_splits(&path, &splits)?;
    let mut report = Report::new();
    report
        .values("splits")
        .put("path", path.display())
        .put("n_nodes", n)
        .put("seed", cfg.seed)
        .put("n_train", splits.train.len())
        .put("n_val", splits.val.len())
        .put("n_test", splits.test.len());
    Ok(report)
}
