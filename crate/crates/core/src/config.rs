//! Run configuration.
//!
//! Settings come from a flat `key = value` file with optional `[command]`
//! sections, then from command-line flags of the same name. Keys before the
//! first section apply to every command; a section applies to its command only.
//! Later sources override earlier ones.
//!
//! ```text
//! # shared
//! seed = 7
//! [infer]
//! arch = gcn
//! nugget-grid = 1e-3,1e1,13
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::dataset::DEFAULT_SPLIT_RATIOS;
use crate::error::{Error, Result};
use crate::gp::{default_nugget_grid, log_grid};
use crate::kernel::BaseKernel;
use crate::mc::Sampling;
use crate::programs::{Architecture, Hyperparams};

/// Every recognized key.
pub const KEYS: &[&str] = &[
    "dataset",
    "arch",
    "path",
    "layers",
    "sigma-b",
    "sigma-w",
    "alpha",
    "lambda",
    "sigma-w1",
    "sigma-w2",
    "base",
    "gamma",
    "gamma-grid",
    "poly-c",
    "poly-degree",
    "landmarks",
    "landmark-frac",
    "landmark-pool",
    "seed",
    "nugget",
    "nugget-grid",
    "pca",
    "center",
    "variance",
    "out",
    "width",
    "widths",
    "samples",
    "mc-seeds",
    "sampling",
    "synthetic",
    "features",
    "eval",
    "sizes",
    "repeats",
    "degree",
    "ratios",
];

/// Pairs of keys where setting one clears the other.
const EXCLUSIVE: &[(&str, &str)] = &[("landmarks", "landmark-frac"), ("nugget", "nugget-grid")];

/// Raw settings for one command.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings(BTreeMap<String, String>);

impl Settings {
    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<()> {
        if !KEYS.contains(&key) {
            return Err(Error::input(format!("unknown setting {key:?}")));
        }
        for &(a, b) in EXCLUSIVE {
            if key == a {
                self.0.remove(b);
            } else if key == b {
                self.0.remove(a);
            }
        }
        self.0.insert(key.to_string(), value.into());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.0.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    fn parse<T: FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| Error::input(format!("invalid value {v:?} for {key}: {e}")))
            })
            .transpose()
    }

    fn flag(&self, key: &str) -> Result<bool> {
        match self.get(key) {
            None => Ok(false),
            Some("true" | "1" | "yes" | "on" | "") => Ok(true),
            Some("false" | "0" | "no" | "off") => Ok(false),
            Some(v) => Err(Error::input(format!("invalid boolean {v:?} for {key}"))),
        }
    }

    fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key)
            .map(|v| {
                v.split(',')
                    .map(|s| {
                        s.trim()
                            .parse::<T>()
                            .map_err(|e| Error::input(format!("invalid list entry {s:?} for {key}: {e}")))
                    })
                    .collect()
            })
            .transpose()
    }

    fn grid(&self, key: &str) -> Result<Option<Vec<f64>>> {
        let Some(parts) = self.list::<String>(key)? else {
            return Ok(None);
        };
        let [lo, hi, points] = parts.as_slice() else {
            return Err(Error::input(format!("{key} expects LO,HI,POINTS")));
        };
        let num = |s: &str| {
            s.parse::<f64>()
                .map_err(|e| Error::input(format!("invalid {key} bound {s:?}: {e}")))
        };
        let points = points
            .parse::<usize>()
            .map_err(|e| Error::input(format!("invalid {key} point count: {e}")))?;
        log_grid(num(lo)?, num(hi)?, points).map(Some)
    }
}

/// Parse a configuration file's text into the settings for `command`.
pub fn parse_config(text: &str, command: &str, path: &Path) -> Result<Settings> {
    let mut settings = Settings::default();
    let mut section: Option<String> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
            continue;
        }
        let err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        };
        if let Some(name) = line.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| err(format!("unterminated section header {line:?}")))?;
            section = Some(name.trim().to_string());
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err(format!("expected key = value, found {line:?}")))?;
        if section.as_deref().is_none_or(|s| s == command) {
            settings
                .set(key.trim(), value.trim())
                .map_err(|e| err(e.to_string()))?;
        }
    }
    Ok(settings)
}

pub fn read_config(path: &Path, command: &str) -> Result<Settings> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(e).context(path.display().to_string()))?;
    parse_config(&text, command, path)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathKind {
    Exact,
    Lowrank,
}

impl FromStr for PathKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(PathKind::Exact),
            "lowrank" => Ok(PathKind::Lowrank),
            _ => Err(Error::input(format!("path must be exact or lowrank, got {s:?}"))),
        }
    }
}

impl PathKind {
    pub fn name(self) -> &'static str {
        match self {
            PathKind::Exact => "exact",
            PathKind::Lowrank => "lowrank",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LandmarkSpec {
    Count(usize),
    /// Fraction of the landmark pool.
    Fraction(f64),
}

/// Nodes eligible as landmarks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LandmarkPool {
    Train,
    All,
}

#[derive(Debug, Clone, PartialEq)]
pub enum NuggetSpec {
    Fixed(f64),
    Grid(Vec<f64>),
}

/// Base-kernel family; RBF without a fixed `gamma` is grid-searched.
#[derive(Debug, Clone, PartialEq)]
pub enum BaseSpec {
    Fixed(BaseKernel),
    RbfGrid(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub dataset: Option<PathBuf>,
    pub arch: Architecture,
    pub path: PathKind,
    pub layers: usize,
    /// `None` means 0 for classification and `√0.1` for regression.
    pub sigma_b: Option<f64>,
    pub hyper: Hyperparams,
    pub base: BaseSpec,
    pub landmarks: LandmarkSpec,
    pub landmark_pool: LandmarkPool,
    pub seed: u64,
    pub nugget: NuggetSpec,
    pub pca: Option<usize>,
    pub center: bool,
    pub variance: bool,
    pub out: Option<PathBuf>,
    pub width: usize,
    pub widths: Vec<usize>,
    pub samples: usize,
    pub mc_seeds: usize,
    pub sampling: Sampling,
    pub synthetic: Option<usize>,
    pub features: usize,
    pub eval: bool,
    pub sizes: Vec<usize>,
    pub repeats: usize,
    pub degree: f64,
    pub ratios: (f64, f64, f64),
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dataset: None,
            arch: Architecture::Gcn,
            path: PathKind::Exact,
            layers: 2,
            sigma_b: None,
            hyper: Hyperparams::default(),
            base: BaseSpec::Fixed(BaseKernel::Inner),
            landmarks: LandmarkSpec::Fraction(1.0),
            landmark_pool: LandmarkPool::Train,
            seed: 0,
            nugget: NuggetSpec::Grid(default_nugget_grid()),
            pca: None,
            center: false,
            variance: false,
            out: None,
            width: 4096,
            widths: Vec::new(),
            samples: 200,
            mc_seeds: 5,
            sampling: Sampling::Auto,
            synthetic: None,
            features: 8,
            eval: false,
            sizes: vec![1000, 2000, 4000, 8000],
            repeats: 3,
            degree: 5.0,
            ratios: DEFAULT_SPLIT_RATIOS,
        }
    }
}

/// Default `γ` grid for the RBF base kernel: 5 points over `[1e-2, 1e2]`.
pub fn default_gamma_grid() -> Vec<f64> {
    log_grid(1e-2, 1e2, 5).expect("static grid")
}

impl RunConfig {
    pub fn from_settings(s: &Settings) -> Result<Self> {
        let mut c = RunConfig {
            dataset: s.get("dataset").map(PathBuf::from),
            ..RunConfig::default()
        };
        if let Some(arch) = s.parse::<Architecture>("arch")? {
            c.arch = arch;
        }
        if let Some(p) = s.parse("path")? {
            c.path = p;
        }
        if let Some(l) = s.parse("layers")? {
            c.layers = l;
        }
        c.sigma_b = s.parse("sigma-b")?;
        let h = &mut c.hyper;
        for (key, slot) in [
            ("sigma-w", &mut h.sigma_w),
            ("alpha", &mut h.alpha),
            ("lambda", &mut h.lambda),
            ("sigma-w1", &mut h.sigma_w1),
            ("sigma-w2", &mut h.sigma_w2),
        ] {
            if let Some(v) = s.parse::<f64>(key)? {
                *slot = v;
            }
        }
        c.base = match s.get("base") {
            None => match c.arch {
                Architecture::Rbf => rbf_spec(s)?,
                arch => BaseSpec::Fixed(arch.default_base()),
            },
            Some("inner") => BaseSpec::Fixed(BaseKernel::Inner),
            Some("rbf") => rbf_spec(s)?,
            Some("poly") => BaseSpec::Fixed(BaseKernel::Poly {
                c: s.parse("poly-c")?.unwrap_or(BaseKernel::GGP_C),
                degree: s.parse("poly-degree")?.unwrap_or(BaseKernel::GGP_DEGREE),
            }),
            Some(other) => return Err(Error::input(format!("unknown base kernel {other:?}"))),
        };
        if let Some(k) = s.parse::<usize>("landmarks")? {
            c.landmarks = LandmarkSpec::Count(k);
        }
        if let Some(f) = s.parse::<f64>("landmark-frac")? {
            c.landmarks = LandmarkSpec::Fraction(f);
        }
        c.landmark_pool = match s.get("landmark-pool") {
            None | Some("train") => LandmarkPool::Train,
            Some("all") => LandmarkPool::All,
            Some(v) => return Err(Error::input(format!("landmark-pool must be train or all, got {v:?}"))),
        };
        if let Some(seed) = s.parse("seed")? {
            c.seed = seed;
        }
        if let Some(e) = s.parse::<f64>("nugget")? {
            c.nugget = NuggetSpec::Fixed(e);
        }
        if let Some(g) = s.grid("nugget-grid")? {
            c.nugget = NuggetSpec::Grid(g);
        }
        c.pca = s.parse("pca")?;
        c.center = s.flag("center")?;
        c.variance = s.flag("variance")?;
        c.out = s.get("out").map(PathBuf::from);
        if let Some(w) = s.parse("width")? {
            c.width = w;
        }
        if let Some(w) = s.list("widths")? {
            c.widths = w;
        }
        if let Some(v) = s.parse("samples")? {
            c.samples = v;
        }
        if let Some(v) = s.parse("mc-seeds")? {
            c.mc_seeds = v;
        }
        c.sampling = match s.get("sampling") {
            None | Some("auto") => Sampling::Auto,
            Some("explicit") => Sampling::Explicit,
            Some("gram") => Sampling::Gram,
            Some(v) => return Err(Error::input(format!("sampling must be auto, explicit or gram, got {v:?}"))),
        };
        c.synthetic = s.parse("synthetic")?;
        if let Some(v) = s.parse("features")? {
            c.features = v;
        }
        c.eval = s.flag("eval")?;
        if let Some(v) = s.list("sizes")? {
            c.sizes = v;
        }
        if let Some(v) = s.parse("repeats")? {
            c.repeats = v;
        }
        if let Some(v) = s.parse("degree")? {
            c.degree = v;
        }
        if let Some(r) = s.list::<f64>("ratios")? {
            let [a, b, t] = r.as_slice() else {
                return Err(Error::input("ratios expects TRAIN,VAL,TEST"));
            };
            c.ratios = (*a, *b, *t);
        }
        c.validate()?;
        Ok(c)
    }

    fn validate(&self) -> Result<()> {
        if self.layers == 0 {
            return Err(Error::input("layers must be at least 1"));
        }
        match self.landmarks {
            LandmarkSpec::Count(0) => return Err(Error::input("landmarks must be at least 1")),
            LandmarkSpec::Fraction(f) if !(f > 0.0 && f <= 1.0) => {
                return Err(Error::input(format!("landmark-frac must lie in (0, 1], got {f}")))
            }
            _ => {}
        }
        if let NuggetSpec::Fixed(e) = self.nugget {
            if !(e > 0.0 && e.is_finite()) {
                return Err(Error::input(format!("nugget must be positive, got {e}")));
            }
        }
        if self.pca == Some(0) {
            return Err(Error::input("pca dimension must be at least 1"));
        }
        if self.repeats == 0 || self.samples < 2 || self.width == 0 || self.mc_seeds == 0 {
            return Err(Error::input("repeats, width and mc-seeds must be positive and samples at least 2"));
        }
        Ok(())
    }

    /// Hyperparameters with the bias default resolved for the task.
    pub fn resolved_hyper(&self, regression: bool) -> Hyperparams {
        let default_b = if regression { Hyperparams::regression().sigma_b } else { 0.0 };
        Hyperparams {
            sigma_b: self.sigma_b.unwrap_or(default_b),
            ..self.hyper.clone()
        }
    }

    /// Landmark count for a pool of `pool` nodes.
    pub fn landmark_count(&self, pool: usize) -> Result<usize> {
        let k = match self.landmarks {
            LandmarkSpec::Count(k) => k,
            LandmarkSpec::Fraction(f) => ((f * pool as f64).round() as usize).max(1),
        };
        if k > pool {
            return Err(Error::input(format!(
                "{k} landmarks requested but the pool has {pool} nodes"
            )));
        }
        Ok(k)
    }
}

fn rbf_spec(s: &Settings) -> Result<BaseSpec> {
    if let Some(gamma) = s.parse::<f64>("gamma")? {
        return Ok(BaseSpec::Fixed(BaseKernel::Rbf { gamma }));
    }
    Ok(BaseSpec::RbfGrid(s.grid("gamma-grid")?.unwrap_or_else(default_gamma_grid)))
}
