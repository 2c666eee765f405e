//! Citation-graph node classification with the settings used for small datasets:
//! σ_b = 0, σ_w = 1, two layers, inner-product input kernel, nugget grid.
//!
//! Convert the Planetoid files first (see `scripts/planetoid_to_gnngp.py`), then
//!
//! ```text
//! cargo run --release --example cora -- data/cora
//! ```

use std::path::PathBuf;
use std::time::Instant;

use gnngp::config::{default_gamma_grid, BaseSpec, LandmarkSpec, PathKind, RunConfig};
use gnngp::dataset::load_dataset;
use gnngp::harness::infer_dataset;
use gnngp::programs::Architecture;

fn main() -> gnngp::Result<()> {
    let dir = std::env::args_os()
        .nth(1)
        .or_else(|| std::env::var_os("GNNGP_CORA_DIR"))
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("data/cora"));
    let ds = load_dataset(&dir)?;
    println!(
        "{}: {} nodes, {} edges, {} features",
        ds.name,
        ds.n_nodes(),
        ds.n_undirected_edges(),
        ds.features.ncols()
    );

    let runs = [
        ("GCN GP", RunConfig::default()),
        (
            "GCN GP low-rank",
            RunConfig {
                path: PathKind::Lowrank,
                landmarks: LandmarkSpec::Fraction(1.0),
                pca: Some(100.min(ds.features.ncols())),
                ..RunConfig::default()
            },
        ),
        ("GCNII GP", RunConfig { arch: Architecture::Gcnii, layers: 8, ..RunConfig::default() }),
        ("GIN GP", RunConfig { arch: Architecture::Gin, ..RunConfig::default() }),
        ("SAGE GP", RunConfig { arch: Architecture::Sage, ..RunConfig::default() }),
        ("GGP", RunConfig { arch: Architecture::Ggp, ..RunConfig::default() }),
        (
            "RBF",
            RunConfig {
                arch: Architecture::Rbf,
                base: BaseSpec::RbfGrid(default_gamma_grid()),
                ..RunConfig::default()
            },
        ),
    ];
    for (name, cfg) in runs {
        let t = Instant::now();
        let out = infer_dataset(&cfg, &ds)?;
        println!(
            "{name:<16} test Micro-F1 {:.4}  nugget {:.3e}  {:.1}s",
            out.scores.test.unwrap_or(f64::NAN),
            out.nugget,
            t.elapsed().as_secs_f64()
        );
    }
    Ok(())
}
