//! Low-rank kernel build time grows linearly with graph size.

use gnngp::config::{PathKind, RunConfig};
use gnngp::harness::benchmark_points;

fn main() -> gnngp::Result<()> {
    let cfg = RunConfig {
        path: PathKind::Lowrank,
        sizes: vec![1000, 2000, 4000],
        repeats: 3,
        ..RunConfig::default()
    };
    for p in benchmark_points(&cfg)? {
        println!(
            "N={:>5} M={:>6} landmarks={} median build {:.4}s",
            p.n_nodes, p.n_edges, p.landmarks, p.median_build_s
        );
    }
    Ok(())
}
