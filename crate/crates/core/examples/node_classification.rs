//! GP node classification on a synthetic homophilous graph, exact and low-rank.

use gnngp::config::{LandmarkSpec, PathKind, RunConfig};
use gnngp::harness::infer_dataset;
use gnngp::programs::Architecture;
use gnngp::synth::{planted_partition, PlantedPartition};

fn main() -> gnngp::Result<()> {
    let ds = planted_partition(&PlantedPartition { n_nodes: 600, ..Default::default() }, 11)?;
    for arch in [Architecture::Gcn, Architecture::Gcnii, Architecture::Gin, Architecture::Sage, Architecture::Mlp] {
        for path in [PathKind::Exact, PathKind::Lowrank] {
            let cfg = RunConfig {
                arch,
                path,
                layers: if arch == Architecture::Gcnii { 8 } else { 2 },
                landmarks: LandmarkSpec::Fraction(1.0),
                ..RunConfig::default()
            };
            let out = infer_dataset(&cfg, &ds)?;
            println!(
                "{:<6} {:<8} nugget={:<8} val={:.3} test={:.3}",
                arch.name(),
                path.name(),
                out.nugget,
                out.scores.val.unwrap_or(f64::NAN),
                out.scores.test.unwrap_or(f64::NAN)
            );
        }
    }
    Ok(())
}
