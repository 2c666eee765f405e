//! Write a dataset directory, reload it, and run inference through the file-based harness.

use gnngp::config::{NuggetSpec, RunConfig};
use gnngp::dataset::{load_dataset, save_dataset};
use gnngp::harness::run_infer;
use gnngp::synth::{planted_partition, PlantedPartition};

fn main() -> gnngp::Result<()> {
    let dir = std::env::temp_dir().join("gnngp-dataset-files-example");
    std::fs::create_dir_all(&dir)?;
    let ds = planted_partition(&PlantedPartition { n_nodes: 200, ..Default::default() }, 3)?;
    save_dataset(&ds, &dir, false)?;
    let back = load_dataset(&dir)?;
    println!("reloaded {} nodes, {} edges, {} features", back.n_nodes(), back.n_undirected_edges(), back.features.ncols());

    let cfg = RunConfig {
        dataset: Some(dir.clone()),
        nugget: NuggetSpec::Fixed(0.1),
        ..RunConfig::default()
    };
    let report = run_infer(&cfg)?;
    println!("{}", report.masked().render().lines().take_while(|l| !l.starts_with("[predictions")).collect::<Vec<_>>().join("\n"));
    Ok(())
}
