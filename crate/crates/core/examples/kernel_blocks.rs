//! Compose kernel blocks by hand and compare the exact and Nyström results.

use std::sync::Arc;

use gnngp::graph::normalize_sym;
use gnngp::kernel::{apply_blocks_exact, apply_blocks_lowrank, base_inner, BaseKernel, Block, LandmarkSet};
use gnngp::synth::{random_connected_graph, random_features};

fn main() -> gnngp::Result<()> {
    let n = 40;
    let a = Arc::new(normalize_sym(&random_connected_graph(n, 30, 1)?)?);
    let x = random_features(n, 6, 2);

    let layer = vec![Block::Weight(1.0), Block::GraphConv(a.clone()), Block::Activation, Block::Bias(0.1)];
    let k0 = base_inner(&x)?;
    let exact = apply_blocks_exact(&k0, &layer, &k0)?;

    let landmarks = LandmarkSet::all(n)?;
    let q0 = BaseKernel::Inner.factor(&x, &landmarks)?;
    let q = apply_blocks_lowrank(&q0, &layer, &landmarks, &q0)?;
    println!("exact trace {:.6}", exact.trace());
    println!("all-landmark factor rank {} relative error {:.2e}", q.rank(), q.gram().relative_error(&exact));

    let few = LandmarkSet::sample(&(0..n).collect::<Vec<_>>(), 10, n, 7)?;
    let q0 = BaseKernel::Inner.factor(&x, &few)?;
    let q = apply_blocks_lowrank(&q0, &layer, &few, &q0)?;
    println!("10-landmark factor relative error {:.2e}", q.gram().relative_error(&exact));
    Ok(())
}
