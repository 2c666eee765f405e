//! Build a graph, normalize it two ways, and find its Perron eigenpair.

use gnngp::graph::{build_adjacency, normalize_row, normalize_sym, spectral_radius, DEFAULT_POWER_MAX_ITER, DEFAULT_POWER_TOL};
use gnngp::synth::random_connected_graph;

fn main() -> gnngp::Result<()> {
    let ring: Vec<(usize, usize)> = (0..6).map(|i| (i, (i + 1) % 6)).collect();
    let a = build_adjacency(&ring, 6, false)?;
    println!("ring: {} nodes, {} stored entries", a.n_nodes(), a.n_edges());
    let a_hat = build_adjacency(&ring, 6, true)?;
    println!("with self-loops: {} stored entries", a_hat.n_edges());

    let sym = normalize_sym(&a)?;
    let row = normalize_row(&a)?;
    println!("D^-1/2 A D^-1/2 symmetric: {}", sym.is_symmetric(1e-12));
    println!("D^-1 A row sums: {:?}", row.mul_vec(&nalgebra::DVector::repeat(6, 1.0)).as_slice());

    let g = random_connected_graph(50, 40, 3)?;
    let g = normalize_sym(&g)?;
    let info = spectral_radius(&g, DEFAULT_POWER_TOL, DEFAULT_POWER_MAX_ITER)?;
    println!(
        "random graph: irreducible={} spectral radius={:.6} after {} iterations",
        g.is_irreducible(),
        info.lambda,
        info.iterations
    );
    Ok(())
}

