//! Seeded synthetic graphs and datasets.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::dataset::{make_splits, Dataset};
use crate::error::{Error, Result};
use crate::gp::Targets;
use crate::graph::{build_adjacency, SparseAdjacency};

/// Connected graph: a random recursive tree plus `extra_edges` uniform edges.
/// Returned without self-loops.
pub fn random_connected_graph(n: usize, extra_edges: usize, seed: u64) -> Result<SparseAdjacency> {
    if n == 0 {
        return Err(Error::input("graph needs at least one node"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges: Vec<(usize, usize)> = (1..n).map(|i| (i, rng.random_range(0..i))).collect();
    if n > 1 {
        for _ in 0..extra_edges {
            let i = rng.random_range(0..n);
            let j = rng.random_range(0..n);
            if i != j {
                edges.push((i, j));
            }
        }
    }
    build_adjacency(&edges, n, false)
}

/// N×d matrix of iid standard normals.
pub fn random_features(n: usize, d: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DMatrix::from_fn(n, d, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// Parameters of [`planted_partition`].
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedPartition {
    pub n_nodes: usize,
    pub n_classes: usize,
    /// Expected number of neighbors per node.
    pub avg_degree: f64,
    /// Probability that an edge stays inside the class.
    pub homophily: f64,
    pub n_features: usize,
    /// Feature noise standard deviation around the class centroid.
    pub noise: f64,
    pub split_ratios: (f64, f64, f64),
    /// Add a random recursive tree so the graph is connected.
    pub connected: bool,
}

impl Default for PlantedPartition {
    fn default() -> Self {
        Self {
            n_nodes: 1000,
            n_classes: 3,
            avg_degree: 5.0,
            homophily: 0.8,
            n_features: 32,
            noise: 2.0,
            split_ratios: (0.05, 0.15, 0.30),
            connected: false,
        }
    }
}

/// Node-classification dataset with class-homophilous edges and noisy class
/// centroids as features. Edge count grows linearly with `n_nodes`.
pub fn planted_partition(p: &PlantedPartition, seed: u64) -> Result<Dataset> {
    if p.n_classes < 2 || p.n_nodes < p.n_classes {
        return Err(Error::input("need at least two classes and one node per class"));
    }
    if !(0.0..=1.0).contains(&p.homophily) || p.avg_degree.is_nan() || p.avg_degree < 0.0 {
        return Err(Error::input("invalid homophily or degree"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels: Vec<usize> = (0..p.n_nodes).map(|i| i % p.n_classes).collect();
    let members: Vec<Vec<usize>> = (0..p.n_classes)
        .map(|c| (c..p.n_nodes).step_by(p.n_classes).collect())
        .collect();
    let n_edges = (p.avg_degree * p.n_nodes as f64 / 2.0).round() as usize;
    let mut edges = Vec::with_capacity(n_edges);
    for _ in 0..n_edges {
        let i = rng.random_range(0..p.n_nodes);
        let j = if rng.random::<f64>() < p.homophily {
            let pool = &members[labels[i]];
            pool[rng.random_range(0..pool.len())]
        } else {
            rng.random_range(0..p.n_nodes)
        };
        if i != j {
            edges.push((i, j));
        }
    }
    if p.connected {
        edges.extend((1..p.n_nodes).map(|i| (i, rng.random_range(0..i))));
    }
    let graph = build_adjacency(&edges, p.n_nodes, false)?;
    let centroids = DMatrix::from_fn(p.n_classes, p.n_features, |_, _| rng.sample::<f64, _>(StandardNormal));
    let features = DMatrix::from_fn(p.n_nodes, p.n_features, |i, j| {
        centroids[(labels[i], j)] + p.noise * rng.sample::<f64, _>(StandardNormal)
    });
    let splits = make_splits(p.n_nodes, p.split_ratios, seed ^ 0x5eed)?;
    Dataset::new(
        format!("planted-{}", p.n_nodes),
        graph,
        features,
        Targets::classes(labels)?,
        splits,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn connected_and_seeded() {
        let g = random_connected_graph(30, 20, 1).unwrap();
        assert!(g.is_irreducible());
        assert!(!g.has_self_loops());
        assert_eq!(g.to_dense(), random_connected_graph(30, 20, 1).unwrap().to_dense());
    }

    #[test]
    fn planted_partition_is_linear_in_size() {
        let p = PlantedPartition {
            n_nodes: 400,
            ..Default::default()
        };
        let ds = planted_partition(&p, 2).unwrap();
        let m = ds.n_undirected_edges() as f64;
        assert!(m > 0.8 * 1000.0 && m <= 1000.0, "{m}");
        assert_eq!(ds.features.shape(), (400, 32));
        let p = PlantedPartition {
            n_nodes: 50,
            avg_degree: 0.5,
            connected: true,
            ..Default::default()
        };
        assert!(planted_partition(&p, 2).unwrap().graph.is_irreducible());
    }
}
