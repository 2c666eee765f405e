//! Gaussian-process kernels from infinitely wide graph neural networks.
//!
//! The crate computes the limiting covariance of GCN, GCNII, GIN and GraphSAGE
//! networks, exactly or as a Nyström low-rank factor, and runs GP posterior
//! inference on graph nodes with it.

pub mod config;
pub mod dataset;
pub mod error;
pub mod gp;
pub mod graph;
pub mod harness;
pub mod kernel;
pub mod limits;
pub mod mc;
pub mod metrics;
pub mod pca;
pub mod programs;
pub mod report;
pub mod synth;

pub use error::{Error, Result};
