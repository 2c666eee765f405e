//! Empirical covariance of random finite-width GCNs approaches the analytic kernel.

use gnngp::harness::operator_for;
use gnngp::kernel::base_inner;
use gnngp::mc::{width_sweep, McConfig};
use gnngp::metrics::loglog_slope;
use gnngp::programs::{Architecture, Hyperparams, KernelProgram};
use gnngp::synth::{random_connected_graph, random_features};

fn main() -> gnngp::Result<()> {
    let n = 8;
    let g = random_connected_graph(n, 6, 1)?;
    let x = random_features(n, 3, 2);
    let arch = Architecture::Gcn;
    let op = operator_for(arch, &g)?;
    let analytic = KernelProgram::build(arch, op.clone(), 2, &Hyperparams::default())?.final_exact(&base_inner(&x)?)?;
    let cfg = McConfig::new(arch, 2, 0, 100, 5);
    let widths = [16, 64, 256, 1024];
    let sweep = width_sweep(&cfg, &widths, &[1, 2, 3], &op, &x, &analytic)?;
    for (w, e) in &sweep {
        println!("width {w:>5}: relative error {e:.4}");
    }
    let (w, e): (Vec<f64>, Vec<f64>) = sweep.iter().map(|(w, e)| (*w as f64, *e)).unzip();
    println!("log-log slope {:.3}", loglog_slope(&w, &e)?);
    Ok(())
}
