//! Limiting kernels of every supported architecture on one graph.

use gnngp::harness::operator_for;
use gnngp::kernel::{BaseKernel, LandmarkSet};
use gnngp::programs::{Architecture, Hyperparams, KernelProgram};
use gnngp::synth::{random_connected_graph, random_features};

fn main() -> gnngp::Result<()> {
    let n = 30;
    let g = random_connected_graph(n, 25, 4)?;
    let x = random_features(n, 5, 5);
    let hp = Hyperparams::default();
    let landmarks = LandmarkSet::all(n)?;
    println!("{:<6} {:>12} {:>14} {:>16}", "arch", "trace", "min eigenvalue", "lowrank rel err");
    for arch in Architecture::ALL {
        let program = KernelProgram::build(arch, operator_for(arch, &g)?, 3, &hp)?;
        let base = arch.default_base();
        let k = program.final_exact(&base.evaluate(&x)?)?;
        let err = match base {
            BaseKernel::Inner => {
                let q = program.run_lowrank(&base.factor(&x, &landmarks)?, &landmarks)?;
                format!("{:.2e}", q.gram().relative_error(&k))
            }
            _ => "-".into(),
        };
        println!("{:<6} {:>12.5} {:>14.3e} {:>16}", arch.name(), k.trace(), k.min_eigenvalue(), err);
    }
    Ok(())
}
