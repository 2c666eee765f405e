//! Watch deep GCN kernels collapse to a rank-one limit, and MLP kernels settle.

use gnngp::harness::operator_for;
use gnngp::kernel::base_inner;
use gnngp::limits::{depth_scan, mlp_fixed_point, MlpRegime};
use gnngp::programs::{Architecture, KernelProgram};
use gnngp::synth::{random_connected_graph, random_features};

fn main() -> gnngp::Result<()> {
    let n = 20;
    let g = random_connected_graph(n, 15, 8)?;
    let op = operator_for(Architecture::Gcn, &g)?;
    let k0 = base_inner(&random_features(n, 4, 9))?;
    let program = KernelProgram::gcn(op.clone(), 0.0, 1.0, 60)?;
    let trace = depth_scan(&program, &op, &k0)?;
    println!("spectral radius {:.6}", trace.lambda);
    for r in trace.records.iter().filter(|r| [1, 2, 5, 10, 20, 40, 60].contains(&r.l)) {
        println!(
            "l={:>2} rho_min={:.6} trace={:.4e} scaled_gap={:.3e}",
            r.l,
            r.rho_min,
            r.trace,
            r.scaled_gap.unwrap_or(f64::NAN)
        );
    }

    for (sb, sw) in [(0.5, 1.0), (0.5, 1.2), (0.5, 2.5)] {
        let lim = mlp_fixed_point(sb, sw, &k0, 200)?;
        let regime = match lim.regime {
            MlpRegime::Bounded { q } => format!("bounded, diagonal -> {q:.6}"),
            MlpRegime::Exploding { .. } => "exploding".into(),
        };
        println!("mlp sigma_b={sb} sigma_w={sw}: {regime}, final deviation {:.2e}", lim.final_deviation());
    }
    Ok(())
}
