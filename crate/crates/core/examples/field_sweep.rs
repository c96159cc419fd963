//! Magnetization and vortex density versus a uniform z field on the 2x2
//! torus, variational against exact. A coarse grid keeps it quick.

use kitaev_qsim::ansatz::{AnsatzSpec, VortexLayerKind};
use kitaev_qsim::build_torus;
use kitaev_qsim::runner::experiments::{field_sweep, write_sweep_csv, SweepOptions};
use kitaev_qsim::vqe::OptimizerConfig;

fn main() -> kitaev_qsim::Result<()> {
    let lat = build_torus(2, 2)?;
    let opts = SweepOptions {
        spec: AnsatzSpec::with_vortex_layers(4, VortexLayerKind::SingleSitePlusControlled),
        optimizer: OptimizerConfig { epochs: 600, ..Default::default() },
        seeds: vec![0, 1],
        grid: vec![0.0, 0.3, 0.6, 0.9, 1.2, 1.5],
        continuation: true,
        oracle: true,
        oracle_k: 1,
        degeneracy_tol: 1e-8,
    };
    for j in [-1.0, 1.0] {
        let r = field_sweep(&lat, j, None, &opts)?;
        println!("J = {j:+}: start sector {:?}", r.pattern.plaquette_signs);
        write_sweep_csv(&r.points, std::io::stdout())?;
    }
    Ok(())
}
