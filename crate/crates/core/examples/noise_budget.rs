//! Native gate counts of stabilization plus ansatz and the resulting
//! fidelity estimate, for a few lattice sizes and depths.

use kitaev_qsim::ansatz::{assemble, AnsatzSpec};
use kitaev_qsim::build_torus;
use kitaev_qsim::noise::{compile_circuit, compile_prep, estimate_fidelity};
use kitaev_qsim::prep::{prepare_pattern, SectorPattern};

fn main() -> kitaev_qsim::Result<()> {
    for (lx, ly, depth) in [(2, 2, 2), (2, 3, 2), (3, 3, 3)] {
        let lat = build_torus(lx, ly)?;
        let spec = AnsatzSpec::centralizer(depth);
        let prep = prepare_pattern(&lat, &SectorPattern::vortex_free(&lat, [1, 1]), 0)?;
        let mut budget = compile_prep(&lat, &prep.report)?;
        budget.merge(&compile_circuit(&assemble(&lat, &spec, &vec![0.1; spec.num_params(&lat)])?)?);
        println!("N = {}, d = {depth}", lat.num_sites());
        print!("{}", budget.table());
        for (e1, e2) in [(1e-4, 1e-3), (1e-5, 1e-4)] {
            println!("  F(eps1={e1:e}, eps2={e2:e}) = {:.4}", estimate_fidelity(&budget, e1, e2));
        }
    }
    Ok(())
}
