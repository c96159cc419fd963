//! Lanczos spectrum of the 2x2 torus, globally and per stabilizer sector,
//! checked against imaginary-time evolution.

use kitaev_qsim::exact::{ground_subspace, imaginary_time_gs, solve, SolverOptions};
use kitaev_qsim::prep::{SectorPattern, LOOP_SECTORS};
use kitaev_qsim::{build_hamiltonian, build_torus, KitaevParams, StateVector};

fn main() -> kitaev_qsim::Result<()> {
    let lat = build_torus(2, 2)?;
    let n = lat.num_sites();
    let h = build_hamiltonian(&lat, &KitaevParams::isotropic(-1.0, n))?;
    let global = ground_subspace(&h, n, 6, 1e-8)?;
    println!("lowest levels: {:?}", global.eigenvalues);
    println!("ground degeneracy: {}", global.degeneracy());

    for loops in LOOP_SECTORS {
        for pat in [SectorPattern::vortex_free(&lat, loops), SectorPattern::all_vortices(&lat, loops)] {
            let opts = SolverOptions { constraints: pat.constraints(&lat)?, ..Default::default() };
            let r = solve(&h, n, &opts)?;
            println!("W = {} loops {:?}: E0 = {:.10}", pat.vortex_count(), loops, r.ground_energy());
        }
    }

    let tau = 0.9 / h.coefficient_norm();
    let psi = imaginary_time_gs(&h, &StateVector::plus(n)?, tau, 100_000, 1e-14)?;
    println!("imaginary time: E = {:.10}", psi.expectation(&h)?);
    Ok(())
}
