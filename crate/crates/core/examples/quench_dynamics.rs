//! Field quench from the 2x2 ground state: bond-bond correlators from
//! Trotterized and exact evolution, and the Trotter convergence order.

use kitaev_qsim::dynamics::{convergence_order, correlators, Propagation, QuenchSpec};
use kitaev_qsim::exact::ground_subspace;
use kitaev_qsim::{build_hamiltonian, build_torus, KitaevParams};

fn main() -> kitaev_qsim::Result<()> {
    let lat = build_torus(2, 2)?;
    let n = lat.num_sites();
    let h0 = build_hamiltonian(&lat, &KitaevParams::isotropic(-1.0, n))?;
    let gs = ground_subspace(&h0, n, 1, 1e-8)?;
    let psi = &gs.ground_states()[0];
    let h1 = build_hamiltonian(&lat, &KitaevParams::isotropic(-1.0, n).with_uniform_field([0.0, 0.0, 0.5]))?;
    let quench = QuenchSpec::new(&lat, h1.clone());
    for (name, pair) in &quench.pairs {
        let t = correlators(&lat, psi, &quench, name, *pair, Propagation::Trotter)?;
        let e = correlators(&lat, psi, &quench, name, *pair, Propagation::Exact)?;
        println!("{name}: S(0) = {:.6}, C = {:.6}", t.s[0].re, t.static_c.re);
        for j in 0..t.times.len() {
            println!("  t={:.1}  Re S trotter {:+.6}  exact {:+.6}", t.times[j], t.s[j].re, e.s[j].re);
        }
    }
    for order in [1, 2] {
        let p = convergence_order(psi, &h1, 1.0, &[10, 20, 40, 80], order)?;
        println!("order {order}: measured exponent {p:.3}");
    }
    Ok(())
}
