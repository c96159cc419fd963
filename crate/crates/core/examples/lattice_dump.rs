//! Prints the honeycomb torus geometry and its stabilizer group.
//!
//! cargo run --example lattice_dump -- 3 3

use kitaev_qsim::{build_hamiltonian, build_torus, KitaevParams};

fn main() -> kitaev_qsim::Result<()> {
    let args: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let (lx, ly) = (*args.first().unwrap_or(&2), *args.get(1).unwrap_or(&2));
    let lat = build_torus(lx, ly)?;
    println!("{lx}x{ly} torus: {} sites, {} bonds, {} plaquettes", lat.num_sites(), lat.bonds().len(), lat.num_plaquettes());
    for b in lat.bonds() {
        println!("  {}-bond {:>2} {:>2}", b.axis.symbol().to_ascii_lowercase(), b.i, b.j);
    }
    for (p, s) in lat.stabilizer_strings()?.iter().enumerate() {
        let label = if p < lat.num_plaquettes() { format!("W_{p}") } else { format!("loop {}", p - lat.num_plaquettes()) };
        println!("  {label:<8} {s}");
    }
    for (name, pair) in lat.default_bond_pairs() {
        println!("  pair {name}: {:?} / {:?}", pair.first, pair.second);
    }
    let h = build_hamiltonian(&lat, &KitaevParams::isotropic(-1.0, lat.num_sites()))?;
    println!("hamiltonian: {} terms", h.len());
    Ok(())
}
