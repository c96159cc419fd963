//! Measures every stabilizer on |+...+>, then steers the outcome into a
//! chosen vortex sector with Pauli flip chains.

use kitaev_qsim::build_torus;
use kitaev_qsim::prep::{prepare_pattern, prepare_sector, SectorPattern, SectorSpec};

fn main() -> kitaev_qsim::Result<()> {
    let lat = build_torus(2, 3)?;
    for seed in 0..3 {
        let p = prepare_sector(&lat, SectorSpec { vortex_count: 2, loop_signs: [1, -1] }, seed)?;
        let r = &p.report;
        println!(
            "seed {seed}: measured {:?} -> plaquettes {:?} loops {:?}, {} flip Paulis, W = {}",
            r.measured_signs,
            r.final_plaquette_signs,
            r.final_loop_signs,
            r.num_flip_paulis(),
            r.vortex_count
        );
    }
    let free = SectorPattern::vortex_free(&lat, [1, 1]);
    let p = prepare_pattern(&lat, &free, 7)?;
    for (s, sign) in free.constraints(&lat)? {
        let v = p.state.pauli_expectation(&s)?.re;
        assert!((v - sign as f64).abs() < 1e-10);
    }
    println!("vortex-free (+,+) reached; branch probabilities {:?}", p.report.branch_probabilities);
    Ok(())
}
