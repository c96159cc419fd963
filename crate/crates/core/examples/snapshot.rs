//! Gate-level use of the state vector engine and a KQSV1 snapshot round
//! trip.

use kitaev_qsim::{Gate, PauliString, StateVector};

fn main() -> kitaev_qsim::Result<()> {
    let mut psi = StateVector::zero(3)?;
    psi.apply_gates(&[
        Gate::Hadamard(0),
        Gate::Cnot { control: 0, target: 1 },
        Gate::rotation("Y0 Z1 X2".parse::<PauliString>()?, 0.7),
    ])?;
    for s in ["Z0 Z1", "X0 X1", "Y0 Z1 X2"] {
        let p = s.parse::<PauliString>()?.resized(3)?;
        println!("<{s}> = {:+.6}", psi.pauli_expectation(&p)?.re);
    }
    let mut buf = Vec::new();
    psi.write_snapshot(&mut buf)?;
    let back = StateVector::read_snapshot(buf.as_slice())?;
    println!("snapshot: {} bytes, fidelity after reload {:.15}", buf.len(), StateVector::fidelity(&psi, &back)?);
    Ok(())
}
