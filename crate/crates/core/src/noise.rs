//! Gate accounting in the {rotation, Hadamard, CNOT} set and the product
//! fidelity model.

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use crate::ansatz::ParamCircuit;
use crate::error::{Error, Result};
use crate::lattice::HoneycombTorus;
use crate::pauli::{Axis, PauliString};
use crate::prep::PrepReport;
use crate::statevector::Gate;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct GateCounts {
    /// Single-qubit rotations, including Y basis changes and fixed Paulis.
    pub rotations: usize,
    pub hadamards: usize,
    pub cnots: usize,
}

impl GateCounts {
    /// `n_R` of the fidelity model: every single-qubit gate.
    pub fn n_r(&self) -> usize {
        self.rotations + self.hadamards
    }

    fn add(&mut self, other: GateCounts) {
        self.rotations += other.rotations;
        self.hadamards += other.hadamards;
        self.cnots += other.cnots;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Stabilization,
    Ansatz,
    Dynamics,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::Stabilization => "stabilization",
            Phase::Ansatz => "ansatz",
            Phase::Dynamics => "dynamics",
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct GateBudget {
    pub phases: BTreeMap<Phase, GateCounts>,
}

impl GateBudget {
    pub fn single(phase: Phase, counts: GateCounts) -> Self {
        let mut b = Self::default();
        b.phases.insert(phase, counts);
        b
    }

    pub fn total(&self) -> GateCounts {
        let mut t = GateCounts::default();
        for c in self.phases.values() {
            t.add(*c);
        }
        t
    }

    pub fn n_r(&self) -> usize {
        self.total().n_r()
    }

    pub fn n_cnot(&self) -> usize {
        self.total().cnots
    }

    pub fn merge(&mut self, other: &GateBudget) {
        for (phase, c) in &other.phases {
            self.phases.entry(*phase).or_default().add(*c);
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let t = self.total();
        serde_json::json!({
            "phases": self.phases,
            "total": t,
            "n_r": t.n_r(),
            "n_cnot": t.cnots,
        })
    }

    /// Plain-text table, one row per phase plus a total.
    pub fn table(&self) -> String {
        let mut out = format!("{:<14}{:>10}{:>10}{:>8}{:>8}\n", "phase", "rotations", "hadamards", "n_R", "CNOTs");
        let row = |name: &str, c: &GateCounts| {
            format!("{:<14}{:>10}{:>10}{:>8}{:>8}\n", name, c.rotations, c.hadamards, c.n_r(), c.cnots)
        };
        for (p, c) in &self.phases {
            out += &row(&p.to_string(), c);
        }
        out += &row("total", &self.total());
        out
    }
}

/// `F = (1 - ε1)^n_R (1 - ε2)^n_CNOT`. Both rates must lie in `[0, 1]`.
pub fn estimate_fidelity(budget: &GateBudget, eps1: f64, eps2: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&eps1) && (0.0..=1.0).contains(&eps2));
    (1.0 - eps1).powi(budget.n_r() as i32) * (1.0 - eps2).powi(budget.n_cnot() as i32)
}

/// Gates realizing `exp(-i angle P / 2)` with basis changes, a CNOT ladder
/// and one Z rotation.
pub fn compile_rotation(pauli: &PauliString, angle: f64) -> Result<Vec<Gate>> {
    if !pauli.is_hermitian() {
        return Err(Error::UnsupportedGate(format!("rotation generator {pauli} is not Hermitian")));
    }
    let n = pauli.num_qubits();
    let angle = if pauli.phase() == 2 { -angle } else { angle };
    let sites = pauli.sites();
    let Some(&(last, _)) = sites.last() else {
        // Identity generator: a global phase.
        return Ok(Vec::new());
    };
    let mut pre = Vec::new();
    let mut post = Vec::new();
    for &(q, axis) in &sites {
        match axis {
            Axis::X => {
                pre.push(Gate::Hadamard(q));
                post.push(Gate::Hadamard(q));
            }
            Axis::Y => {
                pre.push(Gate::rotation(PauliString::single(n, q, Axis::X)?, std::f64::consts::FRAC_PI_2));
                post.push(Gate::rotation(PauliString::single(n, q, Axis::X)?, -std::f64::consts::FRAC_PI_2));
            }
            Axis::Z => {}
        }
    }
    let ladder: Vec<Gate> = sites
        .windows(2)
        .map(|w| Gate::Cnot {
            control: w[0].0,
            target: w[1].0,
        })
        .collect();
    let mut gates = pre;
    gates.extend(ladder.iter().cloned());
    gates.push(Gate::rotation(PauliString::single(n, last, Axis::Z)?, angle));
    gates.extend(ladder.into_iter().rev());
    gates.extend(post);
    Ok(gates)
}

/// Lowers one engine gate into the native set.
pub fn compile_gate(gate: &Gate) -> Result<Vec<Gate>> {
    match gate {
        Gate::Hadamard(_) | Gate::Cnot { .. } => Ok(vec![gate.clone()]),
        Gate::Pauli(p) => {
            let n = p.num_qubits();
            if p.phase() != 0 && p.weight() == 0 {
                return Err(Error::UnsupportedGate(format!("scalar gate {p}")));
            }
            // Single-qubit Paulis only; a phase on the string is global.
            p.sites()
                .into_iter()
                .map(|(q, a)| Ok(Gate::Pauli(PauliString::single(n, q, a)?)))
                .collect()
        }
        Gate::PauliRotation { pauli, angle } => compile_rotation(pauli, *angle),
        // |1><1|_c ⊗ P = (P - Z_c P) / 2
        Gate::ControlledRotation { control, pauli, angle } => {
            let zc = PauliString::single(pauli.num_qubits(), *control, Axis::Z)?;
            let mut g = compile_rotation(pauli, angle / 2.0)?;
            g.extend(compile_rotation(&zc.multiply(pauli)?, -angle / 2.0)?);
            Ok(g)
        }
    }
}

pub fn compile_gates<'a>(gates: impl IntoIterator<Item = &'a Gate>) -> Result<Vec<Gate>> {
    let mut out = Vec::new();
    for g in gates {
        out.extend(compile_gate(g)?);
    }
    Ok(out)
}

/// Counts a native-gate sequence. Z rotations and X rotations from basis
/// changes count as rotations, as do fixed single-qubit Paulis.
pub fn count(native: &[Gate]) -> Result<GateCounts> {
    let mut c = GateCounts::default();
    for g in native {
        match g {
            Gate::Hadamard(_) => c.hadamards += 1,
            Gate::Cnot { .. } => c.cnots += 1,
            Gate::Pauli(p) | Gate::PauliRotation { pauli: p, .. } if p.weight() == 1 => c.rotations += 1,
            other => {
                return Err(Error::UnsupportedGate(format!(
                    "non-native gate in compiled sequence: {other:?}"
                )))
            }
        }
    }
    Ok(c)
}

pub fn compile_circuit(circuit: &ParamCircuit) -> Result<GateBudget> {
    let native = compile_gates(circuit.gates())?;
    Ok(GateBudget::single(Phase::Ansatz, count(&native)?))
}

/// Measurement of a weight-`w` stabilizer: `w` CNOTs onto one ancilla,
/// with basis changes on non-Z qubits.
fn measurement_counts(s: &PauliString) -> GateCounts {
    let mut c = GateCounts {
        cnots: s.weight(),
        ..Default::default()
    };
    for (_, a) in s.sites() {
        match a {
            Axis::X => c.hadamards += 2,
            Axis::Y => c.rotations += 2,
            Axis::Z => {}
        }
    }
    c
}

/// Stabilizer measurements plus the correction Paulis recorded in `report`.
pub fn compile_prep(lat: &HoneycombTorus, report: &PrepReport) -> Result<GateBudget> {
    let mut c = GateCounts::default();
    for s in lat.stabilizer_strings()?.iter().take(report.measured_signs.len()) {
        c.add(measurement_counts(s));
    }
    c.rotations += report.applied_chains.iter().flatten().map(|p| p.weight()).sum::<usize>();
    Ok(GateBudget::single(Phase::Stabilization, c))
}

pub fn compile_dynamics(gates_per_step: &[Gate], steps: usize) -> Result<GateBudget> {
    let mut c = count(&compile_gates(gates_per_step)?)?;
    c.rotations *= steps;
    c.hadamards *= steps;
    c.cnots *= steps;
    Ok(GateBudget::single(Phase::Dynamics, c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::{assemble, AnsatzSpec, VortexLayerKind};
    use crate::lattice::build_torus;
    use crate::prep::{prepare_sector, SectorSpec};
    use crate::statevector::StateVector;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn counts_of(p: &str, n: usize) -> GateCounts {
        let p: PauliString = p.parse().unwrap();
        let p = p.resized(n).unwrap();
        count(&compile_rotation(&p, 0.3).unwrap()).unwrap()
    }

    #[test]
    fn two_qubit_rotation_counts() {
        assert_eq!(counts_of("Z0 Z1", 2), GateCounts { rotations: 1, hadamards: 0, cnots: 2 });
        let xx = counts_of("X0 X1", 2);
        assert_eq!((xx.cnots, xx.rotations, xx.hadamards), (2, 1, 4));
        let yy = counts_of("Y0 Y1", 2);
        assert_eq!((yy.cnots, yy.rotations, yy.hadamards), (2, 5, 0));
    }

    #[test]
    fn compiled_rotations_are_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for p in ["Z0 Z1", "X0 X2", "Y1 Y2", "X0 Y1 Z2", "Y0", "-X0 Z1"] {
            let p: PauliString = p.parse::<PauliString>().unwrap().resized(3).unwrap();
            let theta = rng.gen_range(-3.0..3.0);
            let mut a = StateVector::plus(3).unwrap();
            a.apply_gate(&Gate::rotation(PauliString::single(3, 1, Axis::Y).unwrap(), 0.7)).unwrap();
            let mut b = a.clone();
            a.apply_gate(&Gate::rotation(p.clone(), theta)).unwrap();
            b.apply_gates(&compile_rotation(&p, theta).unwrap()).unwrap();
            b.axpy(Complex64::new(-1.0, 0.0), &a).unwrap();
            assert!(b.norm_sqr().sqrt() < 1e-12, "{p}");
        }
    }

    #[test]
    fn compiled_ansatz_reproduces_state() {
        let lat = build_torus(2, 2).unwrap();
        let spec = AnsatzSpec::with_vortex_layers(2, VortexLayerKind::SingleSitePlusControlled);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let theta: Vec<f64> = (0..spec.num_params(&lat)).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let c = assemble(&lat, &spec, &theta).unwrap();
        let psi0 = prepare_sector(&lat, SectorSpec { vortex_count: 0, loop_signs: [1, 1] }, 0).unwrap().state;
        let mut a = psi0.clone();
        c.apply(&mut a).unwrap();
        let mut b = psi0;
        b.apply_gates(&compile_gates(c.gates()).unwrap()).unwrap();
        b.axpy(Complex64::new(-1.0, 0.0), &a).unwrap();
        assert!(b.norm_sqr().sqrt() < 1e-10);
    }

    #[test]
    fn centralizer_ansatz_budget() {
        let lat = build_torus(2, 2).unwrap();
        let c = assemble(&lat, &AnsatzSpec::centralizer(2), &vec![0.1; 24]).unwrap();
        let b = compile_circuit(&c).unwrap();
        assert_eq!(b.n_cnot(), 48);
        assert_eq!(b, compile_circuit(&c).unwrap());
    }

    #[test]
    fn fidelity_formula() {
        let b = GateBudget::single(Phase::Ansatz, GateCounts { rotations: 0, hadamards: 0, cnots: 1 });
        assert!((estimate_fidelity(&b, 0.0, 1e-3) - 0.999).abs() < 1e-15);
        let b = GateBudget::single(Phase::Ansatz, GateCounts { rotations: 10, hadamards: 5, cnots: 7 });
        assert_eq!(estimate_fidelity(&b, 0.0, 0.0), 1.0);
        assert!(estimate_fidelity(&b, 1e-3, 1e-3) > estimate_fidelity(&b, 2e-3, 1e-3));
    }

    #[test]
    fn prep_budget_counts_measurements() {
        let lat = build_torus(2, 2).unwrap();
        let p = prepare_sector(&lat, SectorSpec { vortex_count: 0, loop_signs: [1, 1] }, 0).unwrap();
        let b = compile_prep(&lat, &p.report).unwrap();
        let weights: usize = lat.stabilizer_strings().unwrap().iter().map(|s| s.weight()).sum();
        assert_eq!(b.n_cnot(), weights);
        assert!(b.table().contains("stabilization"));
    }
}
