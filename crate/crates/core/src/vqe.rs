//! Energy minimization over circuit parameters.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ansatz::{assemble, AnsatzSpec, ParamCircuit};
use crate::error::{Error, Result};
use crate::exact::SpectrumResult;
use crate::lattice::HoneycombTorus;
use crate::pauli::{PauliString, PauliSum};
use crate::prep::{prepare_pattern, PrepReport, SectorPattern};
use crate::statevector::{Gate, StateVector};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub seed: u64,
    /// Initial angles are drawn from `uniform(-s, s)`.
    pub init_scale: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            epochs: 500,
            learning_rate: 0.01,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            seed: 0,
            init_scale: 0.1,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::ConfigInvalid(m));
        if self.epochs < 1 {
            return bad("optimizer.epochs must be >= 1".into());
        }
        if !(self.learning_rate > 0.0) {
            return bad(format!("optimizer.learning_rate must be > 0, got {}", self.learning_rate));
        }
        for (name, b) in [("adam_beta1", self.adam_beta1), ("adam_beta2", self.adam_beta2)] {
            if !(0.0..1.0).contains(&b) {
                return bad(format!("optimizer.{name} must lie in [0, 1), got {b}"));
            }
        }
        if !(self.adam_eps > 0.0) || !(self.init_scale >= 0.0) {
            return bad("optimizer.adam_eps must be > 0 and init_scale >= 0".into());
        }
        Ok(())
    }

    pub fn initial_theta(&self, len: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let s = self.init_scale;
        (0..len)
            .map(|_| if s > 0.0 { rng.gen_range(-s..s) } else { 0.0 })
            .collect()
    }
}

pub fn energy(state0: &StateVector, circuit: &ParamCircuit, hamiltonian: &PauliSum) -> Result<f64> {
    let mut psi = state0.clone();
    circuit.apply(&mut psi)?;
    psi.expectation(hamiltonian)
}

/// Energy and its exact gradient by a reverse sweep.
///
/// With `φ` the state after gate `k` and `λ` the adjoint `H ψ` pulled back
/// to the same point, `∂E/∂θ = Im <λ|G|φ>` for `exp(-iθG/2)`.
pub fn energy_and_gradient(
    state0: &StateVector,
    circuit: &ParamCircuit,
    hamiltonian: &PauliSum,
) -> Result<(f64, Vec<f64>)> {
    let (e, g, _) = forward_and_gradient(state0, circuit, hamiltonian)?;
    Ok((e, g))
}

/// Also returns the circuit output state.
fn forward_and_gradient(
    state0: &StateVector,
    circuit: &ParamCircuit,
    hamiltonian: &PauliSum,
) -> Result<(f64, Vec<f64>, StateVector)> {
    let mut phi = state0.clone();
    circuit.apply(&mut phi)?;
    let output = phi.clone();
    let mut lambda = phi.apply_sum(hamiltonian)?;
    let energy = StateVector::inner(&phi, &lambda)?.re;
    let mut grad = vec![0.0; circuit.num_params()];
    for (k, gate) in circuit.gates().iter().enumerate().rev() {
        match (circuit.param_of_gate(k), gate) {
            (Some(p), Gate::PauliRotation { pauli, angle }) => {
                grad[p] += StateVector::adjoint_step(&mut phi, &mut lambda, pauli, *angle, None)?.im;
            }
            (Some(p), Gate::ControlledRotation { control, pauli, angle }) => {
                grad[p] += StateVector::adjoint_step(&mut phi, &mut lambda, pauli, *angle, Some(*control))?.im;
            }
            (Some(_), _) => return Err(Error::NonDifferentiableGate(k)),
            (None, _) => {
                let inv = gate.inverse();
                phi.apply_gate(&inv)?;
                lambda.apply_gate(&inv)?;
            }
        }
    }
    Ok((energy, grad, output))
}

pub fn gradient(state0: &StateVector, circuit: &ParamCircuit, hamiltonian: &PauliSum) -> Result<Vec<f64>> {
    energy_and_gradient(state0, circuit, hamiltonian).map(|(_, g)| g)
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    fn new(len: usize) -> Self {
        Self {
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
        }
    }

    fn step(&mut self, cfg: &OptimizerConfig, theta: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let (b1, b2) = (cfg.adam_beta1, cfg.adam_beta2);
        let c1 = 1.0 - b1.powi(self.t);
        let c2 = 1.0 - b2.powi(self.t);
        for i in 0..theta.len() {
            self.m[i] = b1 * self.m[i] + (1.0 - b1) * grad[i];
            self.v[i] = b2 * self.v[i] + (1.0 - b2) * grad[i] * grad[i];
            let mhat = self.m[i] / c1;
            let vhat = self.v[i] / c2;
            theta[i] -= cfg.learning_rate * mhat / (vhat.sqrt() + cfg.adam_eps);
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub energy: f64,
    pub infidelity: Option<f64>,
    pub grad_norm: f64,
    /// Largest change of any tracked stabilizer expectation since epoch 0.
    pub stabilizer_drift: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct TrainingTrace {
    pub records: Vec<EpochRecord>,
    pub theta_opt: Vec<f64>,
    pub oracle_energy: Option<f64>,
}

impl TrainingTrace {
    pub fn final_record(&self) -> &EpochRecord {
        self.records.last().expect("trace has at least the initial record")
    }

    pub fn final_energy(&self) -> f64 {
        self.final_record().energy
    }

    pub fn final_infidelity(&self) -> Option<f64> {
        self.final_record().infidelity
    }

    pub fn min_energy(&self) -> f64 {
        self.records.iter().map(|r| r.energy).fold(f64::INFINITY, f64::min)
    }

    pub fn max_stabilizer_drift(&self) -> Option<f64> {
        self.records
            .iter()
            .filter_map(|r| r.stabilizer_drift)
            .reduce(f64::max)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "epoch,energy,infidelity,grad_norm")?;
        for r in &self.records {
            let inf = r.infidelity.map(|f| format!("{f:.17e}")).unwrap_or_default();
            writeln!(w, "{},{:.17e},{},{:.17e}", r.epoch, r.energy, inf, r.grad_norm)?;
        }
        Ok(())
    }

    pub fn summary(&self) -> serde_json::Value {
        let f = self.final_record();
        serde_json::json!({
            "epochs": f.epoch,
            "final_energy": f.energy,
            "final_infidelity": f.infidelity,
            "final_grad_norm": f.grad_norm,
            "min_energy": self.min_energy(),
            "oracle_energy": self.oracle_energy,
            "delta_e": self.oracle_energy.map(|e| f.energy - e),
            "max_stabilizer_drift": self.max_stabilizer_drift(),
            "theta_opt": self.theta_opt,
        })
    }
}

/// Optimizes `circuit` from `state0`, starting at `theta0` or at random
/// angles drawn per `cfg`. `tracked` stabilizers are monitored for drift
/// every epoch.
pub fn optimize(
    state0: &StateVector,
    circuit: &ParamCircuit,
    hamiltonian: &PauliSum,
    cfg: &OptimizerConfig,
    theta0: Option<&[f64]>,
    oracle: Option<&SpectrumResult>,
    tracked: &[PauliString],
) -> Result<TrainingTrace> {
    let mut circuit = circuit.clone();
    let mut theta = match theta0 {
        Some(t) if t.len() != circuit.num_params() => {
            return Err(Error::ParamCountMismatch {
                expected: circuit.num_params(),
                got: t.len(),
            })
        }
        Some(t) => t.to_vec(),
        None => cfg.initial_theta(circuit.num_params()),
    };
    let mut adam = Adam::new(theta.len());
    let mut records = Vec::with_capacity(cfg.epochs + 1);
    let mut reference: Option<Vec<f64>> = None;
    for epoch in 0..=cfg.epochs {
        circuit.set_params(&theta)?;
        let (e, grad, psi) = forward_and_gradient(state0, &circuit, hamiltonian)?;
        let infidelity = oracle
            .map(|o| o.ground_fidelity(&psi).map(|f| (1.0 - f).max(0.0)))
            .transpose()?;
        let stabilizer_drift = if tracked.is_empty() {
            None
        } else {
            let vals = tracked
                .iter()
                .map(|s| psi.pauli_expectation(s).map(|c| c.re))
                .collect::<Result<Vec<_>>>()?;
            let r = reference.get_or_insert_with(|| vals.clone());
            Some(vals.iter().zip(r.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
        };
        records.push(EpochRecord {
            epoch,
            energy: e,
            infidelity,
            grad_norm: grad.iter().map(|g| g * g).sum::<f64>().sqrt(),
            stabilizer_drift,
        });
        if epoch < cfg.epochs {
            adam.step(cfg, &mut theta, &grad);
        }
    }
    Ok(TrainingTrace {
        records,
        theta_opt: theta,
        oracle_energy: oracle.map(|o| o.ground_energy()),
    })
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub trace: TrainingTrace,
    pub prep: PrepReport,
    pub circuit: ParamCircuit,
    pub final_state: StateVector,
}

/// Prepares the sector once, then optimizes. The optimizer seed also seeds
/// the stabilization measurements.
pub fn train(
    lat: &HoneycombTorus,
    sector: &SectorPattern,
    spec: &AnsatzSpec,
    hamiltonian: &PauliSum,
    cfg: &OptimizerConfig,
    oracle: Option<&SpectrumResult>,
) -> Result<TrainOutcome> {
    let prepared = prepare_pattern(lat, sector, cfg.seed)?;
    train_from(lat, prepared.state, prepared.report, spec, hamiltonian, cfg, None, oracle)
}

/// Like [`train`] but from an already prepared state, optionally warm
/// started at `theta0`.
#[allow(clippy::too_many_arguments)]
pub fn train_from(
    lat: &HoneycombTorus,
    state0: StateVector,
    prep: PrepReport,
    spec: &AnsatzSpec,
    hamiltonian: &PauliSum,
    cfg: &OptimizerConfig,
    theta0: Option<&[f64]>,
    oracle: Option<&SpectrumResult>,
) -> Result<TrainOutcome> {
    let circuit = assemble(lat, spec, &vec![0.0; spec.num_params(lat)])?;
    let tracked = if spec.vortex_layers.is_none() {
        lat.stabilizer_strings()?
    } else {
        Vec::new()
    };
    let trace = optimize(&state0, &circuit, hamiltonian, cfg, theta0, oracle, &tracked)?;
    let mut circuit = circuit;
    circuit.set_params(&trace.theta_opt)?;
    let mut final_state = state0;
    circuit.apply(&mut final_state)?;
    Ok(TrainOutcome {
        trace,
        prep,
        circuit,
        final_state,
    })
}

/// Independent runs, one per seed, returned in seed order.
pub fn train_seeds(
    lat: &HoneycombTorus,
    sector: &SectorPattern,
    spec: &AnsatzSpec,
    hamiltonian: &PauliSum,
    cfg: &OptimizerConfig,
    oracle: Option<&SpectrumResult>,
    seeds: &[u64],
) -> Result<Vec<TrainOutcome>> {
    seeds
        .par_iter()
        .map(|&seed| {
            let cfg = OptimizerConfig { seed, ..cfg.clone() };
            train(lat, sector, spec, hamiltonian, &cfg, oracle)
        })
        .collect()
}

/// Index of the run with the lowest final infidelity, or energy when no
/// oracle was supplied.
pub fn best_run(runs: &[TrainOutcome]) -> Option<usize> {
    let key = |r: &TrainOutcome| r.trace.final_infidelity().unwrap_or_else(|| r.trace.final_energy());
    (0..runs.len()).min_by(|&a, &b| key(&runs[a]).total_cmp(&key(&runs[b])))
}

pub fn central_difference(
    state0: &StateVector,
    circuit: &ParamCircuit,
    hamiltonian: &PauliSum,
    step: f64,
) -> Result<Vec<f64>> {
    let theta = circuit.params();
    let mut c = circuit.clone();
    let mut out = Vec::with_capacity(theta.len());
    for k in 0..theta.len() {
        let mut t = theta.clone();
        t[k] = theta[k] + step;
        c.set_params(&t)?;
        let plus = energy(state0, &c, hamiltonian)?;
        t[k] = theta[k] - step;
        c.set_params(&t)?;
        let minus = energy(state0, &c, hamiltonian)?;
        out.push((plus - minus) / (2.0 * step));
    }
    Ok(out)
}
