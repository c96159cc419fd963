//! Layered variational circuits.
//!
//! Each of the `depth` blocks applies a centralizer layer (one rotation per
//! bond generator, x-bonds then y then z) followed, when enabled, by a
//! vortex layer that breaks the plaquette symmetry.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::HoneycombTorus;
use crate::pauli::{centralizer_generators, Axis, PauliString};
use crate::statevector::{Gate, StateVector};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VortexLayerKind {
    /// `exp(-iθ P^a_i / 2)` for every site and axis.
    SingleSiteRotations,
    /// Single-site rotations plus, per bond `(i, j)` of axis `a`, the
    /// controlled rotation `exp(-iθ |1><1|_i ⊗ P^a_j / 2)`.
    SingleSitePlusControlled,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnsatzSpec {
    pub depth: usize,
    #[serde(default)]
    pub vortex_layers: Option<VortexLayerKind>,
}

impl AnsatzSpec {
    pub fn centralizer(depth: usize) -> Self {
        Self {
            depth,
            vortex_layers: None,
        }
    }

    pub fn with_vortex_layers(depth: usize, kind: VortexLayerKind) -> Self {
        Self {
            depth,
            vortex_layers: Some(kind),
        }
    }

    pub fn layout(&self, lat: &HoneycombTorus) -> ParamLayout {
        let n = lat.num_sites();
        let (single, controlled) = match self.vortex_layers {
            None => (0, 0),
            Some(VortexLayerKind::SingleSiteRotations) => (3 * n, 0),
            Some(VortexLayerKind::SingleSitePlusControlled) => (3 * n, 3 * n / 2),
        };
        ParamLayout {
            depth: self.depth,
            num_sites: n,
            centralizer: 3 * n / 2,
            single_site: single,
            controlled,
        }
    }

    pub fn num_params(&self, lat: &HoneycombTorus) -> usize {
        self.layout(lat).len()
    }
}

/// What a flat parameter index controls.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ParamSlot {
    Centralizer { layer: usize, bond: usize },
    SingleSite { layer: usize, site: usize, axis: Axis },
    Controlled { layer: usize, bond: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ParamLayout {
    depth: usize,
    num_sites: usize,
    centralizer: usize,
    single_site: usize,
    controlled: usize,
}

impl ParamLayout {
    pub fn per_layer(&self) -> usize {
        self.centralizer + self.single_site + self.controlled
    }

    pub fn len(&self) -> usize {
        self.depth * self.per_layer()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index_of(&self, slot: ParamSlot) -> Option<usize> {
        let (layer, offset) = match slot {
            ParamSlot::Centralizer { layer, bond } if bond < self.centralizer => (layer, bond),
            ParamSlot::SingleSite { layer, site, axis } if self.single_site > 0 && site < self.num_sites => {
                (layer, self.centralizer + 3 * site + axis.index())
            }
            ParamSlot::Controlled { layer, bond } if bond < self.controlled => {
                (layer, self.centralizer + self.single_site + bond)
            }
            _ => return None,
        };
        (layer < self.depth).then(|| layer * self.per_layer() + offset)
    }

    pub fn slot(&self, index: usize) -> Option<ParamSlot> {
        if index >= self.len() {
            return None;
        }
        let layer = index / self.per_layer();
        let r = index % self.per_layer();
        Some(if r < self.centralizer {
            ParamSlot::Centralizer { layer, bond: r }
        } else if r < self.centralizer + self.single_site {
            let k = r - self.centralizer;
            ParamSlot::SingleSite {
                layer,
                site: k / 3,
                axis: Axis::ALL[k % 3],
            }
        } else {
            ParamSlot::Controlled {
                layer,
                bond: r - self.centralizer - self.single_site,
            }
        })
    }
}

/// Gate list where each rotation may be bound to a flat parameter index.
#[derive(Clone, Debug, Serialize)]
pub struct ParamCircuit {
    num_qubits: usize,
    num_params: usize,
    gates: Vec<Gate>,
    param_of_gate: Vec<Option<usize>>,
}

impl ParamCircuit {
    pub fn new(num_qubits: usize, num_params: usize) -> Self {
        Self {
            num_qubits,
            num_params,
            gates: Vec::new(),
            param_of_gate: Vec::new(),
        }
    }

    pub fn push_fixed(&mut self, gate: Gate) {
        self.gates.push(gate);
        self.param_of_gate.push(None);
    }

    /// Panics if `param` is outside the declared range.
    pub fn push_param(&mut self, gate: Gate, param: usize) {
        assert!(param < self.num_params, "parameter index out of range");
        self.gates.push(gate);
        self.param_of_gate.push(Some(param));
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn num_params(&self) -> usize {
        self.num_params
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn param_of_gate(&self, gate: usize) -> Option<usize> {
        self.param_of_gate[gate]
    }

    pub fn set_params(&mut self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.num_params {
            return Err(Error::ParamCountMismatch {
                expected: self.num_params,
                got: theta.len(),
            });
        }
        for (gate, param) in self.gates.iter_mut().zip(&self.param_of_gate) {
            if let Some(k) = param {
                *gate = gate.with_angle(theta[*k]);
            }
        }
        Ok(())
    }

    pub fn params(&self) -> Vec<f64> {
        let mut theta = vec![0.0; self.num_params];
        for (gate, param) in self.gates.iter().zip(&self.param_of_gate) {
            if let (Some(k), Some(a)) = (param, gate.angle()) {
                theta[*k] = a;
            }
        }
        theta
    }

    pub fn apply(&self, state: &mut StateVector) -> Result<()> {
        state.apply_gates(&self.gates)
    }

    /// JSON-friendly gate listing.
    pub fn dump(&self) -> serde_json::Value {
        let gates: Vec<serde_json::Value> = self
            .gates
            .iter()
            .zip(&self.param_of_gate)
            .map(|(g, p)| {
                let mut v = serde_json::to_value(g).unwrap_or_default();
                if let serde_json::Value::Object(map) = &mut v {
                    map.insert("param".into(), serde_json::json!(p));
                }
                v
            })
            .collect();
        serde_json::json!({
            "num_qubits": self.num_qubits,
            "num_params": self.num_params,
            "gates": gates,
        })
    }
}

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::ParamCountMismatch { expected, got });
    }
    Ok(())
}

pub fn build_centralizer_layer(lat: &HoneycombTorus, layer_params: &[f64]) -> Result<Vec<Gate>> {
    let generators = centralizer_generators(lat)?;
    check_len(generators.len(), layer_params.len())?;
    Ok(generators
        .into_iter()
        .zip(layer_params)
        .map(|(k, &theta)| Gate::rotation(k, theta))
        .collect())
}

fn vortex_layer_len(lat: &HoneycombTorus, kind: VortexLayerKind) -> usize {
    AnsatzSpec::with_vortex_layers(1, kind).layout(lat).per_layer() - 3 * lat.num_sites() / 2
}

/// Controlled-rotation generators: `(control i, P^a_j)` per bond, in bond order.
fn controlled_generators(lat: &HoneycombTorus) -> Result<Vec<(usize, PauliString)>> {
    let n = lat.num_sites();
    lat.bonds()
        .iter()
        .map(|b| Ok((b.i, PauliString::single(n, b.j, b.axis)?)))
        .collect()
}

pub fn build_vortex_layer(lat: &HoneycombTorus, layer_params: &[f64], kind: VortexLayerKind) -> Result<Vec<Gate>> {
    check_len(vortex_layer_len(lat, kind), layer_params.len())?;
    let n = lat.num_sites();
    let mut gates = Vec::with_capacity(layer_params.len());
    let mut theta = layer_params.iter().copied();
    for site in 0..n {
        for axis in Axis::ALL {
            gates.push(Gate::rotation(PauliString::single(n, site, axis)?, theta.next().unwrap_or(0.0)));
        }
    }
    if kind == VortexLayerKind::SingleSitePlusControlled {
        for (control, pauli) in controlled_generators(lat)? {
            gates.push(Gate::ControlledRotation {
                control,
                pauli,
                angle: theta.next().unwrap_or(0.0),
            });
        }
    }
    Ok(gates)
}

/// Full circuit; parameter `k` drives exactly the gate at layout slot `k`.
pub fn assemble(lat: &HoneycombTorus, spec: &AnsatzSpec, theta: &[f64]) -> Result<ParamCircuit> {
    let layout = spec.layout(lat);
    check_len(layout.len(), theta.len())?;
    let mut circuit = ParamCircuit::new(lat.num_sites(), layout.len());
    let per = layout.per_layer();
    let nc = 3 * lat.num_sites() / 2;
    for layer in 0..spec.depth {
        let base = layer * per;
        let block = &theta[base..base + per];
        for (k, g) in build_centralizer_layer(lat, &block[..nc])?.into_iter().enumerate() {
            circuit.push_param(g, base + k);
        }
        if let Some(kind) = spec.vortex_layers {
            for (k, g) in build_vortex_layer(lat, &block[nc..], kind)?.into_iter().enumerate() {
                circuit.push_param(g, base + nc + k);
            }
        }
    }
    Ok(circuit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::build_torus;
    use crate::prep::{prepare_sector, SectorSpec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_theta(len: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..len).map(|_| rng.gen_range(-3.0..3.0)).collect()
    }

    #[test]
    fn parameter_counts() {
        let lat8 = build_torus(2, 2).unwrap();
        let lat12 = build_torus(2, 3).unwrap();
        let c = assemble(&lat8, &AnsatzSpec::centralizer(1), &vec![0.0; 12]).unwrap();
        assert_eq!((c.gates().len(), c.num_params()), (12, 12));
        assert_eq!(AnsatzSpec::centralizer(2).num_params(&lat12), 36);
        let spec = AnsatzSpec::with_vortex_layers(3, VortexLayerKind::SingleSiteRotations);
        assert_eq!(spec.num_params(&lat12), 162);
        let spec = AnsatzSpec::with_vortex_layers(2, VortexLayerKind::SingleSitePlusControlled);
        assert_eq!(spec.num_params(&lat12), 2 * (18 + 36 + 18));
        assert!(matches!(
            assemble(&lat8, &AnsatzSpec::centralizer(1), &[0.0; 11]),
            Err(Error::ParamCountMismatch { .. })
        ));
    }

    #[test]
    fn layer_builders_check_lengths() {
        let lat = build_torus(2, 2).unwrap();
        assert!(build_centralizer_layer(&lat, &[0.0; 11]).is_err());
        assert!(build_vortex_layer(&lat, &[0.0; 24], VortexLayerKind::SingleSiteRotations).is_ok());
        assert!(build_vortex_layer(&lat, &[0.0; 24], VortexLayerKind::SingleSitePlusControlled).is_err());
        assert!(build_vortex_layer(&lat, &[0.0; 36], VortexLayerKind::SingleSitePlusControlled).is_ok());
    }

    #[test]
    fn layout_is_a_bijection() {
        let lat = build_torus(2, 3).unwrap();
        for kind in [
            None,
            Some(VortexLayerKind::SingleSiteRotations),
            Some(VortexLayerKind::SingleSitePlusControlled),
        ] {
            let layout = AnsatzSpec { depth: 3, vortex_layers: kind }.layout(&lat);
            for k in 0..layout.len() {
                let slot = layout.slot(k).unwrap();
                assert_eq!(layout.index_of(slot), Some(k));
            }
            assert!(layout.slot(layout.len()).is_none());
        }
    }

    #[test]
    fn zero_angles_are_identity() {
        let lat = build_torus(2, 2).unwrap();
        let spec = AnsatzSpec::with_vortex_layers(2, VortexLayerKind::SingleSitePlusControlled);
        let c = assemble(&lat, &spec, &vec![0.0; spec.num_params(&lat)]).unwrap();
        let prep = prepare_sector(&lat, SectorSpec { vortex_count: 0, loop_signs: [1, 1] }, 3).unwrap();
        let mut s = prep.state.clone();
        c.apply(&mut s).unwrap();
        for (a, b) in s.amplitudes().iter().zip(prep.state.amplitudes()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn centralizer_layers_preserve_sector() {
        let lat = build_torus(2, 3).unwrap();
        let prep = prepare_sector(&lat, SectorSpec { vortex_count: 2, loop_signs: [-1, 1] }, 9).unwrap();
        let stabs = lat.stabilizer_strings().unwrap();
        let before: Vec<f64> = stabs.iter().map(|s| prep.state.pauli_expectation(s).unwrap().re).collect();
        let spec = AnsatzSpec::centralizer(2);
        for seed in 0..100 {
            let c = assemble(&lat, &spec, &random_theta(spec.num_params(&lat), seed)).unwrap();
            let mut s = prep.state.clone();
            c.apply(&mut s).unwrap();
            for (st, b) in stabs.iter().zip(&before) {
                assert!((s.pauli_expectation(st).unwrap().re - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn single_site_pi_rotation_flips_two_plaquettes() {
        let lat = build_torus(2, 3).unwrap();
        let prep = prepare_sector(&lat, SectorSpec { vortex_count: 0, loop_signs: [1, 1] }, 0).unwrap();
        let mut s = prep.state.clone();
        let site = 4;
        s.apply_gate(&Gate::rotation(PauliString::single(12, site, Axis::Z).unwrap(), std::f64::consts::PI))
            .unwrap();
        let flipped = (0..lat.num_plaquettes())
            .filter(|&p| s.pauli_expectation(&lat.plaquette_string(p).unwrap()).unwrap().re < -0.999)
            .count();
        assert_eq!(flipped, 2);
    }

    #[test]
    fn vortex_layers_give_fractional_vortex_number() {
        let lat = build_torus(2, 2).unwrap();
        let prep = prepare_sector(&lat, SectorSpec { vortex_count: 0, loop_signs: [1, 1] }, 0).unwrap();
        let spec = AnsatzSpec::with_vortex_layers(1, VortexLayerKind::SingleSitePlusControlled);
        let theta: Vec<f64> = random_theta(spec.num_params(&lat), 4).iter().map(|t| t * 0.05).collect();
        let c = assemble(&lat, &spec, &theta).unwrap();
        let mut s = prep.state.clone();
        c.apply(&mut s).unwrap();
        let w = s.expectation(&lat.vortex_count_operator().unwrap()).unwrap();
        assert!(w > 1e-4 && (w - w.round()).abs() > 1e-4, "W_tot = {w}");
    }

    #[test]
    fn set_params_round_trip() {
        let lat = build_torus(2, 2).unwrap();
        let spec = AnsatzSpec::with_vortex_layers(2, VortexLayerKind::SingleSitePlusControlled);
        let theta = random_theta(spec.num_params(&lat), 1);
        let mut c = assemble(&lat, &spec, &vec![0.0; theta.len()]).unwrap();
        c.set_params(&theta).unwrap();
        assert_eq!(c.params(), theta);
        let dump = c.dump();
        assert_eq!(dump["gates"].as_array().unwrap().len(), c.gates().len());
        assert_eq!(dump["gates"][0]["kind"], "pauli_rotation");
    }
}
