//! TOML run configuration. Everything is validated before any compute.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::ansatz::AnsatzSpec;
use crate::error::{Error, Result};
use crate::lattice::{build_torus, BondPair, HoneycombTorus, KitaevParams};
use crate::prep::SectorPattern;
use crate::statevector::MAX_QUBITS;
use crate::vqe::OptimizerConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    GsZeroField,
    GsFieldSweep,
    Dynamics,
    ExactSpectrum,
    NoiseReport,
}

impl Experiment {
    pub fn name(&self) -> &'static str {
        match self {
            Experiment::GsZeroField => "gs-zero-field",
            Experiment::GsFieldSweep => "gs-field-sweep",
            Experiment::Dynamics => "dynamics",
            Experiment::ExactSpectrum => "exact-spectrum",
            Experiment::NoiseReport => "noise-report",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeConfig {
    pub lx: usize,
    pub ly: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CouplingConfig {
    /// Isotropic coupling; `jx`, `jy`, `jz` override per axis.
    pub j: f64,
    pub jx: Option<f64>,
    pub jy: Option<f64>,
    pub jz: Option<f64>,
    /// Uniform field `[h^x, h^y, h^z]`.
    pub field: [f64; 3],
}

impl Default for CouplingConfig {
    fn default() -> Self {
        Self {
            j: -1.0,
            jx: None,
            jy: None,
            jz: None,
            field: [0.0; 3],
        }
    }
}

impl CouplingConfig {
    pub fn params(&self, num_sites: usize) -> KitaevParams {
        let mut p = KitaevParams::isotropic(self.j, num_sites).with_uniform_field(self.field);
        p.jx = self.jx.unwrap_or(self.j);
        p.jy = self.jy.unwrap_or(self.j);
        p.jz = self.jz.unwrap_or(self.j);
        p
    }

    pub fn zero_field(&self, num_sites: usize) -> KitaevParams {
        let mut p = self.params(num_sites);
        p.field.iter_mut().for_each(|f| *f = [0.0; 3]);
        p
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SectorKind {
    VortexFree,
    AllVortices,
    /// Lowest zero-field oracle energy among the vortex-free and
    /// all-vortex patterns in every loop sector.
    Auto,
    /// `plaquette_signs` given explicitly.
    Explicit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SectorConfig {
    pub kind: SectorKind,
    pub loop_signs: [i8; 2],
    pub plaquette_signs: Option<Vec<i8>>,
}

impl Default for SectorConfig {
    fn default() -> Self {
        Self {
            kind: SectorKind::Auto,
            loop_signs: [1, 1],
            plaquette_signs: None,
        }
    }
}

impl SectorConfig {
    /// The fixed pattern, or `None` for [`SectorKind::Auto`].
    pub fn pattern(&self, lat: &HoneycombTorus) -> Result<Option<SectorPattern>> {
        let p = match self.kind {
            SectorKind::Auto => return Ok(None),
            SectorKind::VortexFree => SectorPattern::vortex_free(lat, self.loop_signs),
            SectorKind::AllVortices => SectorPattern::all_vortices(lat, self.loop_signs),
            SectorKind::Explicit => SectorPattern {
                plaquette_signs: self
                    .plaquette_signs
                    .clone()
                    .ok_or_else(|| Error::ConfigInvalid("sector.plaquette_signs required for kind = \"explicit\"".into()))?,
                loop_signs: self.loop_signs,
            },
        };
        p.validate(lat)
            .map_err(|e| Error::ConfigInvalid(format!("sector: {e}")))?;
        Ok(Some(p))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleMode {
    /// Ground space restricted to the training sector.
    Sector,
    /// Ground space of the full Hilbert space.
    Global,
    None,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleConfig {
    /// Defaults to `sector` at zero field and `global` otherwise.
    pub mode: Option<OracleMode>,
    /// Eigenpairs requested beyond the degenerate ground space.
    pub k: usize,
    pub degeneracy_tol: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            mode: None,
            k: 1,
            degeneracy_tol: crate::exact::DEFAULT_DEGENERACY_TOL,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub hz_start: f64,
    pub hz_stop: f64,
    pub hz_step: f64,
    /// Isotropic couplings to sweep; at most one of each sign.
    pub couplings: Vec<f64>,
    /// Re-optimize each point from its neighbours' optimum (downward, then
    /// upward) and keep the lower energy.
    pub continuation: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            hz_start: 0.0,
            hz_stop: 1.5,
            hz_step: 0.1,
            couplings: vec![-1.0, 1.0],
            continuation: true,
        }
    }
}

impl SweepConfig {
    pub fn grid(&self) -> Vec<f64> {
        let n = ((self.hz_stop - self.hz_start) / self.hz_step + 1e-9).floor() as usize;
        (0..=n).map(|k| self.hz_start + k as f64 * self.hz_step).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairConfig {
    pub name: String,
    pub first: [usize; 2],
    pub second: [usize; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DynamicsConfig {
    /// Field after the quench, along z.
    pub quench_hz: f64,
    pub dt: f64,
    pub steps: usize,
    pub order: u8,
    /// Defaults to the lattice's `horz` and `diag` pairs.
    pub pairs: Option<Vec<PairConfig>>,
    /// Also propagate the oracle ground state exactly.
    pub exact_reference: bool,
}

impl Default for DynamicsConfig {
    fn default() -> Self {
        Self {
            quench_hz: 0.5,
            dt: 0.1,
            steps: 10,
            order: 2,
            pairs: None,
            exact_reference: true,
        }
    }
}

impl DynamicsConfig {
    pub fn pairs(&self, lat: &HoneycombTorus) -> Vec<(String, BondPair)> {
        match &self.pairs {
            Some(p) => p
                .iter()
                .map(|c| {
                    (
                        c.name.clone(),
                        BondPair {
                            first: (c.first[0], c.first[1]),
                            second: (c.second[0], c.second[1]),
                        },
                    )
                })
                .collect(),
            None => lat
                .default_bond_pairs()
                .into_iter()
                .map(|(n, p)| (n.to_string(), p))
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseConfig {
    /// `[ε1, ε2]` pairs to evaluate.
    pub rates: Vec<[f64; 2]>,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            rates: vec![[1e-4, 1e-3], [1e-5, 1e-4]],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Thresholds {
    /// Defaults to 1e-6 up to 12 sites and 1e-4 beyond.
    pub max_infidelity: Option<f64>,
    /// `ΔE / |E_GS|`; defaults to 1e-6 up to 12 sites, unchecked beyond.
    pub max_relative_delta_e: Option<f64>,
    pub max_stabilizer_drift: f64,
    pub variational_slack: f64,
    pub max_magnetization_error: f64,
    pub max_eta_error: f64,
    pub max_correlator_deviation: f64,
    pub static_identity_tol: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            max_infidelity: None,
            max_relative_delta_e: None,
            max_stabilizer_drift: 1e-9,
            variational_slack: 1e-9,
            max_magnetization_error: 0.05,
            max_eta_error: 0.1,
            max_correlator_deviation: 0.05,
            static_identity_tol: 1e-12,
        }
    }
}

impl Thresholds {
    pub fn infidelity(&self, num_sites: usize) -> f64 {
        self.max_infidelity
            .unwrap_or(if num_sites <= 12 { 1e-6 } else { 1e-4 })
    }

    pub fn relative_delta_e(&self, num_sites: usize) -> Option<f64> {
        self.max_relative_delta_e
            .or(if num_sites <= 12 { Some(1e-6) } else { None })
    }
}

fn default_seeds() -> Vec<u64> {
    vec![0, 1, 2, 3, 4]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub output_dir: PathBuf,
    pub lattice: LatticeConfig,
    #[serde(default)]
    pub couplings: CouplingConfig,
    #[serde(default)]
    pub sector: SectorConfig,
    pub ansatz: Option<AnsatzSpec>,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub oracle: OracleConfig,
    pub sweep: Option<SweepConfig>,
    pub dynamics: Option<DynamicsConfig>,
    #[serde(default)]
    pub noise: NoiseConfig,
    #[serde(default)]
    pub thresholds: Thresholds,
    /// Worker threads for seed and grid sweeps; defaults to the number of
    /// available cores.
    pub workers: Option<usize>,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::ConfigInvalid(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<(Self, String)> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::ConfigInvalid(format!("cannot read {}: {e}", path.display())))?;
        Ok((Self::from_toml(&text)?, text))
    }

    pub fn lattice(&self) -> Result<HoneycombTorus> {
        build_torus(self.lattice.lx, self.lattice.ly).map_err(|e| Error::ConfigInvalid(format!("lattice: {e}")))
    }

    pub fn num_sites(&self) -> usize {
        2 * self.lattice.lx * self.lattice.ly
    }

    pub fn oracle_mode(&self) -> OracleMode {
        self.oracle.mode.unwrap_or(match self.experiment {
            Experiment::GsFieldSweep | Experiment::ExactSpectrum => OracleMode::Global,
            _ => OracleMode::Sector,
        })
    }

    pub fn require_ansatz(&self) -> Result<AnsatzSpec> {
        self.ansatz
            .ok_or_else(|| Error::ConfigInvalid(format!("[ansatz] is required for {}", self.experiment.name())))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::ConfigInvalid(m));
        let lat = self.lattice()?;
        let n = lat.num_sites();
        if n > MAX_QUBITS {
            return Err(Error::ResourceLimit(format!("{n} sites exceeds the {MAX_QUBITS}-qubit engine limit")));
        }
        if self.output_dir.as_os_str().is_empty() {
            return bad("output_dir must not be empty".into());
        }
        let all = [self.couplings.j, self.couplings.field[0], self.couplings.field[1], self.couplings.field[2]];
        if all.iter().chain(self.couplings.jx.iter()).chain(self.couplings.jy.iter()).chain(self.couplings.jz.iter()).any(|v| !v.is_finite()) {
            return bad("couplings must be finite".into());
        }
        if self.seeds.is_empty() {
            return bad("seeds must not be empty".into());
        }
        if self.workers == Some(0) {
            return bad("workers must be >= 1".into());
        }
        self.optimizer.validate()?;
        self.sector.pattern(&lat)?;
        if self.oracle.degeneracy_tol <= 0.0 {
            return bad("oracle.degeneracy_tol must be > 0".into());
        }
        for r in &self.noise.rates {
            if r.iter().any(|e| !(0.0..=1.0).contains(e)) {
                return bad(format!("noise.rates entries must lie in [0, 1], got {r:?}"));
            }
        }
        if self.oracle_mode() == OracleMode::Sector
            && matches!(self.experiment, Experiment::GsFieldSweep)
        {
            return bad("a field breaks the sector symmetry; use oracle.mode = \"global\" or \"none\"".into());
        }
        if self.oracle_mode() == OracleMode::Sector
            && self.experiment == Experiment::ExactSpectrum
            && (self.sector.kind == SectorKind::Auto || self.couplings.field != [0.0; 3])
        {
            return bad("a sector-restricted spectrum needs zero field and a fixed sector.kind".into());
        }
        match self.experiment {
            Experiment::GsZeroField => {
                let a = self.require_ansatz()?;
                if a.vortex_layers.is_some() {
                    return bad("gs-zero-field uses a centralizer-only ansatz; remove ansatz.vortex_layers".into());
                }
                if self.couplings.field != [0.0; 3] {
                    return bad("gs-zero-field requires couplings.field = [0, 0, 0]".into());
                }
                if a.depth == 0 {
                    return bad("ansatz.depth must be >= 1".into());
                }
            }
            Experiment::GsFieldSweep => {
                let a = self.require_ansatz()?;
                if a.vortex_layers.is_none() {
                    return bad("gs-field-sweep needs ansatz.vortex_layers".into());
                }
                let s = self
                    .sweep
                    .as_ref()
                    .ok_or_else(|| Error::ConfigInvalid("[sweep] is required for gs-field-sweep".into()))?;
                if !(s.hz_step > 0.0) || s.hz_stop < s.hz_start {
                    return bad("sweep needs hz_step > 0 and hz_stop >= hz_start".into());
                }
                if s.couplings.is_empty()
                    || s.couplings.iter().any(|j| *j == 0.0 || !j.is_finite())
                    || s.couplings.iter().filter(|j| **j < 0.0).count() > 1
                    || s.couplings.iter().filter(|j| **j > 0.0).count() > 1
                {
                    return bad("sweep.couplings takes at most one negative (FM) and one positive (AFM) value".into());
                }
            }
            Experiment::Dynamics => {
                let a = self.require_ansatz()?;
                if a.vortex_layers.is_some() {
                    return bad("dynamics prepares the zero-field ground state; remove ansatz.vortex_layers".into());
                }
                let d = self
                    .dynamics
                    .as_ref()
                    .ok_or_else(|| Error::ConfigInvalid("[dynamics] is required for the dynamics experiment".into()))?;
                if self.couplings.field != [0.0; 3] {
                    return bad("dynamics starts from zero field; set the quench via dynamics.quench_hz".into());
                }
                let q = crate::dynamics::QuenchSpec {
                    hamiltonian: crate::pauli::PauliSum::new(n),
                    dt: d.dt,
                    steps: d.steps,
                    order: d.order,
                    pairs: d.pairs(&lat),
                };
                q.validate(&lat).map_err(|e| match e {
                    Error::ConfigInvalid(_) => e,
                    other => Error::ConfigInvalid(format!("dynamics: {other}")),
                })?;
                for p in d.pairs(&lat) {
                    if p.0.is_empty() || !p.0.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') {
                        return bad(format!("dynamics pair name {:?} must be alphanumeric, '-' or '_'", p.0));
                    }
                }
                if d.exact_reference && self.oracle_mode() == OracleMode::None {
                    return bad("dynamics.exact_reference needs an oracle".into());
                }
                if d.exact_reference && n > crate::dynamics::EXACT_PROPAGATION_LIMIT {
                    return bad(format!(
                        "dynamics.exact_reference needs at most {} sites",
                        crate::dynamics::EXACT_PROPAGATION_LIMIT
                    ));
                }
            }
            Experiment::ExactSpectrum => {
                if self.oracle.k == 0 {
                    return bad("oracle.k must be >= 1".into());
                }
            }
            Experiment::NoiseReport => {
                self.require_ansatz()?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
experiment = "gs-zero-field"
output_dir = "out"
[lattice]
lx = 2
ly = 2
[ansatz]
depth = 2
"#;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let c = RunConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(c.seeds, vec![0, 1, 2, 3, 4]);
        assert_eq!(c.optimizer.epochs, 500);
        assert_eq!(c.couplings.j, -1.0);
        assert_eq!(c.thresholds.infidelity(8), 1e-6);
    }

    #[test]
    fn unknown_keys_are_rejected_with_location() {
        let text = MINIMAL.replace("depth = 2", "depth = 2\ndepht = 3");
        match RunConfig::from_toml(&text) {
            Err(Error::ConfigInvalid(m)) => assert!(m.contains("depht") && m.contains("line"), "{m}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn semantic_errors() {
        for (from, to) in [
            ("lx = 2", "lx = 1"),
            ("depth = 2", "depth = 2\nvortex_layers = \"single_site_rotations\""),
            ("[lattice]", "seeds = []\n[lattice]"),
            ("[lattice]", "[optimizer]\nlearning_rate = -1.0\n[lattice]"),
        ] {
            let text = MINIMAL.replace(from, to);
            assert!(matches!(RunConfig::from_toml(&text), Err(Error::ConfigInvalid(_))), "{to}");
        }
        let text = MINIMAL.replace("experiment = \"gs-zero-field\"", "experiment = \"dynamics\"");
        assert!(RunConfig::from_toml(&text).is_err());
    }

    #[test]
    fn sweep_grid() {
        let g = SweepConfig::default().grid();
        assert_eq!(g.len(), 16);
        assert!((g[15] - 1.5).abs() < 1e-12);
    }
}
