//! Config-driven batch runner: `run`, `verify`, `lattice-dump` and
//! `noise-report`.

pub mod config;
pub mod experiments;
pub mod verify;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use config::{Experiment, OracleMode, RunConfig};
pub use verify::{verify, Check, Status, VerifyReport};

use crate::error::{Error, Result};
use crate::lattice::build_torus;

pub const MEM_CAP_ENV: &str = "KITAEV_MEM_CAP_MIB";
pub const DEFAULT_MEM_CAP_MIB: u64 = 4096;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RESOURCE: i32 = 3;
pub const EXIT_VERIFY: i32 = 4;

pub const MANIFEST: &str = "manifest.json";
pub const CONFIG_COPY: &str = "config.toml";
pub const SUMMARY: &str = "summary.json";

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::ConfigInvalid(_) => EXIT_CONFIG,
        Error::ResourceLimit(_) => EXIT_RESOURCE,
        Error::MissingArtifacts(_) => EXIT_VERIFY,
        _ => EXIT_ERROR,
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes named files into one directory and records their hashes. Names
/// are plain file names; anything with a path separator is refused.
pub struct ArtifactWriter {
    dir: PathBuf,
    hashes: BTreeMap<String, String>,
}

impl ArtifactWriter {
    pub fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            hashes: BTreeMap::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        if name.is_empty() || name.contains(['/', '\\']) || name.starts_with('.') {
            return Err(Error::ConfigInvalid(format!("refusing artifact name {name:?}")));
        }
        fs::write(self.dir.join(name), bytes)?;
        self.hashes.insert(name.to_string(), sha256_hex(bytes));
        Ok(())
    }

    pub fn write_json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.write(name, &bytes)
    }

    pub fn hashes(&self) -> &BTreeMap<String, String> {
        &self.hashes
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub experiment: Experiment,
    pub crate_version: String,
    pub config_sha256: String,
    pub threads: usize,
    pub wall_time_s: f64,
    /// File name to SHA-256, excluding the manifest itself.
    pub artifacts: BTreeMap<String, String>,
}

impl Manifest {
    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST);
        let text = fs::read_to_string(&path)
            .map_err(|_| Error::MissingArtifacts(format!("{} not found", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::MissingArtifacts(format!("{}: {e}", path.display())))
    }
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub manifest: Manifest,
    pub summary: serde_json::Value,
}

pub fn memory_cap_bytes() -> Result<u64> {
    let mib = match std::env::var(MEM_CAP_ENV) {
        Ok(v) => v
            .trim()
            .parse::<u64>()
            .map_err(|_| Error::ConfigInvalid(format!("{MEM_CAP_ENV} must be a whole number of MiB, got {v:?}")))?,
        Err(_) => DEFAULT_MEM_CAP_MIB,
    };
    Ok(mib << 20)
}

pub fn effective_workers(cfg: &RunConfig) -> usize {
    cfg.workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Rough peak of simultaneously live state vectors: six per concurrent
/// training job, the Krylov basis of the oracle, and for sweeps the stored
/// ground spaces and optima of every grid point.
pub fn estimate_memory(cfg: &RunConfig) -> u64 {
    let state = 16u64 << cfg.num_sites();
    let jobs = effective_workers(cfg).min(match cfg.experiment {
        Experiment::GsFieldSweep => cfg.seeds.len() * cfg.sweep.clone().unwrap_or_default().grid().len(),
        Experiment::ExactSpectrum | Experiment::NoiseReport => 1,
        _ => cfg.seeds.len(),
    }) as u64;
    let mut vectors = match cfg.experiment {
        Experiment::ExactSpectrum => 0,
        Experiment::NoiseReport => 2,
        _ => 6 * jobs + cfg.seeds.len() as u64,
    };
    let oracle = cfg.oracle_mode() != OracleMode::None && cfg.experiment != Experiment::NoiseReport;
    if oracle {
        vectors += crate::exact::SolverOptions::default().basis_size as u64 + 2 * cfg.oracle.k as u64 + 4;
    }
    if cfg.experiment == Experiment::GsFieldSweep {
        let points = cfg.sweep.clone().unwrap_or_default().grid().len() as u64;
        vectors += points * (2 + if oracle { cfg.oracle.k as u64 + 2 } else { 0 });
    }
    if cfg.experiment == Experiment::Dynamics {
        vectors += 48;
    }
    state * vectors
}

pub fn check_memory(cfg: &RunConfig) -> Result<()> {
    let need = estimate_memory(cfg);
    let cap = memory_cap_bytes()?;
    if need > cap {
        return Err(Error::ResourceLimit(format!(
            "{} sites need about {} MiB, above the {} MiB cap (set {MEM_CAP_ENV} to raise it)",
            cfg.num_sites(),
            need >> 20,
            cap >> 20
        )));
    }
    Ok(())
}

fn with_pool<T: Send>(cfg: &RunConfig, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(effective_workers(cfg))
        .build()
        .map_err(|e| Error::ResourceLimit(format!("cannot start worker pool: {e}")))?;
    pool.install(f)
}

/// Loads, validates and runs a config file.
pub fn run(path: &Path) -> Result<RunOutcome> {
    let (cfg, text) = RunConfig::load(path)?;
    run_config(&cfg, &text)
}

/// Runs a validated config. `text` is stored verbatim next to the results.
/// Nothing is written until validation and the memory check pass.
pub fn run_config(cfg: &RunConfig, text: &str) -> Result<RunOutcome> {
    cfg.validate()?;
    check_memory(cfg)?;
    let lat = cfg.lattice()?;
    let start = Instant::now();
    let mut out = ArtifactWriter::create(&cfg.output_dir)?;
    out.write(CONFIG_COPY, text.as_bytes())?;
    let summary = with_pool(cfg, || {
        let out = &mut out;
        match cfg.experiment {
            Experiment::GsZeroField => experiments::gs_zero_field(cfg, &lat, out),
            Experiment::GsFieldSweep => experiments::gs_field_sweep(cfg, &lat, out),
            Experiment::Dynamics => experiments::dynamics(cfg, &lat, out),
            Experiment::ExactSpectrum => experiments::exact_spectrum(cfg, &lat, out),
            Experiment::NoiseReport => experiments::noise_report(cfg, &lat, out),
        }
    })?;
    out.write_json(SUMMARY, &summary)?;
    let manifest = Manifest {
        experiment: cfg.experiment,
        crate_version: env!("CARGO_PKG_VERSION").to_string(),
        config_sha256: sha256_hex(text.as_bytes()),
        threads: effective_workers(cfg),
        wall_time_s: start.elapsed().as_secs_f64(),
        artifacts: out.hashes().clone(),
    };
    let mut bytes = serde_json::to_vec_pretty(&manifest)?;
    bytes.push(b'\n');
    fs::write(out.dir().join(MANIFEST), bytes)?;
    Ok(RunOutcome {
        dir: cfg.output_dir.clone(),
        manifest,
        summary,
    })
}

/// Lattice export as pretty JSON.
pub fn lattice_dump(lx: usize, ly: usize) -> Result<String> {
    let lat = build_torus(lx, ly).map_err(|e| Error::ConfigInvalid(format!("lattice: {e}")))?;
    Ok(serde_json::to_string_pretty(&lat.export())?)
}

/// Gate budget table for a config, computed without optimization and
/// without writing anything.
pub fn noise_report(path: &Path) -> Result<String> {
    let (cfg, _) = RunConfig::load(path)?;
    if cfg.ansatz.is_none() {
        return Err(Error::ConfigInvalid("noise-report needs an [ansatz] section".into()));
    }
    let mut small = cfg.clone();
    small.experiment = Experiment::NoiseReport;
    check_memory(&small)?;
    let lat = cfg.lattice()?;
    let budget = experiments::protocol_budget(&cfg, &lat)?;
    Ok(experiments::budget_text(&cfg, &budget))
}
