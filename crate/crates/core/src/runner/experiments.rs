//! The five batch experiments. Each returns a summary and writes its
//! artifacts through an [`ArtifactWriter`].

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use super::config::{Experiment, OracleMode, RunConfig, SectorKind};
use super::ArtifactWriter;
use crate::ansatz::{assemble, AnsatzSpec};
use crate::dynamics::{correlators, static_observables, trotter_gates, CorrelatorSeries, Propagation, QuenchSpec};
use crate::error::{Error, Result};
use crate::exact::{solve, SolverOptions, SpectrumResult};
use crate::lattice::{build_hamiltonian, HoneycombTorus, KitaevParams};
use crate::noise::{compile_circuit, compile_dynamics, compile_prep, estimate_fidelity, GateBudget};
use crate::pauli::PauliSum;
use crate::prep::{prepare_pattern, Prepared, SectorPattern, LOOP_SECTORS};
use crate::statevector::StateVector;
use crate::vqe::{best_run, train_from, train_seeds, OptimizerConfig, TrainOutcome};

/// Oracle ground space for `h`, restricted to `pattern`'s sector when given.
pub fn oracle(
    lat: &HoneycombTorus,
    h: &PauliSum,
    pattern: Option<&SectorPattern>,
    k: usize,
    degeneracy_tol: f64,
) -> Result<SpectrumResult> {
    let constraints = match pattern {
        Some(p) => p.constraints(lat)?,
        None => Vec::new(),
    };
    let opts = SolverOptions {
        k,
        degeneracy_tol,
        constraints,
        ..Default::default()
    };
    solve(h, lat.num_sites(), &opts)
}

/// Lowest zero-field sector among the vortex-free and all-vortex patterns
/// in each loop sector. Ties keep the first candidate.
pub fn auto_sector(lat: &HoneycombTorus, h0: &PauliSum) -> Result<(SectorPattern, f64)> {
    let mut best: Option<(SectorPattern, f64)> = None;
    for loops in LOOP_SECTORS {
        for pat in [SectorPattern::vortex_free(lat, loops), SectorPattern::all_vortices(lat, loops)] {
            if pat.validate(lat).is_err() {
                continue;
            }
            let e = match oracle(lat, h0, Some(&pat), 1, crate::exact::DEFAULT_DEGENERACY_TOL) {
                Ok(r) => r.ground_energy(),
                Err(Error::UnreachableSector(_)) => continue,
                Err(e) => return Err(e),
            };
            if best.as_ref().map_or(true, |b| e < b.1 - 1e-9) {
                best = Some((pat, e));
            }
        }
    }
    best.ok_or_else(|| Error::UnreachableSector("no candidate sector is reachable".into()))
}

fn resolve_sector(cfg: &RunConfig, lat: &HoneycombTorus, h0: &PauliSum) -> Result<SectorPattern> {
    match cfg.sector.pattern(lat)? {
        Some(p) => Ok(p),
        None => Ok(auto_sector(lat, h0)?.0),
    }
}

fn budget_json(budget: &GateBudget, rates: &[[f64; 2]]) -> Value {
    let mut v = budget.to_json();
    v["fidelity"] = rates
        .iter()
        .map(|r| json!({ "eps1": r[0], "eps2": r[1], "fidelity": estimate_fidelity(budget, r[0], r[1]) }))
        .collect();
    v
}

fn oracle_json(mode: OracleMode, o: Option<&SpectrumResult>) -> Value {
    match o {
        Some(o) => json!({
            "mode": mode,
            "ground_energy": o.ground_energy(),
            "degeneracy": o.degeneracy(),
            "eigenvalues": o.eigenvalues,
        }),
        None => json!({ "mode": mode }),
    }
}

/// Zero-field training shared by `gs-zero-field` and `dynamics`.
struct ZeroField {
    pattern: SectorPattern,
    oracle: Option<SpectrumResult>,
    runs: Vec<TrainOutcome>,
    best: usize,
}

fn zero_field_training(cfg: &RunConfig, lat: &HoneycombTorus, spec: &AnsatzSpec) -> Result<ZeroField> {
    let n = lat.num_sites();
    let h0 = build_hamiltonian(lat, &cfg.couplings.zero_field(n))?;
    let pattern = resolve_sector(cfg, lat, &h0)?;
    let mode = cfg.oracle_mode();
    let oracle = match mode {
        OracleMode::None => None,
        OracleMode::Sector => Some(oracle(lat, &h0, Some(&pattern), cfg.oracle.k, cfg.oracle.degeneracy_tol)?),
        OracleMode::Global => Some(oracle(lat, &h0, None, cfg.oracle.k, cfg.oracle.degeneracy_tol)?),
    };
    let runs = train_seeds(lat, &pattern, spec, &h0, &cfg.optimizer, oracle.as_ref(), &cfg.seeds)?;
    let best = best_run(&runs).expect("at least one seed");
    Ok(ZeroField {
        pattern,
        oracle,
        runs,
        best,
    })
}

fn write_traces(out: &mut ArtifactWriter, cfg: &RunConfig, zf: &ZeroField) -> Result<Vec<Value>> {
    let mut runs = Vec::new();
    for (seed, r) in cfg.seeds.iter().zip(&zf.runs) {
        let name = format!("trace_seed{seed}.csv");
        let mut buf = Vec::new();
        r.trace.write_csv(&mut buf)?;
        out.write(&name, &buf)?;
        let mut s = r.trace.summary();
        s["seed"] = json!(seed);
        s["trace"] = json!(name);
        runs.push(s);
    }
    let reports: Vec<_> = zf.runs.iter().map(|r| &r.prep).collect();
    out.write_json("prep_report.json", &reports)?;
    Ok(runs)
}

pub fn gs_zero_field(cfg: &RunConfig, lat: &HoneycombTorus, out: &mut ArtifactWriter) -> Result<Value> {
    let spec = cfg.require_ansatz()?;
    let zf = zero_field_training(cfg, lat, &spec)?;
    let runs = write_traces(out, cfg, &zf)?;
    let best = &zf.runs[zf.best];
    let mut budget = compile_prep(lat, &best.prep)?;
    budget.merge(&compile_circuit(&best.circuit)?);
    out.write_json("budget.json", &budget_json(&budget, &cfg.noise.rates))?;
    let e_gs = zf.oracle.as_ref().map(|o| o.ground_energy());
    let delta_e = e_gs.map(|e| best.trace.final_energy() - e);
    Ok(json!({
        "experiment": Experiment::GsZeroField,
        "num_sites": lat.num_sites(),
        "sector": zf.pattern,
        "ansatz": spec,
        "num_params": spec.num_params(lat),
        "oracle": oracle_json(cfg.oracle_mode(), zf.oracle.as_ref()),
        "runs": runs,
        "best_seed": cfg.seeds[zf.best],
        "best_energy": best.trace.final_energy(),
        "best_infidelity": best.trace.final_infidelity(),
        "best_delta_e": delta_e,
        "best_relative_delta_e": delta_e.zip(e_gs).map(|(d, e)| d / e.abs()),
        "max_stabilizer_drift": zf.runs.iter().filter_map(|r| r.trace.max_stabilizer_drift()).reduce(f64::max),
    }))
}

/// One field value of a sweep.
#[derive(Clone, Debug, Serialize)]
pub struct SweepPoint {
    pub hz: f64,
    pub mz_variational: f64,
    pub mz_exact: Option<f64>,
    pub eta_variational: f64,
    pub eta_exact: Option<f64>,
    pub energy_variational: f64,
    pub energy_exact: Option<f64>,
    pub infidelity: Option<f64>,
    /// Lowest energy logged by any run at this point.
    pub min_energy: f64,
    /// `cold:<seed>`, `down` or `up`.
    pub source: String,
    pub theta: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct SweepOptions {
    pub spec: AnsatzSpec,
    pub optimizer: OptimizerConfig,
    pub seeds: Vec<u64>,
    pub grid: Vec<f64>,
    pub continuation: bool,
    pub oracle: bool,
    pub oracle_k: usize,
    pub degeneracy_tol: f64,
}

#[derive(Clone, Debug)]
pub struct SweepResult {
    pub coupling: f64,
    pub pattern: SectorPattern,
    pub prep: Prepared,
    pub points: Vec<SweepPoint>,
}

struct PointState {
    h: PauliSum,
    oracle: Option<SpectrumResult>,
    best: TrainOutcome,
    source: String,
    min_energy: f64,
}

impl PointState {
    fn offer(&mut self, r: TrainOutcome, source: String) {
        self.min_energy = self.min_energy.min(r.trace.min_energy());
        if r.trace.final_energy() < self.best.trace.final_energy() {
            self.best = r;
            self.source = source;
        }
    }
}

/// Variational sweep of a uniform z field for isotropic coupling `j`.
///
/// Every grid point is trained from cold random angles for each seed. With
/// `continuation`, each point is then re-trained from its upper neighbour's
/// optimum (sweeping down) and from its lower neighbour's (sweeping up); the
/// lowest final energy wins.
pub fn field_sweep(lat: &HoneycombTorus, j: f64, pattern: Option<SectorPattern>, opts: &SweepOptions) -> Result<SweepResult> {
    let n = lat.num_sites();
    let pattern = match pattern {
        Some(p) => p,
        None => auto_sector(lat, &build_hamiltonian(lat, &KitaevParams::isotropic(j, n))?)?.0,
    };
    let prep = prepare_pattern(lat, &pattern, opts.seeds[0])?;
    let hams = opts
        .grid
        .iter()
        .map(|&hz| build_hamiltonian(lat, &KitaevParams::isotropic(j, n).with_uniform_field([0.0, 0.0, hz])))
        .collect::<Result<Vec<_>>>()?;
    let oracles: Vec<Option<SpectrumResult>> = hams
        .par_iter()
        .map(|h| {
            if opts.oracle {
                oracle(lat, h, None, opts.oracle_k, opts.degeneracy_tol).map(Some)
            } else {
                Ok(None)
            }
        })
        .collect::<Result<_>>()?;
    let train = |k: usize, cfg: &OptimizerConfig, theta0: Option<&[f64]>| {
        train_from(
            lat,
            prep.state.clone(),
            prep.report.clone(),
            &opts.spec,
            &hams[k],
            cfg,
            theta0,
            oracles[k].as_ref(),
        )
    };
    let jobs: Vec<(usize, u64)> = (0..hams.len())
        .flat_map(|k| opts.seeds.iter().map(move |&s| (k, s)))
        .collect();
    let cold: Vec<TrainOutcome> = jobs
        .par_iter()
        .map(|&(k, seed)| train(k, &OptimizerConfig { seed, ..opts.optimizer.clone() }, None))
        .collect::<Result<_>>()?;
    let mut points: Vec<Option<PointState>> = (0..hams.len()).map(|_| None).collect();
    for ((k, seed), r) in jobs.into_iter().zip(cold) {
        match &mut points[k] {
            Some(p) => p.offer(r, format!("cold:{seed}")),
            slot => {
                *slot = Some(PointState {
                    h: hams[k].clone(),
                    oracle: oracles[k].clone(),
                    min_energy: r.trace.min_energy(),
                    best: r,
                    source: format!("cold:{seed}"),
                })
            }
        }
    }
    let mut points: Vec<PointState> = points.into_iter().map(|p| p.expect("every point has a seed")).collect();
    if opts.continuation && points.len() > 1 {
        let last = points.len() - 1;
        let warm_cfg = OptimizerConfig {
            seed: opts.seeds[0],
            ..opts.optimizer.clone()
        };
        for k in (0..last).rev() {
            let theta = points[k + 1].best.trace.theta_opt.clone();
            let r = train(k, &warm_cfg, Some(&theta))?;
            points[k].offer(r, "down".into());
        }
        for k in 1..=last {
            let theta = points[k - 1].best.trace.theta_opt.clone();
            let r = train(k, &warm_cfg, Some(&theta))?;
            points[k].offer(r, "up".into());
        }
    }
    let points = points
        .into_iter()
        .zip(&opts.grid)
        .map(|(p, &hz)| {
            let v = static_observables(&p.best.final_state, lat)?;
            let exact = match &p.oracle {
                Some(o) => {
                    let g = o.degeneracy() as f64;
                    let (mut m, mut eta) = (0.0, 0.0);
                    for s in o.ground_states() {
                        let so = static_observables(s, lat)?;
                        m += so.magnetization / g;
                        eta += so.eta / g;
                    }
                    Some((m, eta, o.ground_energy()))
                }
                None => None,
            };
            debug_assert_eq!(p.h.num_qubits(), n);
            Ok(SweepPoint {
                hz,
                mz_variational: v.magnetization,
                mz_exact: exact.map(|e| e.0),
                eta_variational: v.eta,
                eta_exact: exact.map(|e| e.1),
                energy_variational: p.best.trace.final_energy(),
                energy_exact: exact.map(|e| e.2),
                infidelity: p.best.trace.final_infidelity(),
                min_energy: p.min_energy,
                source: p.source,
                theta: p.best.trace.theta_opt,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        coupling: j,
        pattern,
        prep,
        points,
    })
}

pub const SWEEP_HEADER: &str =
    "h,mz_variational,mz_exact,eta_variational,eta_exact,energy_variational,energy_exact,infidelity,min_energy";

pub fn write_sweep_csv<W: std::io::Write>(points: &[SweepPoint], mut w: W) -> Result<()> {
    let opt = |v: Option<f64>| v.map(|x| format!("{x:.17e}")).unwrap_or_default();
    writeln!(w, "{SWEEP_HEADER}")?;
    for p in points {
        writeln!(
            w,
            "{:.6},{:.17e},{},{:.17e},{},{:.17e},{},{},{:.17e}",
            p.hz,
            p.mz_variational,
            opt(p.mz_exact),
            p.eta_variational,
            opt(p.eta_exact),
            p.energy_variational,
            opt(p.energy_exact),
            opt(p.infidelity),
            p.min_energy
        )?;
    }
    Ok(())
}

/// `fm` for ferromagnetic (negative) coupling, `afm` otherwise.
pub fn coupling_tag(j: f64) -> &'static str {
    if j < 0.0 {
        "fm"
    } else {
        "afm"
    }
}

pub fn gs_field_sweep(cfg: &RunConfig, lat: &HoneycombTorus, out: &mut ArtifactWriter) -> Result<Value> {
    let spec = cfg.require_ansatz()?;
    let sweep = cfg.sweep.clone().unwrap_or_default();
    let opts = SweepOptions {
        spec,
        optimizer: cfg.optimizer.clone(),
        seeds: cfg.seeds.clone(),
        grid: sweep.grid(),
        continuation: sweep.continuation,
        oracle: cfg.oracle_mode() != OracleMode::None,
        oracle_k: cfg.oracle.k,
        degeneracy_tol: cfg.oracle.degeneracy_tol,
    };
    let fixed = cfg.sector.pattern(lat)?;
    let mut summaries = Vec::new();
    let mut preps = Vec::new();
    let mut budget = None;
    for &j in &sweep.couplings {
        let r = field_sweep(lat, j, fixed.clone(), &opts)?;
        let tag = coupling_tag(j);
        let name = format!("sweep_{tag}.csv");
        let mut buf = Vec::new();
        write_sweep_csv(&r.points, &mut buf)?;
        out.write(&name, &buf)?;
        if budget.is_none() {
            let circuit = assemble(lat, &spec, &r.points[0].theta)?;
            let mut b = compile_prep(lat, &r.prep.report)?;
            b.merge(&compile_circuit(&circuit)?);
            budget = Some(b);
        }
        preps.push(json!({ "coupling": j, "report": r.prep.report }));
        summaries.push(json!({
            "coupling": j,
            "tag": tag,
            "csv": name,
            "sector": r.pattern,
            "points": r.points.iter().map(|p| json!({
                "hz": p.hz,
                "source": p.source,
                "infidelity": p.infidelity,
            })).collect::<Vec<_>>(),
            "max_infidelity": r.points.iter().filter_map(|p| p.infidelity).reduce(f64::max),
        }));
    }
    out.write_json("prep_report.json", &preps)?;
    if let Some(b) = budget {
        out.write_json("budget.json", &budget_json(&b, &cfg.noise.rates))?;
    }
    Ok(json!({
        "experiment": Experiment::GsFieldSweep,
        "num_sites": lat.num_sites(),
        "ansatz": spec,
        "num_params": spec.num_params(lat),
        "oracle": { "mode": cfg.oracle_mode() },
        "grid": opts.grid,
        "continuation": opts.continuation,
        "couplings": summaries,
    }))
}

fn correlator_name(name: &str, p: Propagation) -> String {
    let tag = match p {
        Propagation::Trotter => "trotter",
        Propagation::Exact => "exact",
    };
    format!("correlators_{name}_{tag}.csv")
}

pub fn dynamics(cfg: &RunConfig, lat: &HoneycombTorus, out: &mut ArtifactWriter) -> Result<Value> {
    let spec = cfg.require_ansatz()?;
    let dcfg = cfg.dynamics.clone().unwrap_or_default();
    let n = lat.num_sites();
    let zf = zero_field_training(cfg, lat, &spec)?;
    let runs = write_traces(out, cfg, &zf)?;
    let best = &zf.runs[zf.best];
    let variational = &best.final_state;
    let reference: Option<StateVector> = match (&zf.oracle, dcfg.exact_reference) {
        (Some(o), true) => Some(o.project_to_ground(variational)?),
        _ => None,
    };
    let h1 = build_hamiltonian(lat, &cfg.couplings.params(n).with_uniform_field([0.0, 0.0, dcfg.quench_hz]))?;
    let quench = QuenchSpec {
        hamiltonian: h1,
        dt: dcfg.dt,
        steps: dcfg.steps,
        order: dcfg.order,
        pairs: dcfg.pairs(lat),
    };
    quench.validate(lat)?;
    let series: Vec<(CorrelatorSeries, Option<CorrelatorSeries>)> = quench
        .pairs
        .par_iter()
        .map(|(name, pair)| {
            let (t, e) = rayon::join(
                || correlators(lat, variational, &quench, name, *pair, Propagation::Trotter),
                || {
                    reference
                        .as_ref()
                        .map(|g| correlators(lat, g, &quench, name, *pair, Propagation::Exact))
                        .transpose()
                },
            );
            Ok((t?, e?))
        })
        .collect::<Result<_>>()?;
    let mut pair_summaries = Vec::new();
    for (t, e) in &series {
        let mut files = vec![];
        for s in std::iter::once(t).chain(e.iter()) {
            let name = correlator_name(&s.name, s.propagation);
            let mut buf = Vec::new();
            s.write_csv(&mut buf)?;
            out.write(&name, &buf)?;
            files.push(name);
        }
        let max_dev = e.as_ref().map(|e| {
            t.s.iter()
                .zip(&e.s)
                .map(|(a, b)| (a.re - b.re).abs())
                .fold(0.0, f64::max)
        });
        pair_summaries.push(json!({
            "name": t.name,
            "pair": t.pair,
            "files": files,
            "static_c": [t.static_c.re, t.static_c.im],
            "max_m_imag": t.max_m_imag,
            "max_re_s_deviation": max_dev,
        }));
    }
    let mut budget = compile_prep(lat, &best.prep)?;
    budget.merge(&compile_circuit(&best.circuit)?);
    budget.merge(&compile_dynamics(&trotter_gates(&quench.hamiltonian, quench.dt, quench.order), quench.steps)?);
    out.write_json("budget.json", &budget_json(&budget, &cfg.noise.rates))?;
    Ok(json!({
        "experiment": Experiment::Dynamics,
        "num_sites": n,
        "sector": zf.pattern,
        "ansatz": spec,
        "oracle": oracle_json(cfg.oracle_mode(), zf.oracle.as_ref()),
        "runs": runs,
        "best_seed": cfg.seeds[zf.best],
        "best_infidelity": best.trace.final_infidelity(),
        "quench_hz": dcfg.quench_hz,
        "dt": quench.dt,
        "steps": quench.steps,
        "order": quench.order,
        "correlator_convention": "re_s and re_c are real parts of complex correlators; im_s is also emitted",
        "pairs": pair_summaries,
    }))
}

/// Plaquette and loop expectations of an eigenstate.
fn sector_tag(lat: &HoneycombTorus, v: &StateVector) -> Result<Value> {
    let plaquettes = (0..lat.num_plaquettes())
        .map(|p| Ok(v.pauli_expectation(&lat.plaquette_string(p)?)?.re))
        .collect::<Result<Vec<f64>>>()?;
    let loops = (0..2)
        .map(|k| Ok(v.pauli_expectation(&lat.loop_string_at(k)?)?.re))
        .collect::<Result<Vec<f64>>>()?;
    Ok(json!({ "plaquettes": plaquettes, "loops": loops }))
}

pub fn exact_spectrum(cfg: &RunConfig, lat: &HoneycombTorus, out: &mut ArtifactWriter) -> Result<Value> {
    let n = lat.num_sites();
    let h = build_hamiltonian(lat, &cfg.couplings.params(n))?;
    let pattern = match cfg.oracle_mode() {
        OracleMode::Sector => cfg.sector.pattern(lat)?,
        _ => None,
    };
    let o = oracle(lat, &h, pattern.as_ref(), cfg.oracle.k, cfg.oracle.degeneracy_tol)?;
    let mut report = serde_json::to_value(o.report())?;
    if let Some(p) = &pattern {
        report["sector"] = json!(p);
    }
    if cfg.couplings.field == [0.0; 3] {
        report["state_tags"] = o
            .eigenstates
            .iter()
            .map(|v| sector_tag(lat, v))
            .collect::<Result<Vec<_>>>()?
            .into();
    }
    out.write_json("spectrum.json", &report)?;
    Ok(json!({
        "experiment": Experiment::ExactSpectrum,
        "num_sites": n,
        "oracle": oracle_json(cfg.oracle_mode(), Some(&o)),
        "residual_tol": SolverOptions::default().residual_tol * h.coefficient_norm(),
        "max_residual": o.residuals.iter().copied().fold(0.0, f64::max),
    }))
}

/// Gate budget of the configured protocol without running any optimization.
/// The stabilization phase uses the measurement record of the first seed;
/// an `auto` sector is budgeted as vortex-free.
pub fn protocol_budget(cfg: &RunConfig, lat: &HoneycombTorus) -> Result<GateBudget> {
    let spec = cfg.require_ansatz()?;
    let pattern = match cfg.sector.pattern(lat)? {
        Some(p) => p,
        None => SectorPattern::vortex_free(lat, cfg.sector.loop_signs),
    };
    let prep = prepare_pattern(lat, &pattern, cfg.seeds[0])?;
    let mut budget = compile_prep(lat, &prep.report)?;
    budget.merge(&compile_circuit(&assemble(lat, &spec, &vec![0.0; spec.num_params(lat)])?)?);
    if let Some(d) = &cfg.dynamics {
        let h1 = build_hamiltonian(
            lat,
            &cfg.couplings.params(lat.num_sites()).with_uniform_field([0.0, 0.0, d.quench_hz]),
        )?;
        budget.merge(&compile_dynamics(&trotter_gates(&h1, d.dt, d.order), d.steps)?);
    }
    Ok(budget)
}

/// Budget table plus one fidelity line per configured error-rate pair.
pub fn budget_text(cfg: &RunConfig, budget: &GateBudget) -> String {
    let mut s = budget.table();
    for r in &cfg.noise.rates {
        s += &format!(
            "F(eps1={:e}, eps2={:e}) = {:.6}\n",
            r[0],
            r[1],
            estimate_fidelity(budget, r[0], r[1])
        );
    }
    s
}

pub fn noise_report(cfg: &RunConfig, lat: &HoneycombTorus, out: &mut ArtifactWriter) -> Result<Value> {
    let budget = protocol_budget(cfg, lat)?;
    out.write_json("budget.json", &budget_json(&budget, &cfg.noise.rates))?;
    Ok(json!({
        "experiment": Experiment::NoiseReport,
        "num_sites": lat.num_sites(),
        "ansatz": cfg.ansatz,
        "sector_kind": if cfg.sector.kind == SectorKind::Auto { "vortex-free (auto)" } else { "configured" },
        "n_r": budget.n_r(),
        "n_cnot": budget.n_cnot(),
    }))
}
