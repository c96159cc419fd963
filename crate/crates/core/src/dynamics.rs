//! Real-time evolution after a field quench and the bond-bond correlators.

use std::io::Write;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{BondPair, HoneycombTorus};
use crate::pauli::{Axis, PauliString, PauliSum};
use crate::statevector::{Gate, StateVector};

/// Register size above which [`exact_propagate`] refuses to run.
pub const EXACT_PROPAGATION_LIMIT: usize = 14;

#[derive(Clone, Debug)]
pub struct QuenchSpec {
    /// Evolution Hamiltonian, including the field.
    pub hamiltonian: PauliSum,
    pub dt: f64,
    pub steps: usize,
    /// 1 or 2.
    pub order: u8,
    pub pairs: Vec<(String, BondPair)>,
}

impl QuenchSpec {
    /// Default time grid (10 steps of 0.1), second order, the lattice's
    /// default bond pairs.
    pub fn new(lat: &HoneycombTorus, hamiltonian: PauliSum) -> Self {
        Self {
            hamiltonian,
            dt: 0.1,
            steps: 10,
            order: 2,
            pairs: lat
                .default_bond_pairs()
                .into_iter()
                .map(|(name, p)| (name.to_string(), p))
                .collect(),
        }
    }

    pub fn validate(&self, lat: &HoneycombTorus) -> Result<()> {
        if !(self.dt > 0.0) {
            return Err(Error::ConfigInvalid(format!("dt must be > 0, got {}", self.dt)));
        }
        if !matches!(self.order, 1 | 2) {
            return Err(Error::ConfigInvalid(format!("trotter order must be 1 or 2, got {}", self.order)));
        }
        for (_, pair) in &self.pairs {
            z_bond(lat, pair.first)?;
            z_bond(lat, pair.second)?;
        }
        Ok(())
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.steps).map(|j| j as f64 * self.dt).collect()
    }
}

/// `Z_a Z_b` for a z-bond `(a, b)`.
pub fn z_bond(lat: &HoneycombTorus, (a, b): (usize, usize)) -> Result<PauliString> {
    match lat.bond_between(a, b) {
        Some(bond) if bond.axis == Axis::Z => {
            PauliString::from_sites(lat.num_sites(), &[(a, Axis::Z), (b, Axis::Z)])
        }
        _ => Err(Error::BondNotInLattice(a, b)),
    }
}

fn apply_term(state: &mut StateVector, coeff: f64, p: &PauliString, tau: f64) -> Result<()> {
    if p.is_identity() {
        let (s, c) = (coeff * tau).sin_cos();
        let phase = Complex64::new(c, -s) * i_pow(p.phase());
        state.scale(phase);
        Ok(())
    } else {
        state.apply_gate(&Gate::rotation(p.clone(), 2.0 * coeff * tau))
    }
}

fn i_pow(k: u8) -> Complex64 {
    // A Hermitian identity term carries phase 0 or 2; the sign folds into
    // the coefficient.
    if k & 2 == 0 {
        Complex64::new(1.0, 0.0)
    } else {
        Complex64::new(-1.0, 0.0)
    }
}

/// One Trotter step `≈ exp(-i dt H)`, terms in Hamiltonian order.
/// Order 2 is the symmetric split: a half step forward, then a half step
/// in reverse order.
pub fn trotter_step(state: &mut StateVector, hamiltonian: &PauliSum, dt: f64, order: u8) -> Result<()> {
    match order {
        1 => {
            for (c, p) in hamiltonian.terms() {
                apply_term(state, *c, p, dt)?;
            }
        }
        2 => {
            for (c, p) in hamiltonian.terms() {
                apply_term(state, *c, p, dt / 2.0)?;
            }
            for (c, p) in hamiltonian.terms().iter().rev() {
                apply_term(state, *c, p, dt / 2.0)?;
            }
        }
        _ => return Err(Error::ConfigInvalid(format!("trotter order must be 1 or 2, got {order}"))),
    }
    Ok(())
}

/// Trotterized gate sequence for one step, for compilation.
pub fn trotter_gates(hamiltonian: &PauliSum, dt: f64, order: u8) -> Vec<Gate> {
    let forward = |tau: f64| {
        hamiltonian
            .terms()
            .iter()
            .filter(|(_, p)| !p.is_identity())
            .map(move |(c, p)| Gate::rotation(p.clone(), 2.0 * c * tau))
    };
    match order {
        1 => forward(dt).collect(),
        _ => {
            let mut g: Vec<Gate> = forward(dt / 2.0).collect();
            let mut back: Vec<Gate> = forward(dt / 2.0).collect();
            back.reverse();
            g.extend(back);
            g
        }
    }
}

/// `exp(-i t H) |ψ>` by short-time Krylov steps.
pub fn exact_propagate(state: &StateVector, hamiltonian: &PauliSum, t: f64) -> Result<StateVector> {
    let n = state.num_qubits();
    if n > EXACT_PROPAGATION_LIMIT {
        return Err(Error::SizeTooLarge {
            num_qubits: n,
            limit: EXACT_PROPAGATION_LIMIT,
        });
    }
    let norm = hamiltonian.coefficient_norm().max(1e-300);
    let mut out = state.clone();
    let mut done = 0.0;
    let mut tau = (4.0 / norm).min(t.abs());
    while done < t.abs() {
        let step = tau.min(t.abs() - done);
        let signed = if t < 0.0 { -step } else { step };
        match krylov_step(&out, hamiltonian, signed, 40, 1e-13)? {
            Some(next) => {
                out = next;
                done += step;
            }
            None => tau /= 2.0,
        }
        if tau < 1e-12 * norm.recip() {
            return Err(Error::NoConvergence(0));
        }
    }
    Ok(out)
}

/// Returns `None` when the a-posteriori error estimate exceeds `tol`.
fn krylov_step(v0: &StateVector, h: &PauliSum, tau: f64, m: usize, tol: f64) -> Result<Option<StateVector>> {
    let beta0 = v0.norm_sqr().sqrt();
    if beta0 == 0.0 {
        return Ok(Some(v0.clone()));
    }
    let mut first = v0.clone();
    first.scale(Complex64::new(1.0 / beta0, 0.0));
    let mut basis = vec![first];
    let mut alpha = Vec::new();
    let mut beta = Vec::new();
    let mut w = v0.clone();
    let mut tail = 0.0;
    for j in 0..m {
        basis[j].apply_sum_into(h, &mut w)?;
        alpha.push(StateVector::inner(&basis[j], &w)?.re);
        for _ in 0..2 {
            for b in &basis {
                let c = StateVector::inner(b, &w)?;
                w.axpy(-c, b)?;
            }
        }
        let b = w.norm_sqr().sqrt();
        if b < 1e-14 {
            tail = 0.0;
            break;
        }
        tail = b;
        if j + 1 == m {
            break;
        }
        beta.push(b);
        let mut next = w.clone();
        next.scale(Complex64::new(1.0 / b, 0.0));
        basis.push(next);
    }
    let k = alpha.len();
    let mut t = DMatrix::<f64>::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alpha[i];
        if i + 1 < k {
            t[(i, i + 1)] = beta[i];
            t[(i + 1, i)] = beta[i];
        }
    }
    let eig = SymmetricEigen::new(t);
    // y = Q exp(-i tau Λ) Q^T e1
    let coeffs: Vec<Complex64> = (0..k)
        .map(|i| {
            (0..k)
                .map(|l| {
                    let q = eig.eigenvectors[(i, l)] * eig.eigenvectors[(0, l)];
                    Complex64::from_polar(q, -tau * eig.eigenvalues[l])
                })
                .sum()
        })
        .collect();
    if tail * coeffs[k - 1].norm() > tol {
        return Ok(None);
    }
    let mut out = v0.clone();
    out.fill_zero();
    for (c, b) in coeffs.iter().zip(&basis) {
        out.axpy(c * beta0, b)?;
    }
    Ok(Some(out))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Propagation {
    Trotter,
    Exact,
}

#[derive(Clone, Debug, Serialize)]
pub struct CorrelatorSeries {
    pub name: String,
    pub pair: BondPair,
    pub propagation: Propagation,
    pub times: Vec<f64>,
    pub m: Vec<f64>,
    pub c: Vec<Complex64>,
    /// Static connected correlator `c(0) - m(0) m_ll'(0)`.
    pub static_c: Complex64,
    pub s: Vec<Complex64>,
    /// Largest imaginary part seen in `m`; should be roundoff.
    pub max_m_imag: f64,
}

impl CorrelatorSeries {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t,re_s,im_s,re_c,m")?;
        for j in 0..self.times.len() {
            writeln!(
                w,
                "{:.6},{:.17e},{:.17e},{:.17e},{:.17e}",
                self.times[j], self.s[j].re, self.s[j].im, self.static_c.re, self.m[j]
            )?;
        }
        Ok(())
    }
}

/// Bond-bond correlators of one pair `((k,k'), (l,l'))` after the quench.
///
/// `m(t) = <φ1|Z_k Z_k'|φ1>`, `c(t) = <φ1|Z_k Z_k'|φ2>` with `φ1 = U ψ` and
/// `φ2 = U Z_l Z_l' ψ`; `S(t) = c(t) - m(t) m_ll'(0)`.
pub fn correlators(
    lat: &HoneycombTorus,
    gs: &StateVector,
    quench: &QuenchSpec,
    name: &str,
    pair: BondPair,
    propagation: Propagation,
) -> Result<CorrelatorSeries> {
    quench.validate(lat)?;
    let a = z_bond(lat, pair.first)?;
    let b = z_bond(lat, pair.second)?;
    let m_ll0 = gs.pauli_expectation(&b)?.re;
    let mut phi1 = gs.clone();
    let mut phi2 = gs.clone();
    phi2.apply_pauli(&b)?;
    let times = quench.times();
    let (mut m, mut c) = (Vec::new(), Vec::new());
    let mut max_m_imag: f64 = 0.0;
    for j in 0..times.len() {
        if j > 0 {
            match propagation {
                Propagation::Trotter => {
                    trotter_step(&mut phi1, &quench.hamiltonian, quench.dt, quench.order)?;
                    trotter_step(&mut phi2, &quench.hamiltonian, quench.dt, quench.order)?;
                }
                Propagation::Exact => {
                    phi1 = exact_propagate(&phi1, &quench.hamiltonian, quench.dt)?;
                    phi2 = exact_propagate(&phi2, &quench.hamiltonian, quench.dt)?;
                }
            }
        }
        let mj = phi1.pauli_expectation(&a)?;
        max_m_imag = max_m_imag.max(mj.im.abs());
        m.push(mj.re);
        c.push(StateVector::matrix_element(&phi1, &a, &phi2, None)?);
    }
    let s: Vec<Complex64> = c.iter().zip(&m).map(|(cj, mj)| cj - mj * m_ll0).collect();
    Ok(CorrelatorSeries {
        name: name.to_string(),
        pair,
        propagation,
        times,
        static_c: s[0],
        m,
        c,
        s,
        max_m_imag,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StaticObservables {
    /// `Σ_j <Z_j> / N`.
    pub magnetization: f64,
    /// `<W_tot>`, fractional in general.
    pub vortex_number: f64,
    /// `|2 W_tot / n - 1|`.
    pub eta: f64,
    pub plaquettes: Vec<f64>,
}

pub fn static_observables(state: &StateVector, lat: &HoneycombTorus) -> Result<StaticObservables> {
    let magnetization = state.expectation(&lat.magnetization_operator()?)?;
    let plaquettes = (0..lat.num_plaquettes())
        .map(|p| Ok(state.pauli_expectation(&lat.plaquette_string(p)?)?.re))
        .collect::<Result<Vec<f64>>>()?;
    let n = lat.num_plaquettes() as f64;
    let vortex_number = plaquettes.iter().map(|w| (1.0 - w) / 2.0).sum::<f64>();
    Ok(StaticObservables {
        magnetization,
        vortex_number,
        eta: (2.0 * vortex_number / n - 1.0).abs(),
        plaquettes,
    })
}

/// `‖U_trotter(t) ψ - exp(-i t H) ψ‖` with `steps` steps of `t / steps`.
pub fn trotter_error(state: &StateVector, hamiltonian: &PauliSum, t: f64, steps: usize, order: u8) -> Result<f64> {
    let exact = exact_propagate(state, hamiltonian, t)?;
    let mut psi = state.clone();
    for _ in 0..steps {
        trotter_step(&mut psi, hamiltonian, t / steps as f64, order)?;
    }
    psi.axpy(Complex64::new(-1.0, 0.0), &exact)?;
    Ok(psi.norm_sqr().sqrt())
}

/// Least-squares slope of `log(error)` against `log(dt)` over `step_counts`.
pub fn convergence_order(
    state: &StateVector,
    hamiltonian: &PauliSum,
    t: f64,
    step_counts: &[usize],
    order: u8,
) -> Result<f64> {
    let pts = step_counts
        .iter()
        .map(|&s| {
            let e = trotter_error(state, hamiltonian, t, s, order)?;
            Ok(((t / s as f64).ln(), e.ln()))
        })
        .collect::<Result<Vec<(f64, f64)>>>()?;
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_hamiltonian, build_torus, KitaevParams};
    use crate::prep::{prepare_sector, SectorSpec};

    fn dist(a: &StateVector, b: &StateVector) -> f64 {
        let mut d = a.clone();
        d.axpy(Complex64::new(-1.0, 0.0), b).unwrap();
        d.norm_sqr().sqrt()
    }

    fn quench_h(lat: &HoneycombTorus, hz: f64) -> PauliSum {
        let p = KitaevParams::isotropic(-1.0, lat.num_sites()).with_uniform_field([0.0, 0.0, hz]);
        build_hamiltonian(lat, &p).unwrap()
    }

    #[test]
    fn single_term_trotter_is_exact() {
        let h = PauliSum::from_terms(2, vec![(0.7, "X0 Y1".parse().unwrap())]).unwrap();
        let psi = StateVector::plus(2).unwrap();
        let mut a = psi.clone();
        trotter_step(&mut a, &h, 0.9, 1).unwrap();
        let b = exact_propagate(&psi, &h, 0.9).unwrap();
        assert!(dist(&a, &b) < 1e-12);
    }

    #[test]
    fn zero_time_is_identity() {
        let lat = build_torus(2, 2).unwrap();
        let psi = StateVector::plus(8).unwrap();
        let out = exact_propagate(&psi, &quench_h(&lat, 0.5), 0.0).unwrap();
        assert!(dist(&out, &psi) < 1e-15);
    }

    #[test]
    fn bloch_rotation_under_z() {
        let h = PauliSum::from_terms(1, vec![(1.0, "Z0".parse().unwrap())]).unwrap();
        let plus = StateVector::plus(1).unwrap();
        let out = exact_propagate(&plus, &h, std::f64::consts::FRAC_PI_2).unwrap();
        let x = out.pauli_expectation(&"X0".parse().unwrap()).unwrap().re;
        assert!((x + 1.0).abs() < 1e-10);
        let out = exact_propagate(&plus, &h, 3.0 * std::f64::consts::FRAC_PI_4).unwrap();
        let y = out.pauli_expectation(&"Y0".parse().unwrap()).unwrap().re;
        assert!((y + 1.0).abs() < 1e-10);
    }

    #[test]
    fn identity_terms_only_add_phase() {
        let h = PauliSum::from_terms(1, vec![(0.4, PauliString::identity(1).unwrap()), (1.0, "Z0".parse().unwrap())])
            .unwrap();
        let psi = StateVector::plus(1).unwrap();
        let mut a = psi.clone();
        trotter_step(&mut a, &h, 0.3, 2).unwrap();
        let b = exact_propagate(&psi, &h, 0.3).unwrap();
        assert!(dist(&a, &b) < 1e-12);
    }

    #[test]
    fn exact_matches_fine_trotter() {
        let lat = build_torus(2, 2).unwrap();
        let h = quench_h(&lat, 0.5);
        let psi = prepare_sector(&lat, SectorSpec { vortex_count: 0, loop_signs: [1, 1] }, 1).unwrap().state;
        let d = trotter_error(&psi, &h, 0.5, 1000, 2).unwrap();
        assert!(d < 1e-6, "{d}");
        let coarse = trotter_error(&psi, &h, 1.0, 1000, 2).unwrap();
        let fine = trotter_error(&psi, &h, 1.0, 2000, 2).unwrap();
        assert!((coarse / fine - 4.0).abs() < 0.1);
    }

    #[test]
    fn trotter_preserves_norm() {
        let lat = build_torus(2, 2).unwrap();
        let h = quench_h(&lat, 0.5);
        let mut psi = StateVector::plus(8).unwrap();
        for _ in 0..100 {
            trotter_step(&mut psi, &h, 0.1, 2).unwrap();
        }
        assert!((psi.norm_sqr() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn second_order_convergence() {
        let lat = build_torus(2, 2).unwrap();
        let h = quench_h(&lat, 0.5);
        let psi = prepare_sector(&lat, SectorSpec { vortex_count: 4, loop_signs: [1, 1] }, 0).unwrap().state;
        let p2 = convergence_order(&psi, &h, 1.0, &[10, 20, 40, 80], 2).unwrap();
        assert!((p2 - 2.0).abs() < 0.2, "order {p2}");
        let p1 = convergence_order(&psi, &h, 1.0, &[10, 20, 40, 80], 1).unwrap();
        assert!((p1 - 1.0).abs() < 0.2, "order {p1}");
    }

    #[test]
    fn correlator_identities() {
        let lat = build_torus(2, 2).unwrap();
        let psi = prepare_sector(&lat, SectorSpec { vortex_count: 0, loop_signs: [1, 1] }, 0).unwrap().state;
        let q = QuenchSpec::new(&lat, quench_h(&lat, 0.5));
        let [(_, horz), _] = lat.default_bond_pairs();
        let s = correlators(&lat, &psi, &q, "horz", horz, Propagation::Trotter).unwrap();
        assert_eq!(s.times.len(), 11);
        assert!((s.s[0] - s.static_c).norm() <= 1e-12);
        assert!(s.max_m_imag < 1e-10);
        let same = BondPair { first: horz.first, second: horz.first };
        let s = correlators(&lat, &psi, &q, "same", same, Propagation::Exact).unwrap();
        assert!((s.c[0] - Complex64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn non_z_bond_is_rejected() {
        let lat = build_torus(2, 2).unwrap();
        let q = QuenchSpec::new(&lat, quench_h(&lat, 0.5));
        let x = lat.bonds().iter().find(|b| b.axis == Axis::X).unwrap();
        let bad = BondPair { first: (x.i, x.j), second: lat.z_bond_of_cell(0, 0) };
        let psi = StateVector::plus(8).unwrap();
        assert!(matches!(
            correlators(&lat, &psi, &q, "bad", bad, Propagation::Trotter),
            Err(Error::BondNotInLattice(..))
        ));
    }

    #[test]
    fn static_observables_of_simple_states() {
        let lat = build_torus(2, 2).unwrap();
        let o = static_observables(&StateVector::zero(8).unwrap(), &lat).unwrap();
        assert!((o.magnetization - 1.0).abs() < 1e-12);
        let psi = prepare_sector(&lat, SectorSpec { vortex_count: 0, loop_signs: [1, 1] }, 0).unwrap().state;
        let o = static_observables(&psi, &lat).unwrap();
        assert!(o.vortex_number.abs() < 1e-10);
        assert!((o.eta - 1.0).abs() < 1e-10);
    }

    #[test]
    fn exact_propagation_size_limit() {
        let lat = build_torus(3, 3).unwrap();
        let h = quench_h(&lat, 0.5);
        let psi = StateVector::zero(18).unwrap();
        assert!(matches!(exact_propagate(&psi, &h, 0.1), Err(Error::SizeTooLarge { .. })));
    }
}
