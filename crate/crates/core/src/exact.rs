//! Ground-truth spectra over the full `2^N` space.
//!
//! Eigenpairs are extracted one at a time by explicitly restarted Lanczos
//! with full reorthogonalization; converged vectors are locked and later
//! runs stay orthogonal to them, which resolves degenerate ground spaces.
//! The Hamiltonian is applied term by term, never materialized.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::pauli::{PauliString, PauliSum};
use crate::statevector::StateVector;

pub const DEFAULT_DEGENERACY_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct SolverOptions {
    /// Minimum number of eigenpairs to return.
    pub k: usize,
    pub degeneracy_tol: f64,
    /// Restrict to the joint eigenspace of these (stabilizer, sign) pairs.
    /// Every constraint must commute with every Hamiltonian term.
    pub constraints: Vec<(PauliString, i8)>,
    /// Krylov basis size per restart cycle.
    pub basis_size: usize,
    pub max_restarts: usize,
    /// Residual target relative to `Σ|c_t|`.
    pub residual_tol: f64,
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            k: 1,
            degeneracy_tol: DEFAULT_DEGENERACY_TOL,
            constraints: Vec::new(),
            basis_size: 48,
            max_restarts: 400,
            residual_tol: 1e-9,
            seed: 0x5eed,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SpectrumResult {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    pub eigenstates: Vec<StateVector>,
    pub residuals: Vec<f64>,
    pub degeneracy_tol: f64,
}

impl SpectrumResult {
    pub fn ground_energy(&self) -> f64 {
        self.eigenvalues[0]
    }

    /// Number of eigenvalues within `degeneracy_tol` of the lowest.
    pub fn degeneracy(&self) -> usize {
        let e0 = self.eigenvalues[0];
        self.eigenvalues
            .iter()
            .take_while(|&&e| e - e0 < self.degeneracy_tol)
            .count()
    }

    pub fn ground_states(&self) -> &[StateVector] {
        &self.eigenstates[..self.degeneracy()]
    }

    /// `‖Π_GS ψ‖²` over the degenerate ground space.
    pub fn ground_fidelity(&self, psi: &StateVector) -> Result<f64> {
        self.ground_states()
            .iter()
            .map(|g| StateVector::fidelity(g, psi))
            .sum()
    }

    /// Normalized projection of `psi` onto the ground space.
    pub fn project_to_ground(&self, psi: &StateVector) -> Result<StateVector> {
        let mut out = psi.clone();
        out.fill_zero();
        for g in self.ground_states() {
            out.axpy(StateVector::inner(g, psi)?, g)?;
        }
        if out.normalize() < 1e-12 {
            return Err(Error::ZeroProbabilityBranch(0.0));
        }
        Ok(out)
    }

    pub fn report(&self) -> SpectrumReport {
        SpectrumReport {
            eigenvalues: self.eigenvalues.clone(),
            residuals: self.residuals.clone(),
            degeneracy: self.degeneracy(),
            degeneracy_tol: self.degeneracy_tol,
            sector: None,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectrumReport {
    pub eigenvalues: Vec<f64>,
    pub residuals: Vec<f64>,
    pub degeneracy: usize,
    pub degeneracy_tol: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sector: Option<serde_json::Value>,
}

/// Lowest `k` eigenpairs plus the rest of the degenerate ground space.
pub fn ground_subspace(hamiltonian: &PauliSum, num_qubits: usize, k: usize, degeneracy_tol: f64) -> Result<SpectrumResult> {
    solve(
        hamiltonian,
        num_qubits,
        &SolverOptions {
            k,
            degeneracy_tol,
            ..Default::default()
        },
    )
}

struct Restricted<'a> {
    h: &'a PauliSum,
    constraints: &'a [(PauliString, i8)],
    locked: Vec<StateVector>,
}

impl Restricted<'_> {
    fn filter(&self, v: &mut StateVector) -> Result<()> {
        for (s, sign) in self.constraints {
            v.apply_projector(s, *sign)?;
        }
        for _ in 0..2 {
            for l in &self.locked {
                let c = StateVector::inner(l, v)?;
                v.axpy(-c, l)?;
            }
        }
        Ok(())
    }

    fn apply(&self, v: &StateVector, out: &mut StateVector) -> Result<()> {
        v.apply_sum_into(self.h, out)?;
        self.filter(out)
    }
}

pub fn solve(hamiltonian: &PauliSum, num_qubits: usize, opts: &SolverOptions) -> Result<SpectrumResult> {
    if hamiltonian.num_qubits() != num_qubits {
        return Err(Error::SizeMismatch {
            left: hamiltonian.num_qubits(),
            right: num_qubits,
        });
    }
    for (s, _) in &opts.constraints {
        for (_, t) in hamiltonian.terms() {
            if !s.commutes(t)? {
                return Err(Error::UnreachableSector(format!(
                    "constraint {s} does not commute with term {t}"
                )));
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let scale = hamiltonian.coefficient_norm().max(1.0);
    let mut op = Restricted {
        h: hamiltonian,
        constraints: &opts.constraints,
        locked: Vec::new(),
    };
    let mut values = Vec::new();
    let mut residuals = Vec::new();
    let dim = 1usize << num_qubits;
    loop {
        let enough = values.len() >= opts.k.max(1)
            && values
                .last()
                .is_some_and(|&e: &f64| e - values[0] >= opts.degeneracy_tol);
        if enough || values.len() >= dim {
            break;
        }
        let mut start = random_state(num_qubits, &mut rng)?;
        op.filter(&mut start)?;
        if start.normalize() < 1e-10 {
            // Sector (or its orthogonal complement) exhausted.
            break;
        }
        let (value, vector, residual) = lowest_pair(&op, start, opts, scale)?;
        values.push(value);
        residuals.push(residual);
        op.locked.push(vector);
    }
    if values.is_empty() {
        return Err(Error::UnreachableSector("empty constrained subspace".into()));
    }
    // Locking returns pairs in ascending order up to tolerance; sort to be safe.
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let eigenstates = order.iter().map(|&i| op.locked[i].clone()).collect();
    Ok(SpectrumResult {
        eigenvalues: order.iter().map(|&i| values[i]).collect(),
        eigenstates,
        residuals: order.iter().map(|&i| residuals[i]).collect(),
        degeneracy_tol: opts.degeneracy_tol,
    })
}

fn random_state(num_qubits: usize, rng: &mut ChaCha8Rng) -> Result<StateVector> {
    let amps = (0..1usize << num_qubits)
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let mut s = StateVector::from_amplitudes(amps)?;
    s.normalize();
    Ok(s)
}

fn lowest_pair(op: &Restricted, mut v: StateVector, opts: &SolverOptions, scale: f64) -> Result<(f64, StateVector, f64)> {
    let target = opts.residual_tol * scale;
    let mut w = v.clone();
    for _ in 0..opts.max_restarts {
        let (theta, ritz) = lanczos_cycle(op, &v, opts.basis_size)?;
        v = ritz;
        op.filter(&mut v)?;
        v.normalize();
        op.apply(&v, &mut w)?;
        let energy = StateVector::inner(&v, &w)?.re;
        w.axpy(Complex64::new(-energy, 0.0), &v)?;
        let residual = w.norm_sqr().sqrt();
        if residual <= target {
            return Ok((energy, v, residual));
        }
        let _ = theta;
    }
    Err(Error::NoConvergence(opts.max_restarts * opts.basis_size))
}

/// One Lanczos cycle from `start`; returns the lowest Ritz value and vector.
fn lanczos_cycle(op: &Restricted, start: &StateVector, m: usize) -> Result<(f64, StateVector)> {
    let mut basis: Vec<StateVector> = vec![start.clone()];
    let mut alpha = Vec::with_capacity(m);
    let mut beta: Vec<f64> = Vec::with_capacity(m);
    let mut w = start.clone();
    for j in 0..m {
        op.apply(&basis[j], &mut w)?;
        let a = StateVector::inner(&basis[j], &w)?.re;
        alpha.push(a);
        // Full reorthogonalization, twice for stability.
        for _ in 0..2 {
            for b in &basis {
                let c = StateVector::inner(b, &w)?;
                w.axpy(-c, b)?;
            }
        }
        let b = w.norm_sqr().sqrt();
        if j + 1 == m || b < 1e-12 {
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
    let (imin, &theta) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("nonempty tridiagonal");
    let mut ritz = start.clone();
    ritz.fill_zero();
    for (i, b) in basis.iter().take(k).enumerate() {
        ritz.axpy(Complex64::new(eig.eigenvectors[(i, imin)], 0.0), b)?;
    }
    ritz.normalize();
    Ok((theta, ritz))
}

/// Power iteration with `(1 - dτ H)` and renormalization, stopped when the
/// energy changes by less than `tol` between steps. Requires
/// `dτ · Σ|c_t| <= 1` so the lowest eigenvalue dominates.
pub fn imaginary_time_gs(
    hamiltonian: &PauliSum,
    initial: &StateVector,
    dtau: f64,
    max_steps: usize,
    tol: f64,
) -> Result<StateVector> {
    if dtau <= 0.0 || dtau * hamiltonian.coefficient_norm() > 1.0 {
        return Err(Error::StalledConvergence(format!(
            "step {dtau} outside (0, 1/{}]",
            hamiltonian.coefficient_norm()
        )));
    }
    let mut psi = initial.clone();
    if psi.normalize() < 1e-12 {
        return Err(Error::StalledConvergence("zero initial state".into()));
    }
    let mut hpsi = psi.clone();
    psi.apply_sum_into(hamiltonian, &mut hpsi)?;
    let mut energy = StateVector::inner(&psi, &hpsi)?.re;
    for _ in 0..max_steps {
        psi.axpy(Complex64::new(-dtau, 0.0), &hpsi)?;
        if psi.normalize() < 1e-300 {
            return Err(Error::StalledConvergence("state collapsed".into()));
        }
        psi.apply_sum_into(hamiltonian, &mut hpsi)?;
        let next = StateVector::inner(&psi, &hpsi)?.re;
        let change = (energy - next).abs();
        energy = next;
        if change < tol {
            return Ok(psi);
        }
    }
    Err(Error::NoConvergence(max_steps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_hamiltonian, build_torus, KitaevParams};

    #[test]
    fn single_qubit_z() {
        let h = PauliSum::from_terms(1, vec![(1.0, "Z0".parse().unwrap())]).unwrap();
        let r = ground_subspace(&h, 1, 2, 1e-8).unwrap();
        assert!((r.eigenvalues[0] + 1.0).abs() < 1e-10);
        assert!((r.eigenvalues[1] - 1.0).abs() < 1e-10);
        assert_eq!(r.degeneracy(), 1);
    }

    #[test]
    fn imaginary_time_single_qubit() {
        let h = PauliSum::from_terms(1, vec![(1.0, "Z0".parse().unwrap())]).unwrap();
        let plus = StateVector::plus(1).unwrap();
        let gs = imaginary_time_gs(&h, &plus, 0.5, 10_000, 1e-14).unwrap();
        assert!((gs.expectation(&h).unwrap() + 1.0).abs() < 1e-8);
        assert!(gs.amplitudes()[1].norm() > 1.0 - 1e-8);
    }

    #[test]
    fn imaginary_time_rejects_large_step() {
        let h = PauliSum::from_terms(1, vec![(1.0, "Z0".parse().unwrap())]).unwrap();
        let plus = StateVector::plus(1).unwrap();
        assert!(imaginary_time_gs(&h, &plus, 2.0, 10, 1e-10).is_err());
    }

    #[test]
    fn degenerate_ground_space_is_resolved() {
        // Z0 Z1 has a doubly degenerate ground space {|01>, |10>}.
        let h = PauliSum::from_terms(2, vec![(1.0, "Z0 Z1".parse::<PauliString>().unwrap())]).unwrap();
        let r = ground_subspace(&h, 2, 1, 1e-8).unwrap();
        assert_eq!(r.degeneracy(), 2);
        let psi = StateVector::basis(2, 0b01).unwrap();
        assert!((r.ground_fidelity(&psi).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn eigenpairs_have_small_residuals_and_are_orthonormal() {
        let lat = build_torus(2, 2).unwrap();
        let p = KitaevParams::isotropic(-1.0, 8).with_uniform_field([0.1, 0.0, 0.3]);
        let h = build_hamiltonian(&lat, &p).unwrap();
        let r = ground_subspace(&h, 8, 3, 1e-8).unwrap();
        for (i, v) in r.eigenstates.iter().enumerate() {
            let hv = v.apply_sum(&h).unwrap();
            let mut res = hv.clone();
            res.axpy(Complex64::new(-r.eigenvalues[i], 0.0), v).unwrap();
            assert!(res.norm_sqr().sqrt() <= 1e-9 * h.coefficient_norm());
            for (j, u) in r.eigenstates.iter().enumerate() {
                let ip = StateVector::inner(u, v).unwrap().norm();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((ip - expect).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn constraints_must_commute() {
        let h = PauliSum::from_terms(1, vec![(1.0, "X0".parse().unwrap())]).unwrap();
        let opts = SolverOptions {
            constraints: vec![("Z0".parse().unwrap(), 1)],
            ..Default::default()
        };
        assert!(solve(&h, 1, &opts).is_err());
    }
}
