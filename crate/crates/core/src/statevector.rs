//! Dense statevector engine.
//!
//! Basis index bit `q` is the computational value of qubit `q`. Every Pauli
//! string acts as `P|b> = i^(phase + #Y) (-1)^|b & z| |b ^ x>`, which all
//! kernels below exploit: a Pauli never mixes more than the pair
//! `(b, b ^ x)`.

use std::io::{Read, Write};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::pauli::{PauliString, PauliSum};

/// Largest register this engine will allocate.
pub const MAX_QUBITS: usize = 26;

/// Norm tolerance for operations that require a normalized input.
pub const NORM_TOLERANCE: f64 = 1e-8;

const SNAPSHOT_MAGIC: &[u8; 5] = b"KQSV1";

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Gate {
    Hadamard(usize),
    Cnot { control: usize, target: usize },
    Pauli(PauliString),
    /// `exp(-i angle P / 2)`.
    PauliRotation { pauli: PauliString, angle: f64 },
    /// `exp(-i angle |1><1|_control ⊗ P / 2)`; `P` must not act on the control.
    ControlledRotation {
        control: usize,
        pauli: PauliString,
        angle: f64,
    },
}

impl Gate {
    pub fn rotation(pauli: PauliString, angle: f64) -> Self {
        Gate::PauliRotation { pauli, angle }
    }

    pub fn angle(&self) -> Option<f64> {
        match self {
            Gate::PauliRotation { angle, .. } | Gate::ControlledRotation { angle, .. } => Some(*angle),
            _ => None,
        }
    }

    pub fn with_angle(&self, new: f64) -> Self {
        match self {
            Gate::PauliRotation { pauli, .. } => Gate::PauliRotation {
                pauli: pauli.clone(),
                angle: new,
            },
            Gate::ControlledRotation { control, pauli, .. } => Gate::ControlledRotation {
                control: *control,
                pauli: pauli.clone(),
                angle: new,
            },
            other => other.clone(),
        }
    }

    pub fn inverse(&self) -> Self {
        match self {
            Gate::Pauli(p) => Gate::Pauli(p.inverse()),
            Gate::PauliRotation { .. } | Gate::ControlledRotation { .. } => {
                self.with_angle(-self.angle().unwrap_or(0.0))
            }
            other => other.clone(),
        }
    }

    /// Qubits the gate acts on, for range checks and compilation.
    pub fn support(&self) -> u64 {
        match self {
            Gate::Hadamard(q) => 1u64 << q,
            Gate::Cnot { control, target } => (1u64 << control) | (1u64 << target),
            Gate::Pauli(p) | Gate::PauliRotation { pauli: p, .. } => p.support_mask(),
            Gate::ControlledRotation { control, pauli, .. } => (1u64 << control) | pauli.support_mask(),
        }
    }

    fn check(&self, num_qubits: usize) -> Result<()> {
        let qubits: Vec<usize> = match self {
            Gate::Hadamard(q) => vec![*q],
            Gate::Cnot { control, target } => vec![*control, *target],
            Gate::ControlledRotation { control, .. } => vec![*control],
            _ => vec![],
        };
        for q in qubits {
            if q >= num_qubits {
                return Err(Error::QubitOutOfRange { qubit: q, num_qubits });
            }
        }
        match self {
            Gate::Cnot { control, target } if control == target => Err(Error::UnsupportedGate(
                "CNOT with control equal to target".into(),
            )),
            Gate::Pauli(p) | Gate::PauliRotation { pauli: p, .. } => check_pauli(p, num_qubits),
            Gate::ControlledRotation { control, pauli, .. } => {
                check_pauli(pauli, num_qubits)?;
                if pauli.support_mask() & (1u64 << control) != 0 {
                    return Err(Error::UnsupportedGate(
                        "controlled rotation acts on its own control".into(),
                    ));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

fn check_pauli(p: &PauliString, num_qubits: usize) -> Result<()> {
    if p.num_qubits() != num_qubits {
        return Err(Error::SizeMismatch {
            left: p.num_qubits(),
            right: num_qubits,
        });
    }
    Ok(())
}

/// `i^k` for `k` mod 4.
fn i_pow(k: u32) -> Complex64 {
    match k & 3 {
        0 => Complex64::new(1.0, 0.0),
        1 => I,
        2 => Complex64::new(-1.0, 0.0),
        _ => -I,
    }
}

#[inline]
fn sign(b: usize, z: usize) -> f64 {
    if (b & z).count_ones() & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Calls `f(b, b ^ x)` once per unordered pair, with `b` having the highest
/// bit of `x` clear. `x` must be nonzero.
#[inline]
fn for_each_pair(dim: usize, x: usize, mut f: impl FnMut(usize, usize)) {
    let hb = usize::BITS - 1 - x.leading_zeros();
    let low = (1usize << hb) - 1;
    for i in 0..dim / 2 {
        let b = ((i >> hb) << (hb + 1)) | (i & low);
        f(b, b ^ x);
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// `|0...0>`.
    pub fn zero(num_qubits: usize) -> Result<Self> {
        Self::basis(num_qubits, 0)
    }

    pub fn basis(num_qubits: usize, index: usize) -> Result<Self> {
        if num_qubits > MAX_QUBITS {
            return Err(Error::SizeTooLarge {
                num_qubits,
                limit: MAX_QUBITS,
            });
        }
        let dim = 1usize << num_qubits;
        if index >= dim {
            return Err(Error::IndexOutOfRange {
                what: "basis state",
                index,
                len: dim,
            });
        }
        let mut amps = vec![ZERO; dim];
        amps[index] = Complex64::new(1.0, 0.0);
        Ok(Self { num_qubits, amps })
    }

    /// `|+...+>`.
    pub fn plus(num_qubits: usize) -> Result<Self> {
        let mut s = Self::zero(num_qubits)?;
        let a = Complex64::new((1.0 / s.dim() as f64).sqrt(), 0.0);
        s.amps.iter_mut().for_each(|v| *v = a);
        Ok(s)
    }

    /// Unnormalized amplitudes are accepted; length must be a power of two.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let dim = amps.len();
        if dim == 0 || !dim.is_power_of_two() {
            return Err(Error::SizeMismatch {
                left: dim,
                right: dim.next_power_of_two(),
            });
        }
        let num_qubits = dim.trailing_zeros() as usize;
        if num_qubits > MAX_QUBITS {
            return Err(Error::SizeTooLarge {
                num_qubits,
                limit: MAX_QUBITS,
            });
        }
        Ok(Self { num_qubits, amps })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Rescales to unit norm and returns the previous norm.
    pub fn normalize(&mut self) -> f64 {
        let norm = self.norm_sqr().sqrt();
        if norm > 0.0 {
            let inv = 1.0 / norm;
            self.amps.iter_mut().for_each(|a| *a *= inv);
        }
        norm
    }

    pub fn scale(&mut self, factor: Complex64) {
        self.amps.iter_mut().for_each(|a| *a *= factor);
    }

    /// `self += factor * other`.
    pub fn axpy(&mut self, factor: Complex64, other: &StateVector) -> Result<()> {
        self.check_same(other)?;
        for (a, b) in self.amps.iter_mut().zip(&other.amps) {
            *a += factor * b;
        }
        Ok(())
    }

    pub fn fill_zero(&mut self) {
        self.amps.iter_mut().for_each(|a| *a = ZERO);
    }

    pub fn copy_from(&mut self, other: &StateVector) -> Result<()> {
        self.check_same(other)?;
        self.amps.copy_from_slice(&other.amps);
        Ok(())
    }

    fn check_same(&self, other: &StateVector) -> Result<()> {
        if self.num_qubits != other.num_qubits {
            return Err(Error::SizeMismatch {
                left: self.num_qubits,
                right: other.num_qubits,
            });
        }
        Ok(())
    }

    fn check_normalized(&self) -> Result<()> {
        let n = self.norm_sqr();
        if (n - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::NotNormalized(n));
        }
        Ok(())
    }

    pub fn apply_gate(&mut self, gate: &Gate) -> Result<()> {
        gate.check(self.num_qubits)?;
        match gate {
            Gate::Hadamard(q) => self.hadamard(*q),
            Gate::Cnot { control, target } => self.cnot(*control, *target),
            Gate::Pauli(p) => self.pauli_kernel(p),
            Gate::PauliRotation { pauli, angle } => self.rotation_kernel(pauli, *angle, None)?,
            Gate::ControlledRotation {
                control,
                pauli,
                angle,
            } => self.rotation_kernel(pauli, *angle, Some(*control))?,
        }
        Ok(())
    }

    pub fn apply_gates<'a>(&mut self, gates: impl IntoIterator<Item = &'a Gate>) -> Result<()> {
        for g in gates {
            self.apply_gate(g)?;
        }
        Ok(())
    }

    pub fn apply_pauli(&mut self, p: &PauliString) -> Result<()> {
        check_pauli(p, self.num_qubits)?;
        self.pauli_kernel(p);
        Ok(())
    }

    fn hadamard(&mut self, q: usize) {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        for_each_pair(self.dim(), 1 << q, |b, c| {
            let (u, v) = (self.amps[b], self.amps[c]);
            self.amps[b] = (u + v) * r;
            self.amps[c] = (u - v) * r;
        });
    }

    fn cnot(&mut self, control: usize, target: usize) {
        let cbit = 1usize << control;
        for_each_pair(self.dim(), 1 << target, |b, c| {
            if b & cbit != 0 {
                self.amps.swap(b, c);
            }
        });
    }

    fn pauli_kernel(&mut self, p: &PauliString) {
        let x = p.x_mask() as usize;
        let z = p.z_mask() as usize;
        let c = i_pow(p.phase() as u32 + p.y_mask().count_ones());
        if x == 0 {
            for (b, a) in self.amps.iter_mut().enumerate() {
                *a *= c * sign(b, z);
            }
            return;
        }
        for_each_pair(self.dim(), x, |b, bx| {
            let (u, v) = (self.amps[b], self.amps[bx]);
            self.amps[bx] = c * sign(b, z) * u;
            self.amps[b] = c * sign(bx, z) * v;
        });
    }

    /// `cos(θ/2) - i sin(θ/2) P`, restricted to control = 1 when given.
    fn rotation_kernel(&mut self, p: &PauliString, angle: f64, control: Option<usize>) -> Result<()> {
        if !p.is_hermitian() {
            return Err(Error::UnsupportedGate(format!(
                "rotation generator {p} is not Hermitian"
            )));
        }
        let x = p.x_mask() as usize;
        let z = p.z_mask() as usize;
        let (s, co) = (angle / 2.0).sin_cos();
        // -i sin(θ/2) times the Pauli's constant phase.
        let k = -I * s * i_pow(p.phase() as u32 + p.y_mask().count_ones());
        let cmask = control.map_or(0, |q| 1usize << q);
        if x == 0 {
            for (b, a) in self.amps.iter_mut().enumerate() {
                if b & cmask == cmask {
                    *a *= co + k * sign(b, z);
                }
            }
            return Ok(());
        }
        for_each_pair(self.dim(), x, |b, bx| {
            if b & cmask != cmask {
                return;
            }
            let (u, v) = (self.amps[b], self.amps[bx]);
            self.amps[b] = u * co + k * sign(bx, z) * v;
            self.amps[bx] = v * co + k * sign(b, z) * u;
        });
        Ok(())
    }

    /// One reverse-sweep step of adjoint differentiation for the rotation
    /// `exp(-i angle G / 2)`, `G = P` or `|1><1|_c ⊗ P`: returns
    /// `<lambda|G|phi>`, then un-applies the rotation from both states.
    pub fn adjoint_step(
        phi: &mut StateVector,
        lambda: &mut StateVector,
        p: &PauliString,
        angle: f64,
        control: Option<usize>,
    ) -> Result<Complex64> {
        phi.check_same(lambda)?;
        let gate = match control {
            Some(c) => Gate::ControlledRotation {
                control: c,
                pauli: p.clone(),
                angle,
            },
            None => Gate::rotation(p.clone(), angle),
        };
        gate.check(phi.num_qubits)?;
        if !p.is_hermitian() {
            return Err(Error::UnsupportedGate(format!(
                "rotation generator {p} is not Hermitian"
            )));
        }
        let x = p.x_mask() as usize;
        let z = p.z_mask() as usize;
        let c = i_pow(p.phase() as u32 + p.y_mask().count_ones());
        let (s, co) = (-angle / 2.0).sin_cos();
        let k = -I * s * c;
        let cmask = control.map_or(0, |q| 1usize << q);
        let (ph, la) = (&mut phi.amps, &mut lambda.amps);
        let mut acc = ZERO;
        if x == 0 {
            for b in 0..ph.len() {
                if b & cmask != cmask {
                    continue;
                }
                let sg = sign(b, z);
                let (u, l) = (ph[b], la[b]);
                acc += l.conj() * u * sg;
                let f = co + k * sg;
                ph[b] = u * f;
                la[b] = l * f;
            }
            return Ok(acc * c);
        }
        for_each_pair(ph.len(), x, |b, bx| {
            if b & cmask != cmask {
                return;
            }
            let (sb, sbx) = (sign(b, z), sign(bx, z));
            let (u, v) = (ph[b], ph[bx]);
            let (l, m) = (la[b], la[bx]);
            acc += l.conj() * v * sbx + m.conj() * u * sb;
            ph[b] = u * co + k * sbx * v;
            ph[bx] = v * co + k * sb * u;
            la[b] = l * co + k * sbx * m;
            la[bx] = m * co + k * sb * l;
        });
        Ok(acc * c)
    }

    /// `<bra| P |ket>`, optionally restricted to basis states with the
    /// control bit set (i.e. the operator `|1><1|_c ⊗ P`).
    pub fn matrix_element(
        bra: &StateVector,
        p: &PauliString,
        ket: &StateVector,
        control: Option<usize>,
    ) -> Result<Complex64> {
        bra.check_same(ket)?;
        check_pauli(p, ket.num_qubits)?;
        let x = p.x_mask() as usize;
        let z = p.z_mask() as usize;
        let c = i_pow(p.phase() as u32 + p.y_mask().count_ones());
        let cmask = control.map_or(0, |q| 1usize << q);
        let mut acc = ZERO;
        // (P ket)[b] = c * sign(b ^ x) * ket[b ^ x]
        for (b, a) in bra.amps.iter().enumerate() {
            if b & cmask != cmask {
                continue;
            }
            let bx = b ^ x;
            acc += a.conj() * ket.amps[bx] * sign(bx, z);
        }
        Ok(acc * c)
    }

    /// Raw `<ψ|P|ψ>` without a normalization check.
    pub fn pauli_expectation(&self, p: &PauliString) -> Result<Complex64> {
        Self::matrix_element(self, p, self, None)
    }

    /// `Σ_t c_t <ψ|P_t|ψ>` for a normalized state; the imaginary residue of
    /// Hermitian terms is dropped.
    pub fn expectation(&self, op: &PauliSum) -> Result<f64> {
        self.check_normalized()?;
        if op.num_qubits() != self.num_qubits {
            return Err(Error::SizeMismatch {
                left: op.num_qubits(),
                right: self.num_qubits,
            });
        }
        let mut total = 0.0;
        for (c, p) in op.terms() {
            total += c * self.pauli_expectation(p)?.re;
        }
        Ok(total)
    }

    /// `out = op |self>`.
    pub fn apply_sum_into(&self, op: &PauliSum, out: &mut StateVector) -> Result<()> {
        self.check_same(out)?;
        if op.num_qubits() != self.num_qubits {
            return Err(Error::SizeMismatch {
                left: op.num_qubits(),
                right: self.num_qubits,
            });
        }
        out.fill_zero();
        for (coeff, p) in op.terms() {
            let x = p.x_mask() as usize;
            let z = p.z_mask() as usize;
            let c = i_pow(p.phase() as u32 + p.y_mask().count_ones()) * *coeff;
            for (b, o) in out.amps.iter_mut().enumerate() {
                let bx = b ^ x;
                *o += c * sign(bx, z) * self.amps[bx];
            }
        }
        Ok(())
    }

    pub fn apply_sum(&self, op: &PauliSum) -> Result<StateVector> {
        let mut out = StateVector {
            num_qubits: self.num_qubits,
            amps: vec![ZERO; self.dim()],
        };
        self.apply_sum_into(op, &mut out)?;
        Ok(out)
    }

    /// Applies `(1 + eigenvalue * S) / 2`, renormalizes, and returns the
    /// probability of the branch.
    pub fn project(&mut self, stabilizer: &PauliString, eigenvalue: i8) -> Result<f64> {
        check_pauli(stabilizer, self.num_qubits)?;
        if !stabilizer.is_hermitian() || !(eigenvalue == 1 || eigenvalue == -1) {
            return Err(Error::UnsupportedGate(format!(
                "projector onto {stabilizer} = {eigenvalue}"
            )));
        }
        let before = self.norm_sqr();
        self.apply_projector(stabilizer, eigenvalue)?;
        let prob = self.norm_sqr() / before;
        if prob < 1e-12 {
            return Err(Error::ZeroProbabilityBranch(prob));
        }
        self.normalize();
        Ok(prob)
    }

    /// Applies `(1 + eigenvalue * S) / 2` without renormalizing.
    pub fn apply_projector(&mut self, stabilizer: &PauliString, eigenvalue: i8) -> Result<()> {
        check_pauli(stabilizer, self.num_qubits)?;
        let x = stabilizer.x_mask() as usize;
        let z = stabilizer.z_mask() as usize;
        let c = i_pow(stabilizer.phase() as u32 + stabilizer.y_mask().count_ones()) * eigenvalue as f64;
        if x == 0 {
            for (b, a) in self.amps.iter_mut().enumerate() {
                *a = (*a + c * sign(b, z) * *a) * 0.5;
            }
        } else {
            for_each_pair(self.dim(), x, |b, bx| {
                let (u, v) = (self.amps[b], self.amps[bx]);
                self.amps[b] = (u + c * sign(bx, z) * v) * 0.5;
                self.amps[bx] = (v + c * sign(b, z) * u) * 0.5;
            });
        }
        Ok(())
    }

    /// `<a|b>`.
    pub fn inner(a: &StateVector, b: &StateVector) -> Result<Complex64> {
        a.check_same(b)?;
        Ok(a.amps.iter().zip(&b.amps).map(|(x, y)| x.conj() * y).sum())
    }

    pub fn fidelity(a: &StateVector, b: &StateVector) -> Result<f64> {
        Ok(Self::inner(a, b)?.norm_sqr())
    }

    /// Writes `KQSV1`, the qubit count as little-endian u32, then the
    /// amplitudes as interleaved little-endian f64 (re, im).
    pub fn write_snapshot<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(SNAPSHOT_MAGIC)?;
        w.write_all(&(self.num_qubits as u32).to_le_bytes())?;
        let mut buf = Vec::with_capacity(16 * self.dim());
        for a in &self.amps {
            buf.extend_from_slice(&a.re.to_le_bytes());
            buf.extend_from_slice(&a.im.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_snapshot<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 5];
        r.read_exact(&mut magic)?;
        if &magic != SNAPSHOT_MAGIC {
            return Err(Error::BadSnapshot(format!("magic {magic:?}")));
        }
        let mut nb = [0u8; 4];
        r.read_exact(&mut nb)?;
        let num_qubits = u32::from_le_bytes(nb) as usize;
        if num_qubits > MAX_QUBITS {
            return Err(Error::SizeTooLarge {
                num_qubits,
                limit: MAX_QUBITS,
            });
        }
        let dim = 1usize << num_qubits;
        let mut bytes = vec![0u8; 16 * dim];
        r.read_exact(&mut bytes)
            .map_err(|e| Error::BadSnapshot(format!("truncated amplitudes: {e}")))?;
        let mut trailing = [0u8; 1];
        if r.read(&mut trailing)? != 0 {
            return Err(Error::BadSnapshot("trailing bytes".into()));
        }
        let amps = bytes
            .chunks_exact(16)
            .map(|c| {
                let re = f64::from_le_bytes(c[..8].try_into().unwrap());
                let im = f64::from_le_bytes(c[8..].try_into().unwrap());
                Complex64::new(re, im)
            })
            .collect();
        Ok(Self { num_qubits, amps })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::Axis;
    use std::f64::consts::PI;

    fn ps(s: &str, n: usize) -> PauliString {
        s.parse::<PauliString>().unwrap().resized(n).unwrap()
    }

    fn close(a: Complex64, b: Complex64) -> bool {
        (a - b).norm() < 1e-12
    }

    #[test]
    fn hadamard_on_zero() {
        let mut s = StateVector::zero(1).unwrap();
        s.apply_gate(&Gate::Hadamard(0)).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!(close(s.amplitudes()[0], Complex64::new(r, 0.0)));
        assert!(close(s.amplitudes()[1], Complex64::new(r, 0.0)));
    }

    #[test]
    fn full_turn_is_minus_identity() {
        let mut s = StateVector::plus(3).unwrap();
        s.apply_gate(&Gate::Hadamard(1)).unwrap();
        let before = s.clone();
        s.apply_gate(&Gate::rotation(ps("Z0", 3), 2.0 * PI)).unwrap();
        for (a, b) in s.amplitudes().iter().zip(before.amplitudes()) {
            assert!(close(*a, -*b));
        }
        assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn y_action() {
        let mut s = StateVector::zero(1).unwrap();
        s.apply_pauli(&ps("Y0", 1)).unwrap();
        assert!(close(s.amplitudes()[1], I));
        s.apply_pauli(&ps("Y0", 1)).unwrap();
        assert!(close(s.amplitudes()[0], Complex64::new(1.0, 0.0)));
    }

    #[test]
    fn simple_expectations() {
        let z = StateVector::zero(4).unwrap();
        let p = StateVector::plus(4).unwrap();
        for q in 0..4 {
            let mut op = PauliSum::new(4);
            op.push(1.0, PauliString::single(4, q, Axis::Z).unwrap());
            assert!((z.expectation(&op).unwrap() - 1.0).abs() < 1e-12);
            let mut op = PauliSum::new(4);
            op.push(1.0, PauliString::single(4, q, Axis::X).unwrap());
            assert!((p.expectation(&op).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn expectation_requires_normalized_state() {
        let s = StateVector::from_amplitudes(vec![Complex64::new(2.0, 0.0), ZERO]).unwrap();
        let op = PauliSum::from_terms(1, vec![(1.0, ps("Z0", 1))]).unwrap();
        assert!(matches!(s.expectation(&op), Err(Error::NotNormalized(_))));
    }

    #[test]
    fn projections() {
        let mut s = StateVector::zero(1).unwrap();
        let p = s.project(&ps("Z0", 1), 1).unwrap();
        assert!((p - 1.0).abs() < 1e-12);
        let p = s.project(&ps("X0", 1), 1).unwrap();
        assert!((p - 0.5).abs() < 1e-12);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!(close(s.amplitudes()[0], Complex64::new(r, 0.0)));
        assert!(close(s.amplitudes()[1], Complex64::new(r, 0.0)));
        assert!(matches!(
            s.project(&ps("X0", 1), -1),
            Err(Error::ZeroProbabilityBranch(_))
        ));
    }

    #[test]
    fn inner_products() {
        let a = StateVector::basis(1, 0).unwrap();
        let b = StateVector::basis(1, 1).unwrap();
        assert!(close(StateVector::inner(&a, &a).unwrap(), Complex64::new(1.0, 0.0)));
        assert!(close(StateVector::inner(&a, &b).unwrap(), ZERO));
        let c = StateVector::zero(2).unwrap();
        assert!(matches!(StateVector::inner(&a, &c), Err(Error::SizeMismatch { .. })));
    }

    #[test]
    fn range_checks() {
        let mut s = StateVector::zero(2).unwrap();
        assert!(matches!(s.apply_gate(&Gate::Hadamard(2)), Err(Error::QubitOutOfRange { .. })));
        assert!(s
            .apply_gate(&Gate::Cnot {
                control: 0,
                target: 5
            })
            .is_err());
        assert!(s.apply_gate(&Gate::rotation(ps("X0", 3), 0.1)).is_err());
        assert!(matches!(StateVector::zero(27), Err(Error::SizeTooLarge { .. })));
    }

    #[test]
    fn snapshot_round_trip() {
        let mut s = StateVector::plus(3).unwrap();
        s.apply_gate(&Gate::rotation(ps("X0 Y2", 3), 0.37)).unwrap();
        let mut buf = Vec::new();
        s.write_snapshot(&mut buf).unwrap();
        assert_eq!(&buf[..5], b"KQSV1");
        assert_eq!(buf.len(), 5 + 4 + 16 * 8);
        let back = StateVector::read_snapshot(&buf[..]).unwrap();
        assert_eq!(back, s);
        assert!(StateVector::read_snapshot(&buf[..buf.len() - 1]).is_err());
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(StateVector::read_snapshot(&bad[..]), Err(Error::BadSnapshot(_))));
    }

    #[test]
    fn gate_inverse_undoes_gate() {
        let mut s = StateVector::plus(3).unwrap();
        s.apply_gate(&Gate::rotation(ps("Y1", 3), 0.4)).unwrap();
        let before = s.clone();
        let gates = [
            Gate::rotation(ps("X0 Z1 Y2", 3), 0.7),
            Gate::ControlledRotation {
                control: 2,
                pauli: ps("X0", 3),
                angle: -1.3,
            },
            Gate::Cnot {
                control: 1,
                target: 0,
            },
            Gate::Hadamard(2),
            Gate::Pauli(ps("Y0 Z2", 3)),
        ];
        for g in &gates {
            s.apply_gate(g).unwrap();
        }
        for g in gates.iter().rev() {
            s.apply_gate(&g.inverse()).unwrap();
        }
        for (a, b) in s.amplitudes().iter().zip(before.amplitudes()) {
            assert!(close(*a, *b));
        }
    }
}
