//! Pauli strings in symplectic form.
//!
//! A string on `n <= 64` qubits is stored as two bit masks plus a power of
//! `i`. Qubit `q` carries X when only `x` bit `q` is set, Z when only the `z`
//! bit is set and Y when both are set. The labelled single-qubit factors are
//! the Hermitian Paulis, so the operator represented is
//! `i^phase * P_0 ⊗ P_1 ⊗ ...` and it is Hermitian exactly when `phase` is even.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::HoneycombTorus;

pub const MAX_PAULI_QUBITS: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
            Axis::Z => 2,
        }
    }

    fn bits(self) -> (bool, bool) {
        match self {
            Axis::X => (true, false),
            Axis::Y => (true, true),
            Axis::Z => (false, true),
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Axis::X => 'X',
            Axis::Y => 'Y',
            Axis::Z => 'Z',
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol().to_ascii_lowercase())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PauliString {
    num_qubits: usize,
    x: u64,
    z: u64,
    /// Exponent of `i`, kept in `0..4`.
    phase: u8,
}

impl PauliString {
    pub fn identity(num_qubits: usize) -> Result<Self> {
        Self::from_masks(num_qubits, 0, 0, 0)
    }

    pub fn from_masks(num_qubits: usize, x: u64, z: u64, phase: u8) -> Result<Self> {
        if num_qubits > MAX_PAULI_QUBITS {
            return Err(Error::TooManyQubits(num_qubits));
        }
        let valid = mask_for(num_qubits);
        if (x | z) & !valid != 0 {
            let q = 63 - ((x | z) & !valid).leading_zeros() as usize;
            return Err(Error::QubitOutOfRange {
                qubit: q,
                num_qubits,
            });
        }
        Ok(Self {
            num_qubits,
            x,
            z,
            phase: phase & 3,
        })
    }

    pub fn single(num_qubits: usize, qubit: usize, axis: Axis) -> Result<Self> {
        Self::from_sites(num_qubits, &[(qubit, axis)])
    }

    /// Builds `P_{q0} P_{q1} ...` with phase `+1`. Sites must be distinct.
    pub fn from_sites(num_qubits: usize, sites: &[(usize, Axis)]) -> Result<Self> {
        if num_qubits > MAX_PAULI_QUBITS {
            return Err(Error::TooManyQubits(num_qubits));
        }
        let (mut x, mut z) = (0u64, 0u64);
        for &(q, axis) in sites {
            if q >= num_qubits {
                return Err(Error::QubitOutOfRange {
                    qubit: q,
                    num_qubits,
                });
            }
            let bit = 1u64 << q;
            if (x | z) & bit != 0 {
                return Err(Error::InvalidLattice(format!(
                    "qubit {q} appears twice in a Pauli string"
                )));
            }
            let (bx, bz) = axis.bits();
            if bx {
                x |= bit;
            }
            if bz {
                z |= bit;
            }
        }
        Self::from_masks(num_qubits, x, z, 0)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn x_mask(&self) -> u64 {
        self.x
    }

    pub fn z_mask(&self) -> u64 {
        self.z
    }

    pub fn y_mask(&self) -> u64 {
        self.x & self.z
    }

    pub fn phase(&self) -> u8 {
        self.phase
    }

    pub fn support_mask(&self) -> u64 {
        self.x | self.z
    }

    pub fn weight(&self) -> usize {
        self.support_mask().count_ones() as usize
    }

    pub fn is_identity(&self) -> bool {
        self.x == 0 && self.z == 0 && self.phase == 0
    }

    /// True when the string is proportional to the identity (any phase).
    pub fn is_scalar(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    pub fn is_hermitian(&self) -> bool {
        self.phase % 2 == 0
    }

    pub fn axis_at(&self, qubit: usize) -> Option<Axis> {
        let bit = 1u64 << qubit;
        match (self.x & bit != 0, self.z & bit != 0) {
            (false, false) => None,
            (true, false) => Some(Axis::X),
            (true, true) => Some(Axis::Y),
            (false, true) => Some(Axis::Z),
        }
    }

    /// Non-identity factors in ascending qubit order.
    pub fn sites(&self) -> Vec<(usize, Axis)> {
        (0..self.num_qubits)
            .filter_map(|q| self.axis_at(q).map(|a| (q, a)))
            .collect()
    }

    pub fn with_phase(mut self, phase: u8) -> Self {
        self.phase = phase & 3;
        self
    }

    pub fn negated(&self) -> Self {
        self.clone().with_phase(self.phase + 2)
    }

    /// Inverse: the dagger of a Pauli string, which only conjugates the phase.
    pub fn inverse(&self) -> Self {
        self.clone().with_phase((4 - self.phase) & 3)
    }

    /// Exact group product `self * other`.
    pub fn multiply(&self, other: &Self) -> Result<Self> {
        self.check_size(other)?;
        let (ax, az, bx, bz) = (self.x, self.z, other.x, other.z);
        let a_x = ax & !az;
        let a_y = ax & az;
        let a_z = !ax & az;
        let b_x = bx & !bz;
        let b_y = bx & bz;
        let b_z = !bx & bz;
        // Cyclic pairs (XY, YZ, ZX) pick up +i, anticyclic pairs -i.
        let plus = (a_x & b_y).count_ones() + (a_y & b_z).count_ones() + (a_z & b_x).count_ones();
        let minus = (a_y & b_x).count_ones() + (a_z & b_y).count_ones() + (a_x & b_z).count_ones();
        let phase = (self.phase as u32 + other.phase as u32 + plus + 3 * minus) & 3;
        Ok(Self {
            num_qubits: self.num_qubits,
            x: ax ^ bx,
            z: az ^ bz,
            phase: phase as u8,
        })
    }

    /// Symplectic commutation test.
    pub fn commutes(&self, other: &Self) -> Result<bool> {
        self.check_size(other)?;
        Ok(self.symplectic(other) == 0)
    }

    /// Parity of the symplectic inner product; 1 means the strings anticommute.
    fn symplectic(&self, other: &Self) -> u32 {
        ((self.x & other.z) ^ (self.z & other.x)).count_ones() & 1
    }

    fn check_size(&self, other: &Self) -> Result<()> {
        if self.num_qubits != other.num_qubits {
            return Err(Error::SizeMismatch {
                left: self.num_qubits,
                right: other.num_qubits,
            });
        }
        Ok(())
    }
}

/// Product of a sequence of strings, left to right.
pub fn product<'a, I>(num_qubits: usize, strings: I) -> Result<PauliString>
where
    I: IntoIterator<Item = &'a PauliString>,
{
    strings
        .into_iter()
        .try_fold(PauliString::identity(num_qubits)?, |acc, s| acc.multiply(s))
}

fn mask_for(num_qubits: usize) -> u64 {
    if num_qubits >= 64 {
        u64::MAX
    } else {
        (1u64 << num_qubits) - 1
    }
}

/// Renders as `+X3 Y7 Z12`, `-iZ0` or `+I` for the identity.
impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prefix = match self.phase {
            0 => "+",
            1 => "+i",
            2 => "-",
            _ => "-i",
        };
        f.write_str(prefix)?;
        if self.is_scalar() {
            return f.write_str("I");
        }
        let body: Vec<String> = self
            .sites()
            .into_iter()
            .map(|(q, a)| format!("{}{q}", a.symbol()))
            .collect();
        f.write_str(&body.join(" "))
    }
}

/// Parsed strings carry `num_qubits` = highest qubit + 1; use
/// [`PauliString::resized`] to embed in a larger register.
impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::ConfigInvalid(format!("cannot parse Pauli string {s:?}"));
        let s = s.trim();
        let (phase, rest) = if let Some(r) = s.strip_prefix("+i") {
            (1, r)
        } else if let Some(r) = s.strip_prefix("-i") {
            (3, r)
        } else if let Some(r) = s.strip_prefix('+') {
            (0, r)
        } else if let Some(r) = s.strip_prefix('-') {
            (2, r)
        } else {
            (0, s)
        };
        let rest = rest.trim();
        if rest == "I" || rest.is_empty() {
            return Ok(PauliString::identity(0)?.with_phase(phase));
        }
        let mut sites = Vec::new();
        for tok in rest.split_whitespace() {
            let mut chars = tok.chars();
            let axis = match chars.next().ok_or_else(bad)? {
                'X' => Axis::X,
                'Y' => Axis::Y,
                'Z' => Axis::Z,
                _ => return Err(bad()),
            };
            let q: usize = chars.as_str().parse().map_err(|_| bad())?;
            sites.push((q, axis));
        }
        let n = sites.iter().map(|&(q, _)| q + 1).max().unwrap_or(0);
        Ok(PauliString::from_sites(n, &sites)?.with_phase(phase))
    }
}

impl PauliString {
    pub fn resized(&self, num_qubits: usize) -> Result<Self> {
        Self::from_masks(num_qubits, self.x, self.z, self.phase)
    }
}

impl Serialize for PauliString {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

/// Real linear combination of Hermitian Pauli strings.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PauliSum {
    num_qubits: usize,
    terms: Vec<(f64, PauliString)>,
}

impl PauliSum {
    pub fn new(num_qubits: usize) -> Self {
        Self {
            num_qubits,
            terms: Vec::new(),
        }
    }

    pub fn from_terms(num_qubits: usize, terms: Vec<(f64, PauliString)>) -> Result<Self> {
        let mut sum = Self::new(num_qubits);
        for (c, s) in terms {
            if s.num_qubits() != num_qubits {
                return Err(Error::SizeMismatch {
                    left: s.num_qubits(),
                    right: num_qubits,
                });
            }
            sum.push(c, s);
        }
        Ok(sum)
    }

    /// Panics if the string has the wrong register size.
    pub fn push(&mut self, coeff: f64, string: PauliString) {
        assert_eq!(string.num_qubits(), self.num_qubits, "register size");
        self.terms.push((coeff, string));
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn terms(&self) -> &[(f64, PauliString)] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// `Σ |c_t|`, an upper bound on the operator norm.
    pub fn coefficient_norm(&self) -> f64 {
        self.terms.iter().map(|(c, _)| c.abs()).sum()
    }
}

/// Bond generators `K^a_ij = P^a_i P^a_j`, x-bonds first, then y, then z.
///
/// Every returned string commutes with all plaquette and loop strings of
/// the lattice; this is re-checked here and violations are reported as an
/// invalid lattice.
pub fn centralizer_generators(lat: &HoneycombTorus) -> Result<Vec<PauliString>> {
    let stabilizers = lat.stabilizer_strings()?;
    let mut out = Vec::with_capacity(lat.bonds().len());
    for axis in Axis::ALL {
        for bond in lat.bonds().iter().filter(|b| b.axis == axis) {
            let k = bond.pauli_string(lat.num_sites())?;
            for s in &stabilizers {
                if !k.commutes(s)? {
                    return Err(Error::InvalidLattice(format!(
                        "bond generator {k} anticommutes with stabilizer {s}"
                    )));
                }
            }
            out.push(k);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(s: &str, n: usize) -> PauliString {
        s.parse::<PauliString>().unwrap().resized(n).unwrap()
    }

    #[test]
    fn single_qubit_products() {
        let x = p("X0", 1);
        let y = p("Y0", 1);
        let z = p("Z0", 1);
        assert_eq!(x.multiply(&z).unwrap(), y.clone().with_phase(3));
        assert_eq!(z.multiply(&x).unwrap(), y.clone().with_phase(1));
        assert_eq!(x.multiply(&y).unwrap(), z.clone().with_phase(1));
        assert_eq!(y.multiply(&z).unwrap(), x.clone().with_phase(1));
        assert_eq!(y.multiply(&y).unwrap(), PauliString::identity(1).unwrap());
    }

    #[test]
    fn commutation_examples() {
        assert!(!p("X0", 2).commutes(&p("Z0", 2)).unwrap());
        assert!(p("X0 X1", 2).commutes(&p("Z0 Z1", 2)).unwrap());
        assert!(p("X0", 2).commutes(&p("Z1", 2)).unwrap());
    }

    #[test]
    fn size_mismatch_is_an_error() {
        let a = p("X0", 2);
        let b = p("X0", 3);
        assert!(matches!(a.multiply(&b), Err(Error::SizeMismatch { .. })));
        assert!(matches!(a.commutes(&b), Err(Error::SizeMismatch { .. })));
    }

    #[test]
    fn display_round_trip() {
        for s in ["+X3 Y7 Z12", "-iZ0", "+I", "-X1 X2", "+iY5"] {
            let parsed: PauliString = s.parse().unwrap();
            assert_eq!(parsed.to_string(), s);
        }
    }

    #[test]
    fn rejects_out_of_range_qubit() {
        assert!(matches!(
            PauliString::single(3, 3, Axis::X),
            Err(Error::QubitOutOfRange { .. })
        ));
        assert!(PauliString::identity(65).is_err());
    }

    fn arb_string(n: usize) -> impl Strategy<Value = PauliString> {
        let mask = (1u64 << n) - 1;
        (any::<u64>(), any::<u64>(), 0u8..4)
            .prop_map(move |(x, z, ph)| PauliString::from_masks(n, x & mask, z & mask, ph).unwrap())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn multiplication_is_associative(a in arb_string(12), b in arb_string(12), c in arb_string(12)) {
            let left = a.multiply(&b).unwrap().multiply(&c).unwrap();
            let right = a.multiply(&b.multiply(&c).unwrap()).unwrap();
            prop_assert_eq!(left, right);
        }

        #[test]
        fn inverse_recovers_left_factor(a in arb_string(20), b in arb_string(20)) {
            let ab = a.multiply(&b).unwrap();
            prop_assert_eq!(ab.multiply(&b.inverse()).unwrap(), a);
        }

        #[test]
        fn hermitian_strings_square_to_identity(a in arb_string(16)) {
            let h = a.clone().with_phase(0);
            prop_assert!(h.multiply(&h).unwrap().is_identity());
        }

        #[test]
        fn commutation_matches_product_order(a in arb_string(10), b in arb_string(10)) {
            let ab = a.multiply(&b).unwrap();
            let ba = b.multiply(&a).unwrap();
            if a.commutes(&b).unwrap() {
                prop_assert_eq!(ab, ba);
            } else {
                prop_assert_eq!(ab, ba.negated());
            }
        }
    }
}
