//! Initial-state preparation: stabilizer projection from `|0...0>` followed
//! by vortex-pair and loop-sign corrections built from single-qubit Paulis.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::HoneycombTorus;
use crate::pauli::{Axis, PauliString};
use crate::statevector::StateVector;

/// Tolerance for "this state is in its sector".
pub const SECTOR_TOLERANCE: f64 = 1e-10;

/// Target vortex count and loop eigenvalues (horizontal, vertical).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SectorSpec {
    pub vortex_count: usize,
    pub loop_signs: [i8; 2],
}

/// A fully specified joint eigenspace: one sign per plaquette plus the loops.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SectorPattern {
    pub plaquette_signs: Vec<i8>,
    pub loop_signs: [i8; 2],
}

impl SectorPattern {
    pub fn vortex_free(lat: &HoneycombTorus, loop_signs: [i8; 2]) -> Self {
        Self {
            plaquette_signs: vec![1; lat.num_plaquettes()],
            loop_signs,
        }
    }

    pub fn all_vortices(lat: &HoneycombTorus, loop_signs: [i8; 2]) -> Self {
        Self {
            plaquette_signs: vec![-1; lat.num_plaquettes()],
            loop_signs,
        }
    }

    pub fn vortex_count(&self) -> usize {
        self.plaquette_signs.iter().filter(|&&s| s < 0).count()
    }

    /// `(stabilizer, eigenvalue)` pairs defining the sector.
    pub fn constraints(&self, lat: &HoneycombTorus) -> Result<Vec<(PauliString, i8)>> {
        self.validate(lat)?;
        let strings = lat.stabilizer_strings()?;
        Ok(strings
            .into_iter()
            .zip(self.plaquette_signs.iter().chain(self.loop_signs.iter()).copied())
            .collect())
    }

    pub fn validate(&self, lat: &HoneycombTorus) -> Result<()> {
        if self.plaquette_signs.len() != lat.num_plaquettes() {
            return Err(Error::SizeMismatch {
                left: self.plaquette_signs.len(),
                right: lat.num_plaquettes(),
            });
        }
        if self
            .plaquette_signs
            .iter()
            .chain(self.loop_signs.iter())
            .any(|&s| s != 1 && s != -1)
        {
            return Err(Error::UnreachableSector("signs must be +1 or -1".into()));
        }
        if self.vortex_count() % 2 != 0 {
            return Err(Error::UnreachableSector(format!(
                "odd vortex count {}",
                self.vortex_count()
            )));
        }
        Ok(())
    }

    /// Every even plaquette pattern crossed with the four loop sectors.
    pub fn enumerate(lat: &HoneycombTorus) -> Vec<SectorPattern> {
        let n = lat.num_plaquettes();
        let mut out = Vec::new();
        for mask in 0u64..(1u64 << n) {
            if mask.count_ones() % 2 != 0 {
                continue;
            }
            let plaquette_signs: Vec<i8> = (0..n).map(|p| if mask >> p & 1 == 1 { -1 } else { 1 }).collect();
            for loop_signs in LOOP_SECTORS {
                out.push(SectorPattern {
                    plaquette_signs: plaquette_signs.clone(),
                    loop_signs,
                });
            }
        }
        out
    }
}

pub const LOOP_SECTORS: [[i8; 2]; 4] = [[1, 1], [1, -1], [-1, 1], [-1, -1]];

#[derive(Clone, Debug)]
pub struct StabilizeOutcome {
    pub state: StateVector,
    /// Sampled eigenvalue per stabilizer, plaquettes first then loops.
    pub measured_signs: Vec<i8>,
    pub branch_probabilities: Vec<f64>,
}

/// Born-rule projection of `|0...0>` onto a joint eigenstate of all
/// plaquette and loop strings.
pub fn stabilize(lat: &HoneycombTorus, seed: u64) -> Result<StabilizeOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = StateVector::zero(lat.num_sites())?;
    let stabs = lat.stabilizer_strings()?;
    let mut measured_signs = Vec::with_capacity(stabs.len());
    let mut branch_probabilities = Vec::with_capacity(stabs.len());
    for s in &stabs {
        let expect = state.pauli_expectation(s)?.re;
        let p_plus = ((1.0 + expect) / 2.0).clamp(0.0, 1.0);
        let u: f64 = rng.gen();
        let sign = if u < p_plus { 1 } else { -1 };
        let prob = state.project(s, sign)?;
        measured_signs.push(sign);
        branch_probabilities.push(prob);
    }
    Ok(StabilizeOutcome {
        state,
        measured_signs,
        branch_probabilities,
    })
}

/// A single-qubit Pauli together with the stabilizers it flips.
#[derive(Clone, Copy, Debug)]
struct FlipMove {
    site: usize,
    axis: Axis,
    plaquettes: (usize, usize),
    loop_bits: u8,
}

fn flip_moves(lat: &HoneycombTorus) -> Vec<FlipMove> {
    let mut moves = Vec::new();
    for site in 0..lat.num_sites() {
        let owners = lat.plaquettes_of_site(site);
        for axis in Axis::ALL {
            let flipped: Vec<usize> = owners.iter().filter(|(_, a)| *a != axis).map(|(p, _)| *p).collect();
            if flipped.len() != 2 {
                continue;
            }
            let mut loop_bits = 0u8;
            for (k, spec) in lat.loops().iter().enumerate() {
                if spec.sites.contains(&site) && spec.axis != axis {
                    loop_bits |= 1 << k;
                }
            }
            moves.push(FlipMove {
                site,
                axis,
                plaquettes: (flipped[0], flipped[1]),
                loop_bits,
            });
        }
    }
    moves
}

/// Breadth-first search from `(from, 0)` to `(to, loop_bits)` over
/// (plaquette, loop parity) states. Returns the moves along the path.
fn search_chain(lat: &HoneycombTorus, from: usize, to: usize, loop_bits: u8) -> Option<Vec<FlipMove>> {
    let moves = flip_moves(lat);
    let n = lat.num_plaquettes();
    let idx = |p: usize, bits: u8| p * 4 + bits as usize;
    let mut prev: Vec<Option<(usize, usize)>> = vec![None; 4 * n];
    let mut seen = vec![false; 4 * n];
    let start = idx(from, 0);
    let goal = idx(to, loop_bits);
    seen[start] = true;
    let mut queue = VecDeque::from([start]);
    while let Some(node) = queue.pop_front() {
        if node == goal {
            break;
        }
        let (p, bits) = (node / 4, (node % 4) as u8);
        for (m, mv) in moves.iter().enumerate() {
            let next_p = if mv.plaquettes.0 == p {
                mv.plaquettes.1
            } else if mv.plaquettes.1 == p {
                mv.plaquettes.0
            } else {
                continue;
            };
            let next = idx(next_p, bits ^ mv.loop_bits);
            if !seen[next] {
                seen[next] = true;
                prev[next] = Some((node, m));
                queue.push_back(next);
            }
        }
    }
    if !seen[goal] {
        return None;
    }
    let mut path = Vec::new();
    let mut node = goal;
    while node != start {
        let (p, m) = prev[node]?;
        path.push(moves[m]);
        node = p;
    }
    path.reverse();
    Some(path)
}

fn moves_to_strings(lat: &HoneycombTorus, moves: &[FlipMove]) -> Result<Vec<PauliString>> {
    moves
        .iter()
        .map(|m| PauliString::single(lat.num_sites(), m.site, m.axis))
        .collect()
}

/// Single-qubit Paulis whose product flips plaquettes `a` and `b` and
/// commutes with every other plaquette and both loops.
pub fn flip_chain(lat: &HoneycombTorus, a: usize, b: usize) -> Result<Vec<PauliString>> {
    let n = lat.num_plaquettes();
    for p in [a, b] {
        if p >= n {
            return Err(Error::IndexOutOfRange {
                what: "plaquette",
                index: p,
                len: n,
            });
        }
    }
    if a == b {
        return Err(Error::NoChainFound(a, b));
    }
    let path = search_chain(lat, a, b, 0).ok_or(Error::NoChainFound(a, b))?;
    moves_to_strings(lat, &path)
}

/// Plaquette-neutral Paulis flipping the loops selected by `loop_bits`
/// (bit 0 horizontal, bit 1 vertical).
pub fn loop_flip_chain(lat: &HoneycombTorus, loop_bits: u8) -> Result<Vec<PauliString>> {
    if loop_bits == 0 {
        return Ok(Vec::new());
    }
    search_chain(lat, 0, 0, loop_bits & 3)
        .map(|p| moves_to_strings(lat, &p))
        .ok_or(Error::NoChainFound(0, 0))?
}

fn chain_length(lat: &HoneycombTorus, a: usize, b: usize) -> usize {
    search_chain(lat, a, b, 0).map_or(usize::MAX, |p| p.len())
}

/// Greedy nearest pairing of a set of plaquettes.
fn greedy_pairs(lat: &HoneycombTorus, mut pending: Vec<usize>) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    while pending.len() >= 2 {
        let mut best = (usize::MAX, 0, 1);
        for i in 0..pending.len() {
            for j in i + 1..pending.len() {
                let d = chain_length(lat, pending[i], pending[j]);
                if d < best.0 {
                    best = (d, i, j);
                }
            }
        }
        let (_, i, j) = best;
        pairs.push((pending[i], pending[j]));
        pending.remove(j);
        pending.remove(i);
    }
    pairs
}

#[derive(Clone, Debug, Serialize)]
pub struct PrepReport {
    pub seed: u64,
    pub measured_signs: Vec<i8>,
    pub branch_probabilities: Vec<f64>,
    pub applied_chains: Vec<Vec<PauliString>>,
    pub final_plaquette_signs: Vec<i8>,
    pub final_loop_signs: [i8; 2],
    pub vortex_count: f64,
}

impl PrepReport {
    pub fn num_flip_paulis(&self) -> usize {
        self.applied_chains.iter().map(Vec::len).sum()
    }
}

#[derive(Clone, Debug)]
pub struct Prepared {
    pub state: StateVector,
    pub report: PrepReport,
}

fn apply_chain(state: &mut StateVector, chain: &[PauliString]) -> Result<()> {
    chain.iter().try_for_each(|p| state.apply_pauli(p))
}

fn finish(
    lat: &HoneycombTorus,
    seed: u64,
    outcome: StabilizeOutcome,
    mut state: StateVector,
    applied_chains: Vec<Vec<PauliString>>,
    mut loop_signs: [i8; 2],
    target_loops: [i8; 2],
) -> Result<Prepared> {
    let bits = (0..2).fold(0u8, |acc, k| acc | (((loop_signs[k] != target_loops[k]) as u8) << k));
    let mut applied_chains = applied_chains;
    if bits != 0 {
        let chain = loop_flip_chain(lat, bits)?;
        apply_chain(&mut state, &chain)?;
        applied_chains.push(chain);
        loop_signs = target_loops;
    }
    let mut final_plaquette_signs = Vec::with_capacity(lat.num_plaquettes());
    for p in 0..lat.num_plaquettes() {
        let e = state.pauli_expectation(&lat.plaquette_string(p)?)?.re;
        if (e.abs() - 1.0).abs() > SECTOR_TOLERANCE {
            return Err(Error::UnreachableSector(format!("plaquette {p} expectation {e}")));
        }
        final_plaquette_signs.push(if e > 0.0 { 1 } else { -1 });
    }
    for (k, target) in target_loops.iter().enumerate() {
        let e = state.pauli_expectation(&lat.loop_string_at(k)?)?.re;
        if (e - *target as f64).abs() > SECTOR_TOLERANCE {
            return Err(Error::UnreachableSector(format!("loop {k} expectation {e}")));
        }
    }
    let vortex_count = state.expectation(&lat.vortex_count_operator()?)?;
    Ok(Prepared {
        state,
        report: PrepReport {
            seed,
            measured_signs: outcome.measured_signs,
            branch_probabilities: outcome.branch_probabilities,
            applied_chains,
            final_plaquette_signs,
            final_loop_signs: loop_signs,
            vortex_count,
        },
    })
}

/// Stabilize, then pair up surplus (or missing) vortices greedily until the
/// vortex count matches, and fix the loop signs.
pub fn prepare_sector(lat: &HoneycombTorus, sector: SectorSpec, seed: u64) -> Result<Prepared> {
    let n = lat.num_plaquettes();
    if sector.vortex_count % 2 != 0 || sector.vortex_count > n {
        return Err(Error::UnreachableSector(format!(
            "vortex count {} on {} plaquettes",
            sector.vortex_count, n
        )));
    }
    if sector.loop_signs.iter().any(|&s| s != 1 && s != -1) {
        return Err(Error::UnreachableSector("loop signs must be +1 or -1".into()));
    }
    let outcome = stabilize(lat, seed)?;
    let mut state = outcome.state.clone();
    let mut signs: Vec<i8> = outcome.measured_signs[..n].to_vec();
    let loop_signs = [outcome.measured_signs[n], outcome.measured_signs[n + 1]];
    let vortices: Vec<usize> = (0..n).filter(|&p| signs[p] < 0).collect();
    let mut chains = Vec::new();
    if vortices.len() != sector.vortex_count {
        let pending = if vortices.len() > sector.vortex_count {
            vortices
        } else {
            (0..n).filter(|&p| signs[p] > 0).collect()
        };
        let excess = vortices_delta(sector.vortex_count, &signs);
        for (a, b) in greedy_pairs(lat, pending).into_iter().take(excess / 2) {
            let chain = flip_chain(lat, a, b)?;
            apply_chain(&mut state, &chain)?;
            signs[a] = -signs[a];
            signs[b] = -signs[b];
            chains.push(chain);
        }
    }
    finish(lat, seed, outcome, state, chains, loop_signs, sector.loop_signs)
}

fn vortices_delta(target: usize, signs: &[i8]) -> usize {
    let current = signs.iter().filter(|&&s| s < 0).count();
    current.abs_diff(target)
}

/// Like [`prepare_sector`] but targets an exact per-plaquette pattern.
pub fn prepare_pattern(lat: &HoneycombTorus, pattern: &SectorPattern, seed: u64) -> Result<Prepared> {
    pattern.validate(lat)?;
    let n = lat.num_plaquettes();
    let outcome = stabilize(lat, seed)?;
    let mut state = outcome.state.clone();
    let loop_signs = [outcome.measured_signs[n], outcome.measured_signs[n + 1]];
    let wrong: Vec<usize> = (0..n)
        .filter(|&p| outcome.measured_signs[p] != pattern.plaquette_signs[p])
        .collect();
    let mut chains = Vec::new();
    for (a, b) in greedy_pairs(lat, wrong) {
        let chain = flip_chain(lat, a, b)?;
        apply_chain(&mut state, &chain)?;
        chains.push(chain);
    }
    let prepared = finish(lat, seed, outcome, state, chains, loop_signs, pattern.loop_signs)?;
    if prepared.report.final_plaquette_signs != pattern.plaquette_signs {
        return Err(Error::UnreachableSector("plaquette pattern mismatch".into()));
    }
    Ok(prepared)
}
