//! Property suites checked against dense-matrix oracles.

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

use kitaev_qsim::ansatz::{assemble, AnsatzSpec};
use kitaev_qsim::exact::{ground_subspace, imaginary_time_gs, solve, SolverOptions};
use kitaev_qsim::noise::{estimate_fidelity, GateBudget, GateCounts, Phase};
use kitaev_qsim::pauli::centralizer_generators;
use kitaev_qsim::prep::{prepare_pattern, SectorPattern, LOOP_SECTORS};
use kitaev_qsim::{build_hamiltonian, build_torus, Axis, Gate, KitaevParams, PauliString, PauliSum, StateVector};

type M = DMatrix<Complex64>;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn single(axis: Option<Axis>) -> M {
    let (o, l, i) = (c(0.0, 0.0), c(1.0, 0.0), c(0.0, 1.0));
    match axis {
        None => M::from_row_slice(2, 2, &[l, o, o, l]),
        Some(Axis::X) => M::from_row_slice(2, 2, &[o, l, l, o]),
        Some(Axis::Y) => M::from_row_slice(2, 2, &[o, -i, i, o]),
        Some(Axis::Z) => M::from_row_slice(2, 2, &[l, o, o, -l]),
    }
}

/// Dense matrix with qubit 0 as the least significant bit.
fn dense(p: &PauliString) -> M {
    let n = p.num_qubits();
    let mut m = M::from_element(1, 1, c(1.0, 0.0));
    for q in (0..n).rev() {
        m = m.kronecker(&single(p.axis_at(q)));
    }
    m * c(0.0, 1.0).powu(p.phase() as u32)
}

fn dense_sum(h: &PauliSum) -> M {
    let d = 1 << h.num_qubits();
    h.terms()
        .iter()
        .fold(M::zeros(d, d), |acc, (coef, p)| acc + dense(p) * c(*coef, 0.0))
}

/// `exp(-i angle P / 2)` for a Hermitian Pauli.
fn dense_rotation(p: &PauliString, angle: f64) -> M {
    let d = 1 << p.num_qubits();
    M::identity(d, d) * c((angle / 2.0).cos(), 0.0) - dense(p) * c(0.0, (angle / 2.0).sin())
}

fn projector_one(n: usize, q: usize) -> M {
    let z = dense(&PauliString::single(n, q, Axis::Z).unwrap());
    (M::identity(1 << n, 1 << n) - z) * c(0.5, 0.0)
}

fn dense_gate(n: usize, g: &Gate) -> M {
    let d = 1 << n;
    match g {
        Gate::Hadamard(q) => {
            let x = dense(&PauliString::single(n, *q, Axis::X).unwrap());
            let z = dense(&PauliString::single(n, *q, Axis::Z).unwrap());
            (x + z) * c(std::f64::consts::FRAC_1_SQRT_2, 0.0)
        }
        Gate::Cnot { control, target } => {
            let p1 = projector_one(n, *control);
            let x = dense(&PauliString::single(n, *target, Axis::X).unwrap());
            (M::identity(d, d) - &p1) + p1 * x
        }
        Gate::Pauli(p) => dense(p),
        Gate::PauliRotation { pauli, angle } => dense_rotation(pauli, *angle),
        Gate::ControlledRotation { control, pauli, angle } => {
            let p1 = projector_one(n, *control);
            (M::identity(d, d) - &p1) + p1 * dense_rotation(pauli, *angle)
        }
    }
}

fn vec_of(s: &StateVector) -> DMatrix<Complex64> {
    DMatrix::from_column_slice(s.dim(), 1, s.amplitudes())
}

fn axis() -> impl Strategy<Value = Option<Axis>> {
    prop_oneof![Just(None), Just(Some(Axis::X)), Just(Some(Axis::Y)), Just(Some(Axis::Z))]
}

fn hermitian_string(n: usize) -> impl Strategy<Value = PauliString> {
    (proptest::collection::vec(axis(), n), any::<bool>()).prop_map(move |(axes, neg)| {
        let sites: Vec<(usize, Axis)> = axes.iter().enumerate().filter_map(|(q, a)| a.map(|a| (q, a))).collect();
        let p = PauliString::from_sites(n, &sites).unwrap();
        if neg {
            p.negated()
        } else {
            p
        }
    })
}

fn gate3() -> impl Strategy<Value = Gate> {
    let n = 3;
    prop_oneof![
        (0..n).prop_map(Gate::Hadamard),
        (0..n, 1..n).prop_map(move |(c, dt)| Gate::Cnot { control: c, target: (c + dt) % n }),
        hermitian_string(n).prop_map(Gate::Pauli),
        (hermitian_string(n), -7.0..7.0f64).prop_map(|(p, a)| Gate::rotation(p, a)),
        (0..n, hermitian_string(n), -7.0..7.0f64).prop_filter_map("control must be outside the support", |(ctl, p, a)| {
            (p.support_mask() & (1 << ctl) == 0).then(|| Gate::ControlledRotation { control: ctl, pauli: p, angle: a })
        }),
    ]
}

fn random_state(n: usize) -> impl Strategy<Value = StateVector> {
    proptest::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 1 << n).prop_filter_map("nonzero", |v| {
        let mut s = StateVector::from_amplitudes(v.into_iter().map(|(a, b)| c(a, b)).collect()).ok()?;
        (s.normalize() > 1e-3).then_some(s)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn gates_match_dense_matrices(g in gate3(), psi in random_state(3)) {
        let mut s = psi.clone();
        s.apply_gate(&g).unwrap();
        let want = dense_gate(3, &g) * vec_of(&psi);
        let err = (vec_of(&s) - want).iter().fold(0.0f64, |m, z| m.max(z.norm()));
        prop_assert!(err < 1e-12, "{g:?}: {err}");
    }

    #[test]
    fn pauli_action_matches_dense(p in hermitian_string(4), psi in random_state(4)) {
        let mut s = psi.clone();
        s.apply_pauli(&p).unwrap();
        let err = (vec_of(&s) - dense(&p) * vec_of(&psi)).iter().fold(0.0f64, |m, z| m.max(z.norm()));
        prop_assert!(err < 1e-12);
    }

    #[test]
    fn fidelity_estimate_is_monotone(
        r in 0usize..300, h in 0usize..300, k in 0usize..300,
        e1 in 0.0..0.01f64, e2 in 0.0..0.01f64, de in 1e-6..1e-3f64,
    ) {
        let b = |r, h, k| GateBudget::single(Phase::Ansatz, GateCounts { rotations: r, hadamards: h, cnots: k });
        let f = estimate_fidelity(&b(r, h, k), e1, e2);
        prop_assert!(estimate_fidelity(&b(r + 1, h, k), e1, e2) <= f);
        prop_assert!(estimate_fidelity(&b(r, h + 1, k), e1, e2) <= f);
        prop_assert!(estimate_fidelity(&b(r, h, k + 1), e1, e2) <= f);
        prop_assert!(estimate_fidelity(&b(r, h, k), e1 + de, e2) <= f);
        prop_assert!(estimate_fidelity(&b(r, h, k), e1, e2 + de) <= f);
        prop_assert!((0.0..=1.0).contains(&f));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn centralizer_circuits_keep_every_stabilizer(
        theta in proptest::collection::vec(-3.2..3.2f64, 24),
        seed in 0u64..4,
        loops in 0usize..4,
    ) {
        let lat = build_torus(2, 2).unwrap();
        let spec = AnsatzSpec::centralizer(2);
        prop_assert_eq!(spec.num_params(&lat), theta.len());
        let pattern = SectorPattern::vortex_free(&lat, LOOP_SECTORS[loops]);
        let mut psi = prepare_pattern(&lat, &pattern, seed).unwrap().state;
        let before: Vec<f64> = lat.stabilizer_strings().unwrap().iter().map(|s| psi.pauli_expectation(s).unwrap().re).collect();
        assemble(&lat, &spec, &theta).unwrap().apply(&mut psi).unwrap();
        for (s, b) in lat.stabilizer_strings().unwrap().iter().zip(before) {
            prop_assert!((psi.pauli_expectation(s).unwrap().re - b).abs() < 1e-10);
        }
        prop_assert!((psi.norm_sqr() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn norm_survives_a_thousand_random_gates() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
    let n = 6;
    let mut psi = StateVector::plus(n).unwrap();
    for _ in 0..1000 {
        let q = rng.gen_range(0..n);
        let mut sites = Vec::new();
        for s in 0..n {
            if rng.gen_bool(0.4) {
                sites.push((s, [Axis::X, Axis::Y, Axis::Z][rng.gen_range(0..3)]));
            }
        }
        let p = PauliString::from_sites(n, &sites).unwrap();
        let g = match rng.gen_range(0..4) {
            0 => Gate::Hadamard(q),
            1 => Gate::Cnot { control: q, target: (q + 1) % n },
            2 => Gate::rotation(p, rng.gen_range(-3.0..3.0)),
            _ => {
                let p = PauliString::from_masks(n, p.x_mask() & !(1 << q), p.z_mask() & !(1 << q), 0).unwrap();
                Gate::ControlledRotation { control: q, pauli: p, angle: rng.gen_range(-3.0..3.0) }
            }
        };
        psi.apply_gate(&g).unwrap();
    }
    assert!((psi.norm_sqr() - 1.0).abs() < 1e-9);
}

#[test]
fn commutation_matches_dense_commutators() {
    let lat = build_torus(2, 2).unwrap();
    let mut strings = lat.stabilizer_strings().unwrap();
    strings.extend(centralizer_generators(&lat).unwrap());
    strings.push(PauliString::single(8, 3, Axis::Y).unwrap());
    let mats: Vec<M> = strings.iter().map(dense).collect();
    for (a, ma) in strings.iter().zip(&mats) {
        for (b, mb) in strings.iter().zip(&mats) {
            let comm = ma * mb - mb * ma;
            let dense_commutes = comm.iter().all(|z| z.norm() < 1e-12);
            assert_eq!(a.commutes(b).unwrap(), dense_commutes, "{a} {b}");
        }
    }
}

#[test]
fn krylov_imaginary_time_and_dense_agree() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
    let lat = build_torus(2, 2).unwrap();
    for _ in 0..10 {
        let mut params = KitaevParams::isotropic(rng.gen_range(-1.5..1.5), 8)
            .with_uniform_field([rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5), rng.gen_range(-1.0..1.0)]);
        params.jz = rng.gen_range(-1.5..1.5);
        let h = build_hamiltonian(&lat, &params).unwrap();
        let dense_e0 = dense_sum(&h).symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min);
        let krylov = ground_subspace(&h, 8, 1, 1e-8).unwrap().ground_energy();
        let tau = 1.0 / h.coefficient_norm();
        let imag = imaginary_time_gs(&h, &StateVector::plus(8).unwrap(), tau, 400_000, 1e-13).unwrap();
        let e_imag = imag.expectation(&h).unwrap();
        assert!((krylov - dense_e0).abs() < 1e-8, "krylov {krylov} dense {dense_e0}");
        assert!((e_imag - dense_e0).abs() < 1e-8, "imaginary {e_imag} dense {dense_e0}");
    }
}

#[test]
fn sector_minimum_is_the_global_ground_energy() {
    for (lx, ly) in [(2, 2), (2, 3)] {
        let lat = build_torus(lx, ly).unwrap();
        let n = lat.num_sites();
        let h = build_hamiltonian(&lat, &KitaevParams::isotropic(-1.0, n)).unwrap();
        let global = ground_subspace(&h, n, 1, 1e-8).unwrap().ground_energy();
        let mut best = f64::INFINITY;
        for pattern in SectorPattern::enumerate(&lat) {
            let opts = SolverOptions { constraints: pattern.constraints(&lat).unwrap(), ..Default::default() };
            match solve(&h, n, &opts) {
                Ok(r) => best = best.min(r.ground_energy()),
                Err(kitaev_qsim::Error::UnreachableSector(_)) => {}
                Err(e) => panic!("{e}"),
            }
        }
        assert!((best - global).abs() < 1e-8, "{lx}x{ly}: {best} vs {global}");
    }
}
