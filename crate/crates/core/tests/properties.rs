use ghz_distill_core::analysis::{
    closed_form_response_u1, first_order_response, threshold_bisect, ConvergenceRule, CoherentFamily,
    InputFamily, WhiteFamily,
};
use ghz_distill_core::protocol::{iterate_once, run_schedule, NoiseParams, Schedule};
use ghz_distill_core::qmat::{
    self, invert_permutation, partial_trace, permute_qubits, validate_density, ComplexMatrix, QubitIndex,
};
use ghz_distill_core::states::{
    self, fidelity, ghz, ghz_density, ghz_minus, random_feasible_perturbation, DensityMatrix, NoiseSpec,
};
use ghz_distill_core::unitaries::{self, check_fixed_point, u1, u2, u3, TwoQubitUnitary};
use ghz_distill_core::Complex64;
use proptest::prelude::*;

fn matrix_from(values: &[(f64, f64)], dim: usize) -> ComplexMatrix {
    let data = values.iter().map(|&(re, im)| Complex64::new(re, im)).collect();
    ComplexMatrix::from_row_major(dim, dim, data).unwrap()
}

fn random_density(values: &[(f64, f64)]) -> DensityMatrix {
    let a = matrix_from(values, 8);
    let p = &a * &a.adjoint();
    let tr = p.trace().re;
    let p = p.scale_real(1.0 / tr);
    DensityMatrix::new((&p + &p.adjoint()).scale_real(0.5)).unwrap()
}

fn gram_schmidt_unitary(values: &[(f64, f64)]) -> ComplexMatrix {
    let a = matrix_from(values, 4);
    let mut cols: Vec<Vec<Complex64>> = Vec::new();
    for j in 0..4 {
        let mut v: Vec<Complex64> = (0..4).map(|i| a[(i, j)]).collect();
        for q in &cols {
            let proj: Complex64 = q.iter().zip(&v).map(|(x, y)| x.conj() * y).sum();
            for (vi, qi) in v.iter_mut().zip(q) {
                *vi -= proj * qi;
            }
        }
        let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        cols.push(v.into_iter().map(|z| z / n).collect());
    }
    let mut u = ComplexMatrix::zeros(4, 4);
    for (j, col) in cols.iter().enumerate() {
        for (i, z) in col.iter().enumerate() {
            u[(i, j)] = *z;
        }
    }
    u
}

fn entries(n: usize) -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n)
}

fn catalog() -> Vec<TwoQubitUnitary> {
    vec![u1(), u2(), u3(0), u3(1), u3(-2)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn permutation_round_trip(vals in entries(64), perm in Just((0..6).collect::<Vec<usize>>()).prop_shuffle()) {
        let m = matrix_from(&vals, 8);
        let m = qmat::tensor(&m, &m);
        let p: Vec<QubitIndex> = perm.into_iter().map(QubitIndex).collect();
        let there = permute_qubits(&m, &p, 6).unwrap();
        let back = permute_qubits(&there, &invert_permutation(&p), 6).unwrap();
        prop_assert_eq!(back, m);
    }

    #[test]
    fn partial_trace_conserves(vals in entries(256), keep in prop::collection::btree_set(0usize..4, 1..4)) {
        let a = matrix_from(&vals, 16);
        let h = (&a + &a.adjoint()).scale_real(0.5);
        let keep: Vec<QubitIndex> = keep.into_iter().map(QubitIndex).collect();
        let red = partial_trace(&h, &keep, 4).unwrap();
        prop_assert!((red.trace() - h.trace()).norm() < 1e-12);
        prop_assert!(red.hermiticity_residual() < 1e-12);
    }

    #[test]
    fn map_preserves_density_validity(
        keep in entries(64),
        flag in entries(64),
        which in 0usize..5,
        p_m in 0.0f64..=1.0,
        p_g in 0.0f64..=0.9375,
    ) {
        let rk = random_density(&keep);
        let rf = random_density(&flag);
        let u = &catalog()[which];
        for noise in [NoiseParams::NONE, NoiseParams::new(p_m, p_g).unwrap()] {
            let out = iterate_once(&rk, &rf, u, noise).unwrap();
            let report = validate_density(out.state.matrix(), 1e-9);
            prop_assert!(report.is_valid(), "{:?}", report);
            prop_assert!(out.keep_probability > 0.0 && out.keep_probability <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn u1_distills_ghz_superpositions(ar in -1.0f64..1.0, ai in -1.0f64..1.0, br in -1.0f64..1.0, bi in -1.0f64..1.0) {
        prop_assume!(ar.hypot(ai) > 0.05 && br.hypot(bi) > 0.05);
        let mut v = vec![Complex64::new(0.0, 0.0); 8];
        v[0] = Complex64::new(ar, ai);
        v[7] = Complex64::new(br, bi);
        let psi = states::PureState::normalized(v).unwrap();
        let (a2, b2) = (psi.amplitudes()[0].norm_sqr(), psi.amplitudes()[7].norm_sqr());
        let rho = psi.to_density();
        let out = iterate_once(&rho, &rho, &u1(), NoiseParams::NONE).unwrap();
        prop_assert!(out.state.matrix().max_diff(ghz_density().matrix()) < 1e-12);
        prop_assert!((out.keep_probability - 2.0 * a2 * b2).abs() < 1e-12);
    }

    #[test]
    fn random_unitaries_fixed_point_concordance(vals in entries(16)) {
        let m = gram_schmidt_unitary(&vals);
        let u = TwoQubitUnitary::new(m, "random").unwrap();
        let g = ghz_density();
        let out = iterate_once(&g, &g, &u, NoiseParams::NONE).unwrap();
        let fixed = out.state.matrix().max_diff(g.matrix()) < 1e-10;
        prop_assert_eq!(fixed, check_fixed_point(&u, 1e-10).passed);
    }
}

#[test]
fn fixed_point_concordance_on_catalog() {
    let g = ghz_density();
    for u in catalog() {
        let out = iterate_once(&g, &g, &u, NoiseParams::NONE).unwrap();
        let fixed = out.state.matrix().max_diff(g.matrix()) < 1e-10;
        assert_eq!(fixed, check_fixed_point(&u, 1e-10).passed, "{}", u.label());
    }
}

#[test]
fn u3_double_step_returns_to_ghz() {
    let g = ghz_density();
    for n in -2..=3 {
        let u = u3(n);
        let once = iterate_once(&g, &g, &u, NoiseParams::NONE).unwrap();
        let twice = iterate_once(&once.state, &once.state, &u, NoiseParams::NONE).unwrap();
        assert!((twice.state.matrix() - g.matrix()).frobenius_norm() < 1e-12, "n = {n}");
    }
}

fn off_block_max(m: &ComplexMatrix) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..8 {
        for j in 0..8 {
            let in_block = (i == 0 || i == 7) && (j == 0 || j == 7);
            if !in_block {
                worst = worst.max(m[(i, j)].norm());
            }
        }
    }
    worst
}

#[test]
fn u1_confines_first_order_error_to_ghz_block() {
    let eps = 1e-3;
    for seed in 0..10 {
        let ma = random_feasible_perturbation(seed, 1.0);
        let mb = random_feasible_perturbation(seed + 100, 1.0);
        let ra = states::perturbed_input(&NoiseSpec::Custom { epsilon: eps, m: ma }).unwrap();
        let rb = states::perturbed_input(&NoiseSpec::Custom { epsilon: eps, m: mb }).unwrap();
        for (k, f) in [(&ra, &ra), (&ra, &rb)] {
            let out = iterate_once(k, f, &u1(), NoiseParams::NONE).unwrap();
            let diff = out.state.matrix() - ghz_density().matrix();
            assert!(off_block_max(&diff) <= 1e-4, "seed {seed}: {}", off_block_max(&diff));
        }
    }
}

fn block_perturbation(c: f64, d: Complex64) -> ComplexMatrix {
    // c (|GHZ-><GHZ-| - |GHZ><GHZ|) + (d |GHZ-><GHZ| + h.c.)
    let gm = ghz_minus();
    let g = ghz();
    let diag = &gm.to_density().into_matrix() - g.to_density().matrix();
    let cross = ComplexMatrix::outer(gm.amplitudes(), g.amplitudes()).scale(d);
    &diag.scale_real(c) + &(&cross + &cross.adjoint())
}

#[test]
fn u2_cancels_block_noise_to_first_order() {
    for (c, d) in [(1.0, Complex64::new(0.3, 0.0)), (0.5, Complex64::new(0.1, -0.2)), (2.0, Complex64::new(0.0, 0.0))] {
        let m = block_perturbation(c, d);
        let infid = |eps: f64| {
            let rho = states::perturbed_input(&NoiseSpec::Custom { epsilon: eps, m: m.clone() }).unwrap();
            1.0 - fidelity(&iterate_once(&rho, &rho, &u2(), NoiseParams::NONE).unwrap().state)
        };
        let (a, b) = (infid(1e-3), infid(5e-4));
        assert!(a <= 10.0 * 1e-6, "c={c}: {a}");
        assert!((a / b - 4.0).abs() < 0.5, "ratio {}", a / b);
    }
    // the response matrix itself vanishes, also for distinct replicas
    let m = block_perturbation(1.0, Complex64::new(0.2, 0.1));
    let r = first_order_response(&u2(), &m, 1e-4).unwrap();
    assert!(r.matrix.max_norm() < 1e-6);
    let ra = states::perturbed_input(&NoiseSpec::Custom { epsilon: 1e-3, m: m.clone() }).unwrap();
    let rb = states::perturbed_input(&NoiseSpec::Custom {
        epsilon: 1e-3,
        m: block_perturbation(0.4, Complex64::new(-0.1, 0.0)),
    })
    .unwrap();
    let out = iterate_once(&ra, &rb, &u2(), NoiseParams::NONE).unwrap();
    assert!(1.0 - fidelity(&out.state) < 1e-5);
}

#[test]
fn alternating_suppresses_to_second_order() {
    for seed in 0..8 {
        let m = random_feasible_perturbation(seed, 1.0);
        let infid = |eps: f64| {
            let rho = states::perturbed_input(&NoiseSpec::Custom { epsilon: eps, m: m.clone() }).unwrap();
            1.0 - run_schedule(&rho, &Schedule::alternating(), 1, NoiseParams::NONE).unwrap()[0].fidelity
        };
        let ratio = infid(2e-3) / infid(1e-3);
        assert!((3.5..=4.5).contains(&ratio), "seed {seed}: ratio {ratio}");
    }
}

#[test]
fn response_richardson_consistency() {
    for seed in 0..5 {
        let m = states::random_traceless_hermitian(seed, 1.0);
        let closed = closed_form_response_u1(&m);
        let err = |h: f64| first_order_response(&u1(), &m, h).unwrap().matrix.max_diff(&closed);
        let ratio = err(1e-2) / err(5e-3);
        assert!((3.5..=4.5).contains(&ratio), "seed {seed}: {ratio}");
    }
}

#[test]
fn response_is_hermitian_to_step_order() {
    let h = 1e-3;
    for seed in 0..5 {
        let m = states::random_traceless_hermitian(seed, 1.0);
        for u in [u1(), u2(), u3(0)] {
            let r = first_order_response(&u, &m, h).unwrap();
            assert!(r.matrix.hermiticity_residual() < 10.0 * h * h);
        }
    }
}

#[test]
fn single_u2_is_first_order_on_generic_noise() {
    // white noise reaches outside the GHZ block; U2 alone leaves a linear term
    let m = states::white_perturbation();
    let slope = ghz_distill_core::analysis::convergence_order(
        &Schedule::Single(u2()),
        &m,
        &[1e-2, 5e-3, 2.5e-3],
    )
    .unwrap();
    assert!((slope - 1.0).abs() < 0.1, "slope {slope}");
}

#[test]
fn threshold_is_monotone_consistent() {
    let rule = ConvergenceRule::default();
    let sched = Schedule::alternating();
    let family = CoherentFamily::default();
    let res = threshold_bisect(&family, 0.0, 1.0, 1e-3, &sched, NoiseParams::NONE, rule).unwrap();
    assert!(res.lo < res.threshold && res.threshold < res.hi);
    assert!(res.hi - res.lo <= 1e-3);
    let converges = |x: f64| {
        let (rho, noise) = family.instantiate(x, NoiseParams::NONE).unwrap();
        rule.converges(&rho, &sched, noise).unwrap()
    };
    for k in 1..=3 {
        let step = 0.02 * k as f64;
        assert!(converges(res.threshold - 1e-3 - step));
        assert!(!converges(res.threshold + 1e-3 + step));
    }
}

#[test]
fn infidelity_decreases_below_threshold() {
    let sched = Schedule::alternating();
    let inputs: Vec<DensityMatrix> = [0.05, 0.15, 0.3]
        .iter()
        .map(|&e| states::coherent_pair_input(e).unwrap())
        .chain([0.1, 0.4, 0.6].iter().map(|&e| states::white_noise_input(e).unwrap()))
        .collect();
    for rho in inputs {
        let recs = run_schedule(&rho, &sched, 8, NoiseParams::NONE).unwrap();
        let infid: Vec<f64> = recs.iter().map(|r| 1.0 - r.fidelity).collect();
        for w in infid.windows(2) {
            assert!(w[1] <= w[0] || w[1] < 1e-15, "{infid:?}");
        }
    }
}

#[test]
fn white_family_name_and_unit_phase_classification() {
    assert_eq!(WhiteFamily.name(), "white");
    let m = u1().matrix().scale(Complex64::from_polar(1.0, -2.1));
    let u = TwoQubitUnitary::new(m, "u1-phased").unwrap();
    match unitaries::classify_solution(&u, 1e-10) {
        unitaries::SolutionClass::TypeA { relative_phase } => assert!(relative_phase.abs() < 1e-10),
        other => panic!("{other:?}"),
    }
    assert!(qmat::is_unitary(u.matrix(), 1e-12));
}
