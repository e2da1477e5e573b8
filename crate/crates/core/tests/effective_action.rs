mod common;

use common::rel;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use superradiance::boundary::critical_omega;
use superradiance::effective_action::{
    certify_bounds, chi2m_numeric, chi4_admissible, chi4_general, chi4_zero, chi_bound,
    chi_coefficient, propagator, s_eff2_kernel, sqrt6_bound, static_kernel_min_eigenvalue,
    ActionError, Kernel, MatsubaraMode, PoleSign, SumOptions,
};
use superradiance::landau::landau_coefficients;
use superradiance::models::{Family, ModelSpec};
use superradiance::Beta;

fn jc(n: usize, om: f64, g: f64) -> ModelSpec<f64> {
    ModelSpec::jaynes_cummings(n, 1.0, om, g)
}

fn crel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm()
}

#[test]
fn propagator_magnitude_bound() {
    for (beta, om) in [(1.0, 1.0), (0.1, 3.0), (20.0, 0.5)] {
        let cap = 2.0 / (beta * om);
        for q in -10_000..=10_000 {
            let mode = MatsubaraMode::fermion(q, beta).unwrap();
            for sign in [PoleSign::Plus, PoleSign::Minus] {
                let g = propagator(mode, sign, om).unwrap();
                assert!(g.norm() <= cap * (1.0 + 1e-15), "q = {q}");
            }
        }
    }
}

#[test]
fn propagator_sign_irrelevant_without_splitting() {
    for q in [-3, 0, 7] {
        let mode = MatsubaraMode::fermion(q, 1.7).unwrap();
        assert_eq!(
            propagator(mode, PoleSign::Plus, 0.0).unwrap(),
            propagator(mode, PoleSign::Minus, 0.0).unwrap()
        );
    }
}

#[test]
fn propagator_reflection() {
    // Reflecting q → −q−1 conjugates the frequency but not the iπ/(2β)
    // shift, so 1/𝒢±(−q−1) = −1/𝒢∓(q) + iπ and = (1/𝒢±(q))* + iπ.
    let (beta, om) = (1.3, 0.8);
    for q in [-5, -1, 0, 2, 11] {
        let m = MatsubaraMode::fermion(q, beta).unwrap();
        let r = MatsubaraMode::fermion(-q - 1, beta).unwrap();
        for (s, t) in [(PoleSign::Plus, PoleSign::Minus), (PoleSign::Minus, PoleSign::Plus)] {
            let lhs = propagator(r, s, om).unwrap().inv();
            let a = -propagator(m, t, om).unwrap().inv() + Complex64::new(0.0, std::f64::consts::PI);
            let b = propagator(m, s, om).unwrap().inv().conj() + Complex64::new(0.0, std::f64::consts::PI);
            assert!((lhs - a).norm() < 1e-13 && (lhs - b).norm() < 1e-13);
            // without the shift the plain reflection would fail
            assert!((lhs + propagator(m, t, om).unwrap().inv()).norm() > 1.0);
        }
    }
}

#[test]
fn jc_static_kernel() {
    let (w, om, g, beta) = (1.1, 0.9, 0.7, 2.5);
    let s = ModelSpec::jaynes_cummings(2, w, om, g);
    let k = s_eff2_kernel(MatsubaraMode::boson(0, beta).unwrap(), &s).unwrap();
    let Kernel::Scalar(k) = k else { panic!("JC kernel is scalar") };
    let expect = w - g * g * (beta * om / 2.0f64).tanh() / om;
    assert!((k.re - expect).abs() < 1e-14 && k.im == 0.0);

    let wc = critical_omega(&s, Beta::Finite(beta)).unwrap().critical_omega;
    let at = s_eff2_kernel(MatsubaraMode::boson(0, beta).unwrap(), &s.with_omega(wc)).unwrap();
    let Kernel::Scalar(at) = at else { unreachable!() };
    assert!(at.re.abs() < 1e-14);
}

#[test]
fn jc_dynamic_kernel() {
    let (w, om, g, beta) = (1.1, 0.9, 0.7, 2.5);
    let s = jc(1, om, g).with_omega(w);
    for n in [-3i64, 1, 4] {
        let mode = MatsubaraMode::boson(n, beta).unwrap();
        let Kernel::Scalar(k) = s_eff2_kernel(mode, &s).unwrap() else { unreachable!() };
        let wn = mode.frequency();
        let t = (beta * om / 2.0f64).tanh();
        let expect = Complex64::new(w, wn) - g * g * t / Complex64::new(om, wn);
        assert!((k - expect).norm() < 1e-14);
    }
}

#[test]
fn free_kernel() {
    let s = ModelSpec::dicke(2, 0.6, 1.0, 0.0);
    for n in [-2i64, 0, 5] {
        let mode = MatsubaraMode::boson(n, 3.0).unwrap();
        let Kernel::Block(m) = s_eff2_kernel(mode, &s).unwrap() else { panic!("Dicke kernel is a block") };
        assert_eq!(m[0][0], Complex64::new(0.6, mode.frequency()));
        assert_eq!(m[0][1], Complex64::new(0.0, 0.0));
    }
    let j = jc(1, 1.0, 0.0).with_omega(0.6);
    let Kernel::Scalar(k) = s_eff2_kernel(MatsubaraMode::boson(2, 3.0).unwrap(), &j).unwrap() else { unreachable!() };
    assert_eq!(k, Complex64::new(0.6, 4.0 * std::f64::consts::PI / 3.0));
}

#[test]
fn dicke_static_block_onset() {
    for beta in [0.4, 2.0, 30.0] {
        let s = ModelSpec::dicke(3, 1.0, 1.2, 0.45);
        let wc = critical_omega(&s, Beta::Finite(beta)).unwrap().critical_omega;
        let t = (beta * 1.2f64 / 2.0).tanh();
        assert!(rel(wc, 4.0 * 0.45f64.powi(2) * t / 1.2) < 1e-14);
        let at = static_kernel_min_eigenvalue(&s.with_omega(wc), Beta::Finite(beta)).unwrap();
        assert!(at.abs() < 1e-12, "{at}");
        assert!(static_kernel_min_eigenvalue(&s.with_omega(wc * 1.01), Beta::Finite(beta)).unwrap() > 0.0);
        assert!(static_kernel_min_eigenvalue(&s.with_omega(wc * 0.99), Beta::Finite(beta)).unwrap() < 0.0);
        // the block from the kernel itself
        let mode = MatsubaraMode::boson(0, beta).unwrap();
        let Kernel::Block(m) = s_eff2_kernel(mode, &s.with_omega(wc)).unwrap() else { unreachable!() };
        let (a, b, d) = (m[0][0].re, m[0][1].re, m[1][1].re);
        let low = 0.5 * (a + d) - (0.25 * (a - d).powi(2) + b * b).sqrt();
        assert!(low.abs() < 1e-12);
    }
}

#[test]
fn chi4_zero_matches_quartic_landau_coefficient() {
    let (om, g) = (1.0, 0.6);
    let s = jc(1, om, g);
    let beta = 50.0 / om;
    let chi = chi4_zero(&s, Beta::Finite(beta)).unwrap();
    let f4 = landau_coefficients(&s, Beta::Finite(beta), 4).unwrap().f4;
    assert!(rel(chi / beta, f4) < 1e-6, "{} vs {f4}", chi / beta);
    // and the large-β limit (β/N) g⁴/Ω³
    assert!(rel(chi, beta * g.powi(4) / om.powi(3)) < 1e-12);
}

#[test]
fn chi4_zero_small_beta_series() {
    let (om, g, n) = (2.0, 0.8, 3usize);
    let beta = 1e-3 / om;
    let chi = chi4_zero(&jc(n, om, g), Beta::Finite(beta)).unwrap();
    let series = g.powi(4) * beta.powi(4) / (12.0 * n as f64);
    assert!(rel(chi, series) < 1e-3, "{chi} vs {series}");
}

#[test]
fn chi4_zero_vanishes_without_coupling() {
    assert_eq!(chi4_zero(&jc(1, 1.0, 0.0), Beta::Finite(1.0)).unwrap(), 0.0);
}

#[test]
fn chi4_examples_against_numeric_sum() {
    let s = jc(1, 1.0, 0.5);
    let beta = Beta::Finite(1.0);
    let closed = chi4_general(1, 2, 3, &s, beta).unwrap();
    let numeric = chi2m_numeric(2, &[1, 2, 3], &s, beta, SumOptions::default()).unwrap();
    assert!(crel(closed, numeric) < 1e-8, "{closed} vs {numeric}");

    let zero = chi4_zero(&s, beta).unwrap();
    let numeric = chi2m_numeric(2, &[0, 0, 0], &s, beta, SumOptions::default()).unwrap();
    assert!(crel(Complex64::new(zero, 0.0), numeric) < 1e-8, "{zero} vs {numeric}");
}

#[test]
fn quadratic_vertex_is_beta_times_kernel_interaction() {
    for (om, g, beta, n) in [(1.0, 0.5, 1.0, 1usize), (2.0, 0.3, 4.0, 2), (0.5, 1.0, 0.3, 3)] {
        let s = ModelSpec::jaynes_cummings(n, 1.3, om, g);
        for idx in [0i64, 1, -2] {
            let mode = MatsubaraMode::boson(idx, beta).unwrap();
            let Kernel::Scalar(k) = s_eff2_kernel(mode, &s).unwrap() else { unreachable!() };
            let interaction = k - Complex64::new(1.3, mode.frequency());
            let numeric = chi2m_numeric(1, &[idx], &s, Beta::Finite(beta), SumOptions::default()).unwrap();
            assert!(crel(numeric / beta, interaction) < 1e-10, "{} vs {interaction}", numeric / beta);
        }
    }
}

#[test]
fn coincident_poles_are_refused() {
    let s = jc(1, 1.0, 0.5);
    for t in [(0, 0, 0), (1, 1, 2), (2, 3, 3)] {
        assert!(!chi4_admissible(t.0, t.1, t.2));
        assert_eq!(
            chi4_general(t.0, t.1, t.2, &s, Beta::Finite(1.0)),
            Err(ActionError::CoincidentPoles(vec![t.0, t.1, t.2]))
        );
    }
    // the dispatcher falls back to the numeric sum instead
    let c = chi_coefficient(2, &[1, 1, 2], &s, Beta::Finite(1.0)).unwrap();
    assert!(c.value.norm() > 0.0 && c.within_bound());
}

#[test]
fn vertices_need_a_single_coupling_family() {
    let s = ModelSpec::inhomogeneous(1.0, vec![1.0, 2.0], vec![0.3, 0.4]);
    assert_eq!(chi4_zero(&s, Beta::Finite(1.0)), Err(ActionError::NotApplicable(Family::Inhomogeneous)));
}

#[test]
fn vertex_decays_under_index_doubling() {
    let s = jc(1, 1.0, 0.5);
    let beta = Beta::Finite(2.0);
    let mut last = f64::INFINITY;
    for k in 0..8 {
        let f = 1i64 << k;
        let v = chi4_general(3 * f, 7 * f, 2 * f, &s, beta).unwrap().norm();
        assert!(v < last, "scale {f}: {v} ≥ {last}");
        last = v;
    }
}

#[test]
fn summand_tail_ratios() {
    // |term(2q)| / |term(q)| → 2^{−2m} for a chain of 2m propagators
    let (beta, om) = (1.0, 1.0);
    let term = |q: i64, m: usize| -> f64 {
        let shifts = [0i64, -1, 1, -2, 2, -3];
        (0..2 * m)
            .map(|k| {
                let mode = MatsubaraMode::fermion(q + shifts[k], beta).unwrap();
                let sign = if k % 2 == 0 { PoleSign::Plus } else { PoleSign::Minus };
                propagator(mode, sign, om).unwrap().norm()
            })
            .product()
    };
    let q = 1 << 14;
    for m in 1..=3 {
        let ratio = term(2 * q, m) / term(q, m);
        let expect = 0.25f64.powi(m as i32);
        assert!(rel(ratio, expect) < 1e-3, "m = {m}: {ratio}");
    }
}

#[test]
fn numeric_sum_reports_nonconvergence() {
    let s = jc(1, 1.0, 0.5);
    let opts = SumOptions { initial_window: Some(4), max_window: 8, rel_tol: 1e-15 };
    assert!(matches!(
        chi2m_numeric(2, &[1, 2, 3], &s, Beta::Finite(1.0), opts),
        Err(ActionError::NonConvergence { .. })
    ));
    assert!(matches!(
        chi2m_numeric(2, &[1, 2], &s, Beta::Finite(1.0), SumOptions::default()),
        Err(ActionError::TupleLength { .. })
    ));
}

#[test]
fn oracle_equivalence_grid() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut checked = 0;
    while checked < 100 {
        let beta = 10f64.powf(rng.random_range(-1.0..1.3));
        let om = rng.random_range(0.2..3.0);
        let g = rng.random_range(0.05..1.5);
        let n = rng.random_range(1..=4usize);
        let s = if rng.random_bool(0.5) { jc(n, om, g) } else { ModelSpec::dicke(n, 1.0, om, g) };
        let t: Vec<i64> = (0..3).map(|_| rng.random_range(-6..=6)).collect();
        let b = Beta::Finite(beta);
        let numeric = chi2m_numeric(2, &t, &s, b, SumOptions::default()).unwrap();
        if chi4_admissible(t[0], t[1], t[2]) {
            let closed = chi4_general(t[0], t[1], t[2], &s, b).unwrap();
            assert!(crel(closed, numeric) < 1e-8, "{t:?} β={beta}: {closed} vs {numeric}");
        } else {
            let zero = chi2m_numeric(2, &[0, 0, 0], &s, b, SumOptions::default()).unwrap();
            let closed = chi4_zero(&s, b).unwrap();
            assert!(crel(Complex64::new(closed, 0.0), zero) < 1e-8, "β={beta}: {closed} vs {zero}");
        }
        checked += 1;
    }
}

#[test]
fn bounds_hold_on_samples() {
    let s = jc(2, 1.3, 0.7);
    let beta = Beta::Finite(3.0);
    let c2 = certify_bounds(2, &s, beta, 10_000, 12, 1).unwrap();
    assert_eq!(c2.violations, 0, "{c2:?}");
    assert_eq!(c2.sqrt6_violations, 0, "{c2:?}");
    assert!(c2.empirical_sup <= c2.bound);
    let c3 = certify_bounds(3, &s, beta, 10_000, 12, 2).unwrap();
    assert_eq!(c3.violations, 0, "{c3:?}");
    assert!(c3.sqrt6_bound.is_none());
}

#[test]
fn bound_scales_with_atom_number() {
    let beta = Beta::Finite(2.0);
    for m in [2usize, 3, 4] {
        let b1 = chi_bound(m, &jc(1, 1.0, 0.5), beta, None).unwrap().bound;
        for n in [2usize, 4] {
            let bn = chi_bound(m, &jc(n, 1.0, 0.5), beta, None).unwrap().bound;
            assert!(rel(bn / b1, (n as f64).powi(1 - m as i32)) < 1e-12);
        }
    }
}

#[test]
fn bound_vanishes_in_weak_coupling() {
    let beta = Beta::Finite(2.0);
    let mut last = f64::INFINITY;
    for g in [1.0, 0.1, 0.01, 0.001] {
        let b = chi_bound(2, &jc(1, 1.0, g), beta, None).unwrap().bound;
        assert!(b < last);
        last = b;
    }
    assert!(last < 1e-10);
    assert!(sqrt6_bound(&jc(1, 1.0, 1e-3), beta).unwrap() < 1e-10);
}

#[test]
fn quartic_vertex_fades_along_the_scaling_family() {
    let base = ModelSpec::dicke(1, 1.0, 1.0, 0.5);
    let beta = Beta::Finite(5.0);
    let mut last = f64::INFINITY;
    for lambda in [1.0, 10.0, 100.0, 1000.0] {
        let v = chi4_zero(&base.lambda_scaled(lambda), beta).unwrap();
        assert!(v < last);
        last = v;
    }
    let v1 = chi4_zero(&base.lambda_scaled(100.0), beta).unwrap();
    assert!(rel(last / v1, 0.1) < 1e-9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn chi4_zero_is_positive(
        log_y in -3.0f64..3.0,
        om in 0.01f64..100.0,
        g in 1e-3f64..10.0,
        n in 1usize..8,
    ) {
        let beta = 10f64.powf(log_y) / om;
        let v = chi4_zero(&jc(n, om, g), Beta::Finite(beta)).unwrap();
        prop_assert!(v > 0.0, "{}", v);
    }

    #[test]
    fn coefficient_within_bound(
        t in proptest::collection::vec(-20i64..=20, 3),
        beta in 0.1f64..20.0,
        g in 0.05f64..2.0,
    ) {
        let s = jc(1, 1.0, g);
        let c = chi_coefficient(2, &t, &s, Beta::Finite(beta)).unwrap();
        prop_assert!(c.within_bound());
        prop_assert!(c.value.norm() <= sqrt6_bound(&s, Beta::Finite(beta)).unwrap());
    }
}
