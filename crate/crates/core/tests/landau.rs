mod common;

use std::f64::consts::PI;

use common::{arb_spec, rel};
use proptest::prelude::*;
use superradiance::boundary::critical_omega;
use superradiance::landau::{
    classical_gap, f2_closed_form, fit_exponent, fit_power_law, free_energy, landau_coefficients,
    minimize_free_energy, ClassicalField, ExponentScan, LandauError,
};
use superradiance::models::{Family, ModelSpec};
use superradiance::Beta;

fn model_one(omega: f64) -> ModelSpec<f64> {
    ModelSpec::inhomogeneous(omega, vec![9.0, 50.0, 110.0], vec![12.0, 1.0, 100.0])
}

fn model_three(omega: f64) -> ModelSpec<f64> {
    ModelSpec::nonlinear_kappa(1, omega, 100.0, 12.0, 0.5)
}

fn condensed(spec: &ModelSpec<f64>, beta: Beta<f64>) -> bool {
    minimize_free_energy(spec, beta).unwrap().field.amplitude > 0.0
}

/// Largest ω with a nonzero minimizer, by bisection on [lo, hi].
fn onset(make: impl Fn(f64) -> ModelSpec<f64>, beta: Beta<f64>, mut lo: f64, mut hi: f64) -> f64 {
    assert!(condensed(&make(lo), beta) && !condensed(&make(hi), beta));
    while hi - lo > 1e-12 * hi {
        let mid = 0.5 * (lo + hi);
        if condensed(&make(mid), beta) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn gap_at_zero_field() {
    let specs = [
        ModelSpec::jaynes_cummings(2, 1.0, 1.5, 0.3),
        ModelSpec::dicke(2, 1.0, 1.5, 0.3),
        ModelSpec::anisotropic(2, 1.0, 1.5, 0.3, 0.1, 1.0),
        ModelSpec::nonlinear_kappa(2, 1.0, 1.5, 0.3, 0.2),
        ModelSpec::inhomogeneous(1.0, vec![1.5, 0.7], vec![0.3, 0.4]),
    ];
    for s in &specs {
        for i in 0..s.n_atoms {
            let e = classical_gap(s, ClassicalField::zero(), i).unwrap();
            assert_eq!(e, s.atom_splittings[i] / 2.0, "{:?}", s.family);
        }
    }
}

#[test]
fn uncoupled_gap_ignores_field() {
    let s = ModelSpec::dicke(1, 1.0f64, 3.0, 0.0);
    for a in [0.0, 0.5, 10.0, 1e4] {
        assert_eq!(classical_gap(&s, ClassicalField::real(a), 0).unwrap(), 1.5);
    }
}

#[test]
fn gap_formulas_per_family() {
    let (b, x) = (0.7f64, 0.49f64);
    let f = ClassicalField::real(b);
    let jc = ModelSpec::jaynes_cummings(2, 1.0, 1.5, 0.3);
    assert!(rel(classical_gap(&jc, f, 1).unwrap(), (1.5f64.powi(2) / 4.0 + 0.09 * x / 2.0).sqrt()) < 1e-15);

    let inh = ModelSpec::inhomogeneous(1.0, vec![1.5, 0.7], vec![0.3, 0.4]);
    let e1 = (0.7f64.powi(2) / 4.0 + 0.16 * x / 2.0).sqrt();
    assert!(rel(classical_gap(&inh, f, 1).unwrap(), e1) < 1e-15);

    let kap = ModelSpec::nonlinear_kappa(2, 1.0, 1.5, 0.3, 0.2);
    let ek = ((0.75 + 0.2 * x).powi(2) + 0.09 * x / 2.0).sqrt();
    assert!(rel(classical_gap(&kap, f, 0).unwrap(), ek) < 1e-15);
}

#[test]
fn anisotropic_gap_matches_complex_field() {
    let (g1, g2, om, n) = (0.4f64, 0.25f64, 1.3f64, 2usize);
    let s = ModelSpec::anisotropic(n, 1.0, om, g1, g2, 0.0);
    for (a, th) in [(0.3, 0.0), (1.1, 0.4), (2.0, 2.5), (0.8, PI / 2.0)] {
        // |g₁b₀ + g₂b₀*|² from the complex amplitude directly
        let (re, im) = (a * f64::cos(th), a * f64::sin(th));
        let mix_re = (g1 + g2) * re;
        let mix_im = (g1 - g2) * im;
        let e = (om * om / 4.0 + (mix_re * mix_re + mix_im * mix_im) / n as f64).sqrt();
        let got = classical_gap(&s, ClassicalField::new(a, th), 0).unwrap();
        assert!(rel(got, e) < 1e-14, "{got} vs {e}");
    }
    // equal amplitudes at θ = 0 give the η = 2 gap
    let eq = ModelSpec::anisotropic(n, 1.0, om, g1, g1, 0.0);
    let e = (om * om / 4.0 + 4.0 * g1 * g1 * 0.09 / n as f64).sqrt();
    assert!(rel(classical_gap(&eq, ClassicalField::real(0.3), 0).unwrap(), e) < 1e-15);
}

#[test]
fn zero_field_free_energy() {
    let (n, om, beta) = (3usize, 1.7f64, 2.3f64);
    let s = ModelSpec::dicke(n, 1.0, om, 0.4);
    let f0 = free_energy(&s, Beta::Finite(beta), ClassicalField::zero()).unwrap();
    let expect = -(n as f64) / beta * (2.0 * (beta * om / 2.0).cosh()).ln();
    assert!(rel(f0, expect) < 1e-14);
    let c = landau_coefficients(&s, Beta::Finite(beta), 2).unwrap();
    assert!(rel(c.f0, expect) < 1e-14);
}

#[test]
fn zero_temperature_limit() {
    let s = ModelSpec::jaynes_cummings(2, 0.8f64, 1.0, 1.2);
    for a in [0.0, 0.3, 1.0, 3.0] {
        let b0 = ClassicalField::real(a);
        let cold = free_energy(&s, Beta::Infinite, b0).unwrap();
        let warm = free_energy(&s, Beta::Finite(50.0), b0).unwrap();
        assert!(rel(warm, cold) < 1e-10, "{warm} vs {cold}");
        let e = classical_gap(&s, b0, 0).unwrap();
        assert!(rel(cold, 0.8 * a * a - 2.0 * e) < 1e-14);
    }
}

#[test]
fn large_argument_free_energy_is_finite() {
    let s = ModelSpec::dicke(1, 1.0f64, 1e3, 1.0);
    let f = free_energy(&s, Beta::Finite(1e3), ClassicalField::real(2.0)).unwrap();
    assert!(f.is_finite());
}

#[test]
fn curvature_at_origin_by_finite_differences() {
    let (w, om, g) = (1.3f64, 1.0f64, 0.9f64);
    for beta in [0.5, 2.0, 10.0] {
        let s = ModelSpec::jaynes_cummings(1, w, om, g);
        let f = |a: f64| free_energy(&s, Beta::Finite(beta), ClassicalField::real(a)).unwrap();
        // F(a) = F0 + F2 a² + …, so (F(h) − F(0))/h² → F2; Richardson in h²
        let d = |h: f64| (f(h) - f(0.0)) / (h * h);
        let (h1, h2) = (2e-3, 1e-3);
        let est = (4.0 * d(h2) - d(h1)) / 3.0;
        let expect = w - g * g * (beta * om / 2.0).tanh() / om;
        assert!((est - expect).abs() < 1e-6, "β = {beta}: {est} vs {expect}");
    }
}

#[test]
fn normal_phase_minimum_is_the_origin() {
    let s = ModelSpec::dicke(2, 3.0f64, 1.0, 0.5);
    let m = minimize_free_energy(&s, Beta::Finite(4.0)).unwrap();
    assert_eq!(m.field.amplitude, 0.0);
    assert_eq!(m.condensation_energy, 0.0);
}

#[test]
fn kappa_onset() {
    assert!(!condensed(&model_three(1.945), Beta::Infinite));
    assert!(condensed(&model_three(1.935), Beta::Infinite));
    let w = onset(model_three, Beta::Infinite, 1.0, 3.0);
    assert!((w - 1.94).abs() < 0.005, "{w}");
    assert_eq!(minimize_free_energy(&model_three(2.0), Beta::Infinite).unwrap().field.amplitude, 0.0);
}

#[test]
fn inhomogeneous_onset() {
    let w = onset(model_one, Beta::Infinite, 20.0, 50.0);
    assert!((w - 35.6).abs() < 0.1, "{w}");
}

#[test]
fn f2_closed_form_matches_numeric() {
    let specs = [
        ModelSpec::jaynes_cummings(1, 1.3, 1.0, 0.9),
        ModelSpec::dicke(3, 0.4, 2.0, 0.3),
        ModelSpec::anisotropic(2, 1.0, 1.0, 0.6, -0.2, 0.5),
        ModelSpec::inhomogeneous(2.0, vec![1.0, 3.0], vec![0.5, 1.5]),
        ModelSpec::nonlinear_kappa(2, 1.0, 1.0, 0.5, 0.1),
    ];
    for s in &specs {
        for beta in [Beta::Finite(0.3), Beta::Finite(3.0), Beta::Infinite] {
            let c = landau_coefficients(s, beta, 8).unwrap();
            assert!(rel(c.f2, c.f2_closed_form) < 1e-6, "{:?}: {} vs {}", s.family, c.f2, c.f2_closed_form);
        }
    }
}

#[test]
fn large_beta_asymptotics() {
    let (om, g, n) = (1.0f64, 0.7f64, 1.0f64);
    let s = ModelSpec::jaynes_cummings(1, 1.0, om, g);
    let c = landau_coefficients(&s, Beta::Finite(50.0 / om), 8).unwrap();
    let f4 = g.powi(4) / (n * om.powi(3));
    let f6 = -2.0 * g.powi(6) / (n * n * om.powi(5));
    let f8 = 5.0 * g.powi(8) / (n.powi(3) * om.powi(7));
    assert!(rel(c.f4, f4) < 0.01, "F4 {} vs {f4}", c.f4);
    assert!(rel(c.f6, f6) < 0.01, "F6 {} vs {f6}", c.f6);
    assert!(rel(c.f8, f8) < 0.02, "F8 {} vs {f8}", c.f8);
    assert!(c.f4 > 0.0 && c.f6 < 0.0 && c.f8 > 0.0);
}

#[test]
fn uncoupled_coefficients() {
    let s = ModelSpec::dicke(2, 1.7f64, 1.0, 0.0);
    let c = landau_coefficients(&s, Beta::Finite(2.0), 8).unwrap();
    assert!(rel(c.f2, 1.7) < 1e-12);
    for v in [c.f4, c.f6, c.f8] {
        assert!(v.abs() < 1e-10, "{v}");
    }
}

#[test]
fn invalid_order_is_rejected() {
    let s = ModelSpec::dicke(1, 1.0f64, 1.0, 0.5);
    assert_eq!(landau_coefficients(&s, Beta::Infinite, 5), Err(LandauError::InvalidOrder));
}

#[test]
fn hubbard_term_does_not_move_the_onset() {
    let beta = Beta::Finite(3.0);
    let onsets: Vec<f64> = [0.0, 1.0, 10.0]
        .iter()
        .map(|&u| onset(|w| ModelSpec::anisotropic(2, w, 1.0, 0.6, 0.3, u), beta, 0.2, 2.0))
        .collect();
    let wc = critical_omega(&ModelSpec::anisotropic(2, 1.0, 1.0, 0.6, 0.3, 0.0), beta)
        .unwrap()
        .critical_omega;
    for w in &onsets {
        assert!(rel(*w, onsets[0]) < 1e-6, "{onsets:?}");
        assert!(rel(*w, wc) < 1e-6, "{w} vs {wc}");
    }
}

#[test]
fn order_parameter_is_continuous_at_onset() {
    let beta = Beta::Finite(5.0);
    let make = |w| ModelSpec::dicke(2, w, 1.0, 0.5);
    let wc = critical_omega(&make(1.0), beta).unwrap().critical_omega;
    let mut last = f64::INFINITY;
    for d in [1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6] {
        let a = minimize_free_energy(&make(wc * (1.0 - d)), beta).unwrap().field.amplitude;
        assert!(a > 0.0 && a < last, "δ = {d}: {a}");
        last = a;
    }
    assert!(last < 1e-2, "{last}");
}

#[test]
fn dicke_exponent() {
    let s = ModelSpec::dicke(1, 1.0f64, 1.0, 0.1);
    let fit = fit_exponent(&s, Beta::Infinite, ExponentScan::default()).unwrap();
    assert!((fit.alpha - 0.5).abs() < 0.02, "{fit:?}");
    assert_eq!(fit.points, 21);
}

#[test]
fn inhomogeneous_exponent() {
    let fit = fit_exponent(&model_one(35.0), Beta::Infinite, ExponentScan::default()).unwrap();
    assert!((fit.alpha - 0.5).abs() < 0.02, "{fit:?}");
}

#[test]
fn normal_side_window_is_empty() {
    let s = ModelSpec::dicke(1, 1.0f64, 1.0, 0.1);
    let normal = ExponentScan { window: (-1e-2, -1e-4), points: 5 };
    assert_eq!(fit_exponent(&s, Beta::Infinite, normal), Err(LandauError::EmptyWindow));
    let inverted = ExponentScan { window: (1e-2, 1e-4), points: 5 };
    assert_eq!(fit_exponent(&s, Beta::Infinite, inverted), Err(LandauError::DegenerateFit));
}

#[test]
fn quartic_toy_has_exponent_one_half() {
    // F = a x + b x² with a = −δ: minimizer x* = δ/(2b), so |b₀| = √x* ∝ δ^{1/2}
    let b = 0.37;
    let deltas: Vec<f64> = (0..11).map(|k| 1e-4 * 10f64.powf(k as f64 / 5.0)).collect();
    let amps: Vec<f64> = deltas.iter().map(|d| (d / (2.0 * b)).sqrt()).collect();
    let (slope, _, rms) = fit_power_law(&deltas, &amps).unwrap();
    assert!((slope - 0.5).abs() < 1e-12);
    assert!(rms < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn closed_form_f2_vanishes_on_the_boundary(
        spec in arb_spec(3),
        beta in prop_oneof![Just(None), (0.05f64..20.0).prop_map(Some)],
    ) {
        let beta = beta.map_or(Beta::Infinite, Beta::Finite);
        let wc = critical_omega(&spec, beta).unwrap().critical_omega;
        prop_assume!(wc > 1e-6);
        let f2 = f2_closed_form(&spec.with_omega(wc), beta);
        prop_assert!(f2.abs() < 1e-10 * wc, "{}", f2);
    }

    #[test]
    fn z2_phase_symmetry(
        n in 1usize..4,
        g in 0.0f64..2.0,
        g2 in -1.0f64..1.0,
        a in 0.0f64..3.0,
        th in 0.0f64..6.28,
        dicke in any::<bool>(),
    ) {
        let spec = if dicke {
            ModelSpec::dicke(n, 1.0, 1.0, g)
        } else {
            ModelSpec::anisotropic(n, 1.0, 1.0, g, g2, 0.3)
        };
        let f = |t: f64| free_energy(&spec, Beta::Finite(2.0), ClassicalField::new(a, t)).unwrap();
        // θ + π is itself rounded, so random phases agree to rounding only
        let (x, y) = (f(th), f(th + PI));
        prop_assert!((x - y).abs() <= 1e-13 * x.abs().max(1.0), "{} vs {}", x, y);
        prop_assert_eq!(f(0.0), f(PI));
    }

    #[test]
    fn numeric_f2_matches_closed_form(
        spec in arb_spec(3),
        beta in prop_oneof![Just(None), (0.05f64..20.0).prop_map(Some)],
    ) {
        let beta = beta.map_or(Beta::Infinite, Beta::Finite);
        let c = landau_coefficients(&spec, beta, 2).unwrap();
        let scale = spec.omega.abs().max(c.f2_closed_form.abs());
        prop_assert!((c.f2 - c.f2_closed_form).abs() < 1e-6 * scale, "{} vs {}", c.f2, c.f2_closed_form);
    }

    #[test]
    fn minimum_never_exceeds_origin(spec in arb_spec(2), beta in 0.1f64..10.0) {
        let spec = ModelSpec { kappa: spec.kappa.map(|_| 0.0), ..spec };
        let beta = Beta::Finite(beta);
        if let Ok(m) = minimize_free_energy(&spec, beta) {
            let f0 = free_energy(&spec, beta, ClassicalField::zero()).unwrap();
            prop_assert!(m.free_energy <= f0 + 1e-14 * f0.abs());
            if spec.family != Family::AnisotropicRabiHubbard {
                prop_assert_eq!(m.field.phase, 0.0);
            }
        }
    }
}
