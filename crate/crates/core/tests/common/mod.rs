#![allow(dead_code)]

use nalgebra::DMatrix;
use proptest::prelude::*;
use superradiance::models::{Family, ModelSpec};

/// Straightforward dense Hamiltonian from Kronecker products, ordered
/// boson ⊗ spin_{N−1} ⊗ … ⊗ spin_0 with spin basis (down, up).
pub fn kron_hamiltonian(spec: &ModelSpec<f64>, n_max: usize) -> DMatrix<f64> {
    let nb = n_max + 1;
    let n = spec.n_atoms;
    let b = DMatrix::from_fn(nb, nb, |r, c| if c == r + 1 { (c as f64).sqrt() } else { 0.0 });
    let num = b.transpose() * &b;
    let eye_b = DMatrix::<f64>::identity(nb, nb);
    let sz = DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, 1.0]);
    let sp = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 1.0, 0.0]);
    let sm = sp.transpose();
    let eye2 = DMatrix::<f64>::identity(2, 2);

    // single-site operator on spin i, identity elsewhere
    let spin_op = |i: usize, op: &DMatrix<f64>| -> DMatrix<f64> {
        let mut out = DMatrix::<f64>::identity(1, 1);
        for k in (0..n).rev() {
            out = out.kronecker(if k == i { op } else { &eye2 });
        }
        out
    };
    let eye_s = DMatrix::<f64>::identity(1 << n, 1 << n);
    let u = spec.hubbard_u.unwrap_or(0.0);
    let kappa = spec.kappa.unwrap_or(0.0);
    let boson = &num * spec.omega + (&num * (&num - &eye_b)) * u;
    let mut h = boson.kronecker(&eye_s);
    let sqrt_n = (n as f64).sqrt();
    for i in 0..n {
        let z = spin_op(i, &sz);
        h += (&eye_b * (spec.atom_splittings[i] / 2.0) + &num * kappa).kronecker(&z);
        let (g1, g2) = spec.rotating_counter(i);
        let lower = b.kronecker(&spin_op(i, &sp)) * (g1 / sqrt_n) + b.kronecker(&spin_op(i, &sm)) * (g2 / sqrt_n);
        h += &lower + lower.transpose();
    }
    h
}

pub fn dense_ground(h: &DMatrix<f64>) -> f64 {
    h.clone().symmetric_eigen().eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

pub fn family_strategy() -> impl Strategy<Value = Family> {
    prop_oneof![
        Just(Family::JaynesCummings),
        Just(Family::Dicke),
        Just(Family::AnisotropicRabiHubbard),
        Just(Family::Inhomogeneous),
        Just(Family::NonlinearKappa),
    ]
}

/// Random valid spec of the given family with n_atoms atoms.
pub fn spec_of(
    family: Family,
    n: usize,
    omega: f64,
    om: Vec<f64>,
    g: Vec<f64>,
    extra: (f64, f64, f64),
) -> ModelSpec<f64> {
    let (g2, u, kappa) = extra;
    match family {
        Family::JaynesCummings => ModelSpec::jaynes_cummings(n, omega, om[0], g[0]),
        Family::Dicke => ModelSpec::dicke(n, omega, om[0], g[0]),
        Family::AnisotropicRabiHubbard => ModelSpec::anisotropic(n, omega, om[0], g[0], g2, u),
        Family::Inhomogeneous => ModelSpec::inhomogeneous(omega, om[..n].to_vec(), g[..n].to_vec()),
        Family::NonlinearKappa => ModelSpec::nonlinear_kappa(n, omega, om[0], g[0], kappa),
    }
}

prop_compose! {
    pub fn arb_spec(max_atoms: usize)(
        family in family_strategy(),
        n in 1..=max_atoms,
        omega in 0.2f64..3.0,
        om in proptest::collection::vec(0.2f64..3.0, 3),
        g in proptest::collection::vec(0.0f64..1.5, 3),
        g2 in 0.0f64..1.5,
        u in 0.0f64..0.5,
        kappa in -0.3f64..0.3,
    ) -> ModelSpec<f64> {
        spec_of(family, n, omega, om, g, (g2, u, kappa))
    }
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}
