//! Verification suites: partition-function identity, vertex oracle
//! agreement and bound certification.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use superradiance::effective_action::{
    certify_bounds, chi2m_numeric, chi4_admissible, chi4_general, chi4_zero, BoundCertificate, SumOptions,
};
use superradiance::models::{Family, ModelSpec};
use superradiance::schwinger::{verify_partition_identity_with, FermionBasis, IdentityOptions, ModeOrdering};
use superradiance::Beta;

use crate::config::{BoundSuite, ChiSuite, Config, SchwingerSuite};

/// A random model of the given family, drawn from moderate ranges.
pub fn draw_spec(family: Family, n: usize, rng: &mut impl Rng) -> ModelSpec<f64> {
    let omega = rng.random_range(0.3..2.0);
    let om: Vec<f64> = (0..n).map(|_| rng.random_range(0.3..2.0)).collect();
    let g: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
    match family {
        Family::JaynesCummings => ModelSpec::jaynes_cummings(n, omega, om[0], g[0]),
        Family::Dicke => ModelSpec::dicke(n, omega, om[0], g[0]),
        Family::AnisotropicRabiHubbard => {
            let g2 = rng.random_range(0.0..1.0);
            ModelSpec::anisotropic(n, omega, om[0], g[0], g2, rng.random_range(0.0..0.3))
        }
        Family::Inhomogeneous => ModelSpec::inhomogeneous(omega, om, g),
        Family::NonlinearKappa => ModelSpec::nonlinear_kappa(n, omega, om[0], g[0], rng.random_range(-0.1..0.1)),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct IdentityCase {
    pub model: ModelSpec<f64>,
    pub beta: f64,
    pub relative_error: Option<f64>,
    pub imaginary_residue: Option<f64>,
    pub unphysical_residue: Option<f64>,
    pub error: Option<String>,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteSummary {
    pub checks: usize,
    pub failures: usize,
    pub worst: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SchwingerReport {
    pub summary: SuiteSummary,
    pub worst_imaginary_residue: f64,
    pub cases: Vec<IdentityCase>,
}

pub fn schwinger_suite(suite: &SchwingerSuite, seed: u64) -> SchwingerReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut jobs = Vec::new();
    for &family in &suite.families {
        for &n in &suite.atoms {
            for _ in 0..suite.draws {
                let spec = draw_spec(family, n, &mut rng);
                for &beta in &suite.betas {
                    jobs.push((spec.clone(), beta));
                }
            }
        }
    }
    let opts = suite
        .phase_per_fermion
        .map_or_else(IdentityOptions::default, |phi| IdentityOptions { phase_per_fermion: phi });
    let cases: Vec<IdentityCase> = jobs
        .into_par_iter()
        .map(|(model, beta)| {
            let outcome = FermionBasis::new(model.n_atoms, suite.fock_cutoff, ModeOrdering::Interleaved)
                .and_then(|fb| verify_partition_identity_with(&model, beta, &fb, opts));
            match outcome {
                Ok(r) => IdentityCase {
                    passed: r.holds(suite.rel_tol, suite.imag_tol),
                    relative_error: Some(r.relative_error),
                    imaginary_residue: Some(r.imaginary_residue),
                    unphysical_residue: Some(r.unphysical_residue),
                    error: None,
                    model,
                    beta,
                },
                Err(e) => IdentityCase {
                    model,
                    beta,
                    relative_error: None,
                    imaginary_residue: None,
                    unphysical_residue: None,
                    error: Some(e.to_string()),
                    passed: false,
                },
            }
        })
        .collect();
    let worst = |f: fn(&IdentityCase) -> Option<f64>| {
        cases.iter().map(|c| f(c).unwrap_or(f64::INFINITY)).fold(0.0, f64::max)
    };
    SchwingerReport {
        summary: SuiteSummary {
            checks: cases.len(),
            failures: cases.iter().filter(|c| !c.passed).count(),
            worst: worst(|c| c.relative_error),
        },
        worst_imaginary_residue: worst(|c| c.imaginary_residue),
        cases,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ChiPoint {
    pub model: ModelSpec<f64>,
    pub beta: f64,
    /// Tuple compared; (0, 0, 0) stands for the static vertex when the
    /// drawn tuple has coincident poles.
    pub indices: [i64; 3],
    pub closed_form: Option<[f64; 2]>,
    pub numeric: Option<[f64; 2]>,
    pub relative_error: Option<f64>,
    pub chi4_zero: Option<f64>,
    pub error: Option<String>,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ChiReport {
    pub summary: SuiteSummary,
    pub negative_chi4_zero: usize,
    pub points: Vec<ChiPoint>,
}

fn chi_point(model: ModelSpec<f64>, beta: f64, drawn: [i64; 3], tol: f64) -> ChiPoint {
    let b = Beta::Finite(beta);
    let run = || -> Result<(f64, [i64; 3], [f64; 2], [f64; 2], f64), String> {
        let zero = chi4_zero(&model, b).map_err(|e| e.to_string())?;
        let (idx, closed) = if chi4_admissible(drawn[0], drawn[1], drawn[2]) {
            let c = chi4_general(drawn[0], drawn[1], drawn[2], &model, b).map_err(|e| e.to_string())?;
            (drawn, [c.re, c.im])
        } else {
            ([0, 0, 0], [zero, 0.0])
        };
        let numeric = chi2m_numeric(2, &idx, &model, b, SumOptions::default()).map_err(|e| e.to_string())?;
        let numeric = [numeric.re, numeric.im];
        let diff = (closed[0] - numeric[0]).hypot(closed[1] - numeric[1]);
        let scale = closed[0].hypot(closed[1]).max(numeric[0].hypot(numeric[1]));
        let rel = if scale == 0.0 { diff } else { diff / scale };
        Ok((rel, idx, closed, numeric, zero))
    };
    match run() {
        Ok((rel, indices, closed, numeric, zero)) => ChiPoint {
            model,
            beta,
            indices,
            closed_form: Some(closed),
            numeric: Some(numeric),
            relative_error: Some(rel),
            chi4_zero: Some(zero),
            error: None,
            passed: rel < tol && zero >= 0.0,
        },
        Err(e) => ChiPoint {
            model,
            beta,
            indices: drawn,
            closed_form: None,
            numeric: None,
            relative_error: None,
            chi4_zero: None,
            error: Some(e),
            passed: false,
        },
    }
}

/// Closed-form quartic vertices against the direct Matsubara sum on random
/// JC and Dicke models, temperatures and index tuples.
pub fn chi_suite(suite: &ChiSuite, seed: u64) -> ChiReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let jobs: Vec<(ModelSpec<f64>, f64, [i64; 3])> = (0..suite.points)
        .map(|_| {
            let beta = 10f64.powf(rng.random_range(-1.0..1.3));
            let om = rng.random_range(0.2..3.0);
            let g = rng.random_range(0.05..1.5);
            let n = rng.random_range(1..=4usize);
            let model = if rng.random_bool(0.5) {
                ModelSpec::jaynes_cummings(n, 1.0, om, g)
            } else {
                ModelSpec::dicke(n, 1.0, om, g)
            };
            let r = suite.max_index;
            let idx = [rng.random_range(-r..=r), rng.random_range(-r..=r), rng.random_range(-r..=r)];
            (model, beta, idx)
        })
        .collect();
    let points: Vec<ChiPoint> =
        jobs.into_par_iter().map(|(m, b, idx)| chi_point(m, b, idx, suite.rel_tol)).collect();
    ChiReport {
        summary: SuiteSummary {
            checks: points.len(),
            failures: points.iter().filter(|p| !p.passed).count(),
            worst: points.iter().map(|p| p.relative_error.unwrap_or(f64::INFINITY)).fold(0.0, f64::max),
        },
        negative_chi4_zero: points.iter().filter(|p| p.chi4_zero.is_some_and(|z| z < 0.0)).count(),
        points,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct BoundReport {
    pub certificates: Vec<BoundCertificate<f64>>,
    pub errors: Vec<String>,
    pub passed: bool,
}

pub fn bound_suite(suite: &BoundSuite, seed: u64) -> BoundReport {
    let results: Vec<Result<BoundCertificate<f64>, String>> = suite
        .orders
        .par_iter()
        .map(|&m| {
            certify_bounds(m, &suite.model, Beta::Finite(suite.beta), suite.samples, suite.index_range, seed + m as u64)
                .map_err(|e| format!("m = {m}: {e}"))
        })
        .collect();
    let mut certificates = Vec::new();
    let mut errors = Vec::new();
    for r in results {
        match r {
            Ok(c) => certificates.push(c),
            Err(e) => errors.push(e),
        }
    }
    let passed = errors.is_empty() && certificates.iter().all(|c| c.violations == 0 && c.sqrt6_violations == 0);
    BoundReport { certificates, errors, passed }
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub config_hash: String,
    pub seed: u64,
    pub passed: bool,
    pub failures: Vec<String>,
    pub schwinger: Option<SchwingerReport>,
    pub chi: Option<ChiReport>,
    pub bounds: Option<BoundReport>,
}

pub const DEFAULT_SEED: u64 = 17;

pub fn run_verify(config: &Config) -> VerifyReport {
    let seed = config.seed.unwrap_or(DEFAULT_SEED);
    let (s, c, b) = config.verify.clone().unwrap_or_default().resolved();
    let schwinger = s.map(|s| schwinger_suite(&s, seed));
    let chi = c.map(|c| chi_suite(&c, seed.wrapping_add(1)));
    let bounds = b.map(|b| bound_suite(&b, seed.wrapping_add(2)));
    let mut failures = Vec::new();
    if let Some(r) = &schwinger {
        for c in r.cases.iter().filter(|c| !c.passed) {
            failures.push(match &c.error {
                Some(e) => format!("schwinger {:?} N={} β={}: {e}", c.model.family, c.model.n_atoms, c.beta),
                None => format!(
                    "schwinger {:?} N={} β={}: relative error {:e}, imaginary residue {:e}",
                    c.model.family,
                    c.model.n_atoms,
                    c.beta,
                    c.relative_error.unwrap_or(f64::NAN),
                    c.imaginary_residue.unwrap_or(f64::NAN)
                ),
            });
        }
    }
    if let Some(r) = &chi {
        for p in r.points.iter().filter(|p| !p.passed) {
            failures.push(match &p.error {
                Some(e) => format!("chi {:?} β={} {:?}: {e}", p.model.family, p.beta, p.indices),
                None => format!(
                    "chi {:?} β={} {:?}: relative error {:e}, χ₀ = {:e}",
                    p.model.family,
                    p.beta,
                    p.indices,
                    p.relative_error.unwrap_or(f64::NAN),
                    p.chi4_zero.unwrap_or(f64::NAN)
                ),
            });
        }
    }
    if let Some(r) = &bounds {
        failures.extend(r.errors.iter().map(|e| format!("bounds {e}")));
        for c in &r.certificates {
            if c.violations > 0 || c.sqrt6_violations > 0 {
                failures.push(format!(
                    "bounds m = {}: {} K_m violations, {} √6 violations in {} samples",
                    c.m, c.violations, c.sqrt6_violations, c.samples
                ));
            }
        }
    }
    VerifyReport {
        config_hash: config.content_hash(),
        seed,
        passed: failures.is_empty(),
        failures,
        schwinger,
        chi,
        bounds,
    }
}
