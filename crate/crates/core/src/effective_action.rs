//! Matsubara-frequency machinery for the bosonic effective action.
//!
//! Vertices use the propagators with their 1/β factor stripped:
//!
//! χ⁽²ᵐ⁾ = (1/m)(g²ᵐ/Nᵐ⁻¹) Σ_q Πₖ 1/(iν(q + sₖ) ± Ω/2),
//! ν(p) = (2p+1)π/β + π/(2β),
//!
//! where the shifts follow q, q−n₁, q−n₁+n₂, … and the signs alternate +, −.
//! With this convention the m = 2 closed forms come out as written, and the
//! m = 1 vertex equals β times the interaction term of the quadratic kernel.

use num_complex::Complex;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::models::{Family, ModelError, ModelSpec};
use crate::scalar::{lit, Beta, Real};

#[derive(Debug, Error, PartialEq)]
pub enum ActionError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("inverse temperature must be finite and positive here")]
    InvalidBeta,
    #[error("expected a {expected:?} mode")]
    WrongStatistics { expected: Statistics },
    #[error("vertex order m must be at least {min}")]
    InvalidOrder { min: usize },
    #[error("index tuple has length {got}, expected {expected}")]
    TupleLength { got: usize, expected: usize },
    #[error("coincident poles for indices {0:?}; use the numeric sum")]
    CoincidentPoles(Vec<i64>),
    #[error("vertices are defined for single-g families, not {0:?}")]
    NotApplicable(Family),
    #[error("Matsubara sum not converged at window {window} (relative change {change:e})")]
    NonConvergence { window: usize, change: f64 },
    #[error("window must be an even number ≥ 2")]
    InvalidWindow,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Statistics {
    Boson,
    Fermion,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MatsubaraMode<T> {
    pub index: i64,
    pub beta: T,
    pub statistics: Statistics,
}

impl<T: Real> MatsubaraMode<T> {
    fn new(index: i64, beta: T, statistics: Statistics) -> Result<Self, ActionError> {
        if !(beta.is_finite() && beta > T::zero()) {
            return Err(ActionError::InvalidBeta);
        }
        Ok(MatsubaraMode { index, beta, statistics })
    }

    pub fn boson(n: i64, beta: T) -> Result<Self, ActionError> {
        Self::new(n, beta, Statistics::Boson)
    }

    pub fn fermion(q: i64, beta: T) -> Result<Self, ActionError> {
        Self::new(q, beta, Statistics::Fermion)
    }

    /// 2nπ/β or (2q+1)π/β.
    pub fn frequency(&self) -> T {
        let k = match self.statistics {
            Statistics::Boson => 2 * self.index,
            Statistics::Fermion => 2 * self.index + 1,
        };
        lit::<T>(k as f64) * T::PI() / self.beta
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum PoleSign {
    Plus,
    Minus,
}

impl PoleSign {
    fn value<T: Real>(self) -> T {
        match self {
            PoleSign::Plus => T::one(),
            PoleSign::Minus => -T::one(),
        }
    }
}

/// 𝒢±_q = 1 / (β(iω_q + iπ/(2β) ± Ω/2)).
pub fn propagator<T: Real>(
    q: MatsubaraMode<T>,
    sign: PoleSign,
    splitting: T,
) -> Result<Complex<T>, ActionError> {
    if q.statistics != Statistics::Fermion {
        return Err(ActionError::WrongStatistics { expected: Statistics::Fermion });
    }
    let nu = q.frequency() + T::FRAC_PI_2() / q.beta;
    let den = Complex::new(sign.value::<T>() * splitting / lit(2.0), nu) * q.beta;
    Ok(den.inv())
}

/// Quadratic kernel of the effective action at one bosonic frequency.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Kernel<T> {
    /// Coefficient of b̄ₙbₙ (rotating-wave families).
    Scalar(Complex<T>),
    /// Form on (bₙ, b̄₋ₙ) for families with counter-rotating terms.
    Block([[Complex<T>; 2]; 2]),
}

/// tanh(βΩ/2)/(iωₙ + Ω)
fn bubble<T: Real>(omega_n: T, splitting: T, beta: Beta<T>) -> Complex<T> {
    Complex::new(splitting, omega_n).inv() * beta.tanh_half(splitting)
}

/// Frequency-independent part removed: the kernel minus (±iωₙ + ω).
fn interaction<T: Real>(spec: &ModelSpec<T>, omega_n: T, beta: Beta<T>) -> Kernel<T> {
    let n = spec.n();
    match spec.family {
        Family::Dicke | Family::AnisotropicRabiHubbard => {
            let mut m = [[Complex::zero(); 2]; 2];
            for i in 0..spec.n_atoms {
                let (g1, g2) = spec.rotating_counter(i);
                let om = spec.atom_splittings[i];
                let ap = bubble(omega_n, om, beta);
                let am = bubble(-omega_n, om, beta);
                m[0][0] -= (ap * g1 * g1 + am * g2 * g2) / n;
                m[1][1] -= (am * g1 * g1 + ap * g2 * g2) / n;
                let off = (ap + am) * g1 * g2 / n;
                m[0][1] -= off;
                m[1][0] -= off;
            }
            Kernel::Block(m)
        }
        _ => {
            let mut k = Complex::zero();
            for (&g, &om) in spec.couplings.iter().zip(&spec.atom_splittings) {
                k -= bubble(omega_n, om, beta) * g * g / n;
            }
            if spec.family == Family::NonlinearKappa {
                // κ b†b σᶻ with ⟨σᶻ⟩ = −tanh(βΩ/2) per atom
                k -= Complex::from(spec.kappa_value() * n * beta.tanh_half(spec.splitting()));
            }
            Kernel::Scalar(k)
        }
    }
}

/// S_eff⁽²⁾ kernel: iωₙ + ω − (1/N)Σᵢ gᵢ² tanh(βΩᵢ/2)/(iωₙ + Ωᵢ) for
/// rotating-wave families, the 2×2 (bₙ, b̄₋ₙ) block otherwise.
pub fn s_eff2_kernel<T: Real>(
    n: MatsubaraMode<T>,
    spec: &ModelSpec<T>,
) -> Result<Kernel<T>, ActionError> {
    spec.validate()?;
    if n.statistics != Statistics::Boson {
        return Err(ActionError::WrongStatistics { expected: Statistics::Boson });
    }
    let wn = n.frequency();
    let free = Complex::new(spec.omega, wn);
    Ok(match interaction(spec, wn, Beta::Finite(n.beta)) {
        Kernel::Scalar(k) => Kernel::Scalar(free + k),
        Kernel::Block(mut m) => {
            m[0][0] += free;
            m[1][1] += free.conj();
            Kernel::Block(m)
        }
    })
}

/// Smallest eigenvalue of a real symmetric 2×2 matrix.
fn min_eig2<T: Real>(a: T, b: T, d: T) -> T {
    let two: T = lit(2.0);
    let mean = (a + d) / two;
    let half = (a - d) / two;
    mean - (half * half + b * b).sqrt()
}

/// ω at which the static (n = 0) kernel first loses positivity.
pub fn static_kernel_zero<T: Real>(spec: &ModelSpec<T>, beta: Beta<T>) -> Result<T, ActionError> {
    spec.validate()?;
    if !beta.is_valid() {
        return Err(ActionError::InvalidBeta);
    }
    Ok(match interaction(spec, T::zero(), beta) {
        Kernel::Scalar(k) => -k.re,
        Kernel::Block(m) => -min_eig2(m[0][0].re, m[0][1].re, m[1][1].re),
    })
}

/// Lowest eigenvalue of the static kernel at the spec's ω (scalar kernels
/// return their real part). Negative means the normal phase is unstable.
pub fn static_kernel_min_eigenvalue<T: Real>(
    spec: &ModelSpec<T>,
    beta: Beta<T>,
) -> Result<T, ActionError> {
    Ok(spec.omega - static_kernel_zero(spec, beta)?)
}

/// (g, Ω, N) of a single-g family.
fn vertex_params<T: Real>(spec: &ModelSpec<T>) -> Result<(T, T, T), ActionError> {
    spec.validate()?;
    match spec.family {
        Family::JaynesCummings | Family::Dicke => {
            Ok((spec.couplings[0], spec.splitting(), spec.n()))
        }
        f => Err(ActionError::NotApplicable(f)),
    }
}

fn finite_beta<T: Real>(beta: Beta<T>) -> Result<T, ActionError> {
    match beta {
        Beta::Finite(b) if beta.is_valid() => Ok(b),
        _ => Err(ActionError::InvalidBeta),
    }
}

/// χ₀⁽⁴⁾ = (gβ/2N)(g/Ω)³ (2tanh(βΩ/2) − βΩ sech²(βΩ/2)).
pub fn chi4_zero<T: Real>(spec: &ModelSpec<T>, beta: Beta<T>) -> Result<T, ActionError> {
    let (g, om, n) = vertex_params(spec)?;
    let b = finite_beta(beta)?;
    let two: T = lit(2.0);
    let y = b * om;
    let r = g / om;
    Ok(g * b / (two * n) * r * r * r * (two * (y / two).tanh() - y * crate::special::sech2(y / two)))
}

/// Whether the residue evaluation of χ⁽⁴⁾ has only simple poles.
pub fn chi4_admissible(n1: i64, n2: i64, n3: i64) -> bool {
    n1 != n2 && n2 != n3
}

/// Residue closed form of χ⁽⁴⁾ for tuples with simple poles only.
pub fn chi4_general<T: Real>(
    n1: i64,
    n2: i64,
    n3: i64,
    spec: &ModelSpec<T>,
    beta: Beta<T>,
) -> Result<Complex<T>, ActionError> {
    let (g, om, n) = vertex_params(spec)?;
    let b = finite_beta(beta)?;
    if !chi4_admissible(n1, n2, n3) {
        return Err(ActionError::CoincidentPoles(vec![n1, n2, n3]));
    }
    let w = |k: i64| lit::<T>(2.0 * k as f64) * T::PI() / b;
    let two: T = lit(2.0);
    let g4 = g * g * g * g;
    let num = Complex::new(two * om, w(n1 + n3)) * (g4 * b * (b * om / two).tanh());
    let den = Complex::new(om, w(n1 - n2 + n3))
        * Complex::new(om, w(n1))
        * Complex::new(om, w(n2))
        * Complex::new(om, w(n3))
        * (two * n);
    Ok(num / den)
}

/// Neumaier-compensated complex accumulator.
#[derive(Default)]
struct Compensated<T> {
    sum: Complex<T>,
    comp: Complex<T>,
}

impl<T: Real> Compensated<T> {
    fn add(&mut self, z: Complex<T>) {
        fn step<T: Real>(s: &mut T, c: &mut T, x: T) {
            let t = *s + x;
            if s.abs() >= x.abs() {
                *c += (*s - t) + x;
            } else {
                *c += (x - t) + *s;
            }
            *s = t;
        }
        step(&mut self.sum.re, &mut self.comp.re, z.re);
        step(&mut self.sum.im, &mut self.comp.im, z.im);
    }

    fn total(&self) -> Complex<T> {
        self.sum + self.comp
    }
}

struct Chain<T> {
    shifts: Vec<i64>,
    beta: T,
    half_split: T,
}

impl<T: Real> Chain<T> {
    fn new(indices: &[i64], beta: T, splitting: T) -> Self {
        let mut shifts = vec![0i64];
        let mut s = 0i64;
        for (k, &n) in indices.iter().enumerate() {
            s += if k % 2 == 0 { -n } else { n };
            shifts.push(s);
        }
        Chain { shifts, beta, half_split: splitting / lit(2.0) }
    }

    fn term(&self, q: i64) -> Complex<T> {
        let pi_b = T::PI() / self.beta;
        let mut den = Complex::new(T::one(), T::zero());
        for (k, &s) in self.shifts.iter().enumerate() {
            let p = q + s;
            let nu = lit::<T>((2 * p + 1) as f64) * pi_b + pi_b / lit(2.0);
            let re = if k % 2 == 0 { self.half_split } else { -self.half_split };
            den = den * Complex::new(re, nu);
        }
        den.inv()
    }

    /// Σ over q ∈ [−K/2, K/2), accumulated in (q, −q−1) pairs.
    fn window_sum(&self, k: usize) -> Complex<T> {
        let mut acc = Compensated::default();
        for q in (0..(k / 2) as i64).rev() {
            acc.add(self.term(q) + self.term(-q - 1));
        }
        acc.total()
    }

    fn max_shift(&self) -> usize {
        self.shifts.iter().map(|s| s.unsigned_abs() as usize).max().unwrap_or(0)
    }
}

/// Options for the numeric Matsubara sum.
#[derive(Clone, Copy, Debug)]
pub struct SumOptions {
    /// Starting window K (rounded up to even); `None` picks one from the
    /// index shifts and βΩ.
    pub initial_window: Option<usize>,
    /// Largest window tried before reporting non-convergence.
    pub max_window: usize,
    pub rel_tol: f64,
}

impl Default for SumOptions {
    fn default() -> Self {
        SumOptions { initial_window: None, max_window: 1 << 24, rel_tol: 1e-10 }
    }
}

/// χ⁽²ᵐ⁾ by direct summation with window doubling and Richardson
/// extrapolation in 1/K.
pub fn chi2m_numeric<T: Real>(
    m: usize,
    indices: &[i64],
    spec: &ModelSpec<T>,
    beta: Beta<T>,
    opts: SumOptions,
) -> Result<Complex<T>, ActionError> {
    let (g, om, n) = vertex_params(spec)?;
    let b = finite_beta(beta)?;
    if m < 1 {
        return Err(ActionError::InvalidOrder { min: 1 });
    }
    if indices.len() != 2 * m - 1 {
        return Err(ActionError::TupleLength { got: indices.len(), expected: 2 * m - 1 });
    }
    let chain = Chain::new(indices, b, om);
    let bw = (b * om / T::PI()).ceil().to_usize().unwrap_or(0).min(1 << 16);
    let mut k = opts.initial_window.unwrap_or(2 * (chain.max_shift() + bw + 16));
    k += k % 2;
    if k < 2 {
        return Err(ActionError::InvalidWindow);
    }

    let tol: T = lit(opts.rel_tol);
    let mut table: Vec<Vec<Complex<T>>> = Vec::new();
    let mut change = T::infinity();
    while k <= opts.max_window {
        let mut row = vec![chain.window_sum(k)];
        let mut fac = T::one();
        for j in 1..=table.len() {
            fac = fac * lit(2.0);
            let prev = table[table.len() - 1][j - 1];
            let v = row[j - 1] + (row[j - 1] - prev) / (fac - T::one());
            row.push(v);
        }
        if let Some(last) = table.last() {
            let cur = row[row.len() - 1];
            change = (cur - last[last.len() - 1]).norm();
            if change <= tol * cur.norm() {
                let pref = g.powi(2 * m as i32) / (lit::<T>(m as f64) * n.powi(m as i32 - 1));
                return Ok(cur * pref);
            }
            change = change / cur.norm().max(T::min_positive_value());
        }
        table.push(row);
        k *= 2;
    }
    Err(ActionError::NonConvergence {
        window: k / 2,
        change: change.to_f64().unwrap_or(f64::NAN),
    })
}

/// Upper bound K_m/Nᵐ⁻¹ (g/Ω)²ᵐ on |χ⁽²ᵐ⁾| for every index tuple.
///
/// AM-GM reduces the product to Σ_q (ν_q² + Ω²/4)⁻ᵐ. Terms inside the
/// window of K frequencies are bounded by (2/Ω)²ᵐ each, and the two tails by
/// 2(β/2π)²ᵐ[(K/2)⁻²ᵐ + (K/2)¹⁻²ᵐ/(2m−1)], giving
/// K_m = (1/m)[K·4ᵐ + Ω²ᵐ·tail].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ChiBound<T> {
    pub m: usize,
    pub window: usize,
    pub k_m: T,
    pub bound: T,
}

pub fn chi_bound<T: Real>(
    m: usize,
    spec: &ModelSpec<T>,
    beta: Beta<T>,
    q_window: Option<usize>,
) -> Result<ChiBound<T>, ActionError> {
    let (g, om, n) = vertex_params(spec)?;
    let b = finite_beta(beta)?;
    if m < 2 {
        return Err(ActionError::InvalidOrder { min: 2 });
    }
    // the window where (2/Ω) and 2π|q|/β cross
    let natural = 2 * ((b * om / (lit::<T>(4.0) * T::PI())).ceil().to_usize().unwrap_or(1).max(1));
    let kw = q_window.unwrap_or(natural);
    if kw < 2 || kw % 2 != 0 {
        return Err(ActionError::InvalidWindow);
    }
    let two_m = 2 * m as i32;
    let half_k: T = lit((kw / 2) as f64);
    let scale = b / (lit::<T>(2.0) * T::PI());
    let tail = lit::<T>(2.0)
        * scale.powi(two_m)
        * (half_k.powi(-two_m) + half_k.powi(1 - two_m) / lit((2 * m - 1) as f64));
    let k_m = (lit::<T>(kw as f64) * lit::<T>(4.0).powi(m as i32) + om.powi(two_m) * tail)
        / lit(m as f64);
    let bound = k_m / n.powi(m as i32 - 1) * (g / om).powi(two_m);
    Ok(ChiBound { m, window: kw, k_m, bound })
}

/// The m = 2 bound (√6 gβ/N)(g/Ω)³ tanh(βΩ/2).
pub fn sqrt6_bound<T: Real>(spec: &ModelSpec<T>, beta: Beta<T>) -> Result<T, ActionError> {
    let (g, om, n) = vertex_params(spec)?;
    let b = finite_beta(beta)?;
    let r = g / om;
    Ok(lit::<T>(6.0).sqrt() * g * b / n * r * r * r * (b * om / lit(2.0)).tanh())
}

/// A vertex value together with the bound it must respect.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChiCoefficient<T> {
    pub order: usize,
    pub indices: Vec<i64>,
    pub value: Complex<T>,
    pub bound: T,
}

impl<T: Real> ChiCoefficient<T> {
    pub fn within_bound(&self) -> bool {
        self.value.norm() <= self.bound
    }
}

/// χ⁽²ᵐ⁾ at a tuple: closed form for admissible m = 2 tuples, numeric
/// otherwise, paired with the K_m bound.
pub fn chi_coefficient<T: Real>(
    m: usize,
    indices: &[i64],
    spec: &ModelSpec<T>,
    beta: Beta<T>,
) -> Result<ChiCoefficient<T>, ActionError> {
    let value = if m == 2 && indices.len() == 3 && chi4_admissible(indices[0], indices[1], indices[2])
    {
        chi4_general(indices[0], indices[1], indices[2], spec, beta)?
    } else {
        chi2m_numeric(m, indices, spec, beta, SumOptions::default())?
    };
    let bound = chi_bound(m.max(2), spec, beta, None)?.bound;
    Ok(ChiCoefficient { order: 2 * m, indices: indices.to_vec(), value, bound })
}

/// Outcome of sampling random index tuples against the bounds.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundCertificate<T> {
    pub m: usize,
    pub samples: usize,
    pub bound: T,
    pub empirical_sup: T,
    pub violations: usize,
    /// Only for m = 2.
    pub sqrt6_bound: Option<T>,
    pub sqrt6_violations: usize,
    pub sqrt6_sup_ratio: Option<T>,
}

/// Samples `samples` tuples with entries in [−index_range, index_range] and
/// checks |χ⁽²ᵐ⁾| against the K_m bound (and the √6 bound when m = 2).
pub fn certify_bounds<T: Real>(
    m: usize,
    spec: &ModelSpec<T>,
    beta: Beta<T>,
    samples: usize,
    index_range: i64,
    seed: u64,
) -> Result<BoundCertificate<T>, ActionError> {
    let cb = chi_bound(m, spec, beta, None)?;
    let s6 = if m == 2 { Some(sqrt6_bound(spec, beta)?) } else { None };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sup = T::zero();
    let mut violations = 0;
    let mut s6_violations = 0;
    for _ in 0..samples {
        let idx: Vec<i64> =
            (0..2 * m - 1).map(|_| rng.random_range(-index_range..=index_range)).collect();
        let c = chi_coefficient(m, &idx, spec, beta)?;
        let mag = c.value.norm();
        sup = sup.max(mag);
        if mag > cb.bound {
            violations += 1;
        }
        if let Some(b6) = s6 {
            if mag > b6 {
                s6_violations += 1;
            }
        }
    }
    Ok(BoundCertificate {
        m,
        samples,
        bound: cb.bound,
        empirical_sup: sup,
        violations,
        sqrt6_bound: s6,
        sqrt6_violations: s6_violations,
        sqrt6_sup_ratio: s6.map(|b6| sup / b6),
    })
}
