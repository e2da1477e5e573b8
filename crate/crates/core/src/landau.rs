//! Classical-field free energy, its minimization and Landau expansion.
//!
//! With b → b₀ every atom sees a gap Eᵢ whose square is a polynomial in
//! x = |b₀|² along a fixed phase θ: Eᵢ² = a₂ + c·x + d·x². All routines below
//! work on that representation.

use serde::Serialize;
use thiserror::Error;

use crate::boundary::{critical_coupling_scale, BoundaryError, CriticalCoupling};
use crate::models::{Family, ModelError, ModelSpec};
use crate::scalar::{lit, Beta, Real};
use crate::special::{ln_cosh_shift, ln_two_cosh};

#[derive(Debug, Error, PartialEq)]
pub enum LandauError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Boundary(#[from] BoundaryError),
    #[error("invalid inverse temperature")]
    InvalidBeta,
    #[error("atom index {index} out of range for {n} atoms")]
    AtomIndex { index: usize, n: usize },
    #[error("field amplitude must be finite and non-negative")]
    InvalidField,
    #[error("free energy is unbounded below (asymptotic slope {slope:e})")]
    Unbounded { slope: f64 },
    #[error("finite-difference step underflowed")]
    StepUnderflow,
    #[error("max_order must be one of 2, 4, 6, 8")]
    InvalidOrder,
    #[error("no superradiant points in the fit window")]
    EmptyWindow,
    #[error("the model is superradiant at every coupling")]
    AlwaysSuperradiant,
    #[error("fit needs at least two distinct points")]
    DegenerateFit,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ClassicalField<T> {
    pub amplitude: T,
    pub phase: T,
}

impl<T: Real> ClassicalField<T> {
    pub fn new(amplitude: T, phase: T) -> Self {
        ClassicalField { amplitude, phase }
    }

    pub fn real(amplitude: T) -> Self {
        ClassicalField { amplitude, phase: T::zero() }
    }

    pub fn zero() -> Self {
        Self::real(T::zero())
    }

    pub fn x(&self) -> T {
        self.amplitude * self.amplitude
    }
}

/// Eᵢ² = a2 + c·x + d·x² along a fixed phase.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GapPolynomial<T> {
    pub a2: T,
    pub c: T,
    pub d: T,
}

impl<T: Real> GapPolynomial<T> {
    pub fn gap_squared(&self, x: T) -> T {
        self.a2 + x * (self.c + self.d * x)
    }

    /// E(x) − E(0), without cancellation for small x.
    fn gap_shift(&self, x: T) -> T {
        let e2 = self.gap_squared(x);
        let e0 = self.a2.sqrt();
        x * (self.c + self.d * x) / (e2.sqrt() + e0)
    }

    /// Distance from x = 0 to the nearest (possibly complex) zero of E².
    fn radius(&self) -> T {
        let (a, b, c) = (self.d, self.c, self.a2);
        if a == T::zero() {
            return if b == T::zero() { T::infinity() } else { (c / b).abs() };
        }
        let disc = b * b - lit::<T>(4.0) * a * c;
        if disc < T::zero() {
            // complex pair: |root|² = c/a
            (c / a).abs().sqrt()
        } else {
            let q = -(b + b.signum() * disc.sqrt()) / lit(2.0);
            let r1 = if q == T::zero() { T::infinity() } else { (c / q).abs() };
            let r2 = if q == T::zero() { T::infinity() } else { (q / a).abs() };
            r1.min(r2)
        }
    }
}

fn check_spec<T: Real>(spec: &ModelSpec<T>, beta: Beta<T>) -> Result<(), LandauError> {
    spec.validate()?;
    if !beta.is_valid() {
        return Err(LandauError::InvalidBeta);
    }
    Ok(())
}

/// Gap polynomial of atom `i` along phase θ.
pub fn gap_polynomial<T: Real>(spec: &ModelSpec<T>, i: usize, theta: T) -> GapPolynomial<T> {
    let n = spec.n();
    let half_om = spec.atom_splittings[i] / lit(2.0);
    let (g1, g2) = spec.rotating_counter(i);
    // |g₁ b₀ + g₂ b₀*|² / |b₀|²
    let c = (g1 * g1 + g2 * g2 + lit::<T>(2.0) * g1 * g2 * (theta + theta).cos()) / n;
    match spec.family {
        Family::NonlinearKappa => {
            let k = spec.kappa_value();
            GapPolynomial { a2: half_om * half_om, c: c + lit::<T>(2.0) * half_om * k, d: k * k }
        }
        _ => GapPolynomial { a2: half_om * half_om, c, d: T::zero() },
    }
}

fn gap_polynomials<T: Real>(spec: &ModelSpec<T>, theta: T) -> Vec<GapPolynomial<T>> {
    (0..spec.n_atoms).map(|i| gap_polynomial(spec, i, theta)).collect()
}

/// Per-atom gap Eᵢ in a classical field.
pub fn classical_gap<T: Real>(
    spec: &ModelSpec<T>,
    b0: ClassicalField<T>,
    atom_index: usize,
) -> Result<T, LandauError> {
    spec.validate()?;
    if atom_index >= spec.n_atoms {
        return Err(LandauError::AtomIndex { index: atom_index, n: spec.n_atoms });
    }
    let p = gap_polynomial(spec, atom_index, b0.phase);
    Ok(p.gap_squared(b0.x()).max(T::zero()).sqrt())
}

/// Classical Hubbard energy. The coherent-state value of U b†b†bb is U|b₀|⁴.
fn hubbard_classical<T: Real>(spec: &ModelSpec<T>, x: T) -> T {
    spec.hubbard() * x * x
}

/// Free energy F(x) − F(0) along a phase, evaluated without cancellation.
/// Accepts x < 0 while every Eᵢ² stays positive (analytic continuation).
fn excess<T: Real>(spec: &ModelSpec<T>, beta: Beta<T>, polys: &[GapPolynomial<T>], x: T) -> T {
    let mut f = spec.omega * x + hubbard_classical(spec, x);
    for p in polys {
        let de = p.gap_shift(x);
        f -= match beta {
            Beta::Infinite => de,
            Beta::Finite(b) => ln_cosh_shift(b * p.a2.sqrt(), b * de) / b,
        };
    }
    f
}

/// dF/dx along a phase.
fn excess_slope<T: Real>(spec: &ModelSpec<T>, beta: Beta<T>, polys: &[GapPolynomial<T>], x: T) -> T {
    let two: T = lit(2.0);
    let mut s = spec.omega + two * spec.hubbard() * x;
    for p in polys {
        let e = p.gap_squared(x).sqrt();
        let th = match beta {
            Beta::Infinite => T::one(),
            Beta::Finite(b) => (b * e).tanh(),
        };
        s -= th * (p.c + two * p.d * x) / (two * e);
    }
    s
}

fn reference_energy<T: Real>(spec: &ModelSpec<T>, beta: Beta<T>) -> T {
    spec.atom_splittings
        .iter()
        .map(|&om| {
            let e0 = om / lit(2.0);
            match beta {
                Beta::Infinite => -e0,
                Beta::Finite(b) => -ln_two_cosh(b * e0) / b,
            }
        })
        .sum()
}

/// F = ω|b₀|² + U|b₀|⁴ − (1/β) Σᵢ ln(2cosh βEᵢ), or its β = ∞ limit
/// ω|b₀|² + U|b₀|⁴ − Σᵢ Eᵢ.
pub fn free_energy<T: Real>(
    spec: &ModelSpec<T>,
    beta: Beta<T>,
    b0: ClassicalField<T>,
) -> Result<T, LandauError> {
    check_spec(spec, beta)?;
    if !(b0.amplitude.is_finite() && b0.amplitude >= T::zero()) {
        return Err(LandauError::InvalidField);
    }
    let polys = gap_polynomials(spec, b0.phase);
    Ok(reference_energy(spec, beta) + excess(spec, beta, &polys, b0.x()))
}

/// Result of the global minimization over the classical field.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FieldMinimum<T> {
    pub field: ClassicalField<T>,
    pub free_energy: T,
    /// F(b₀) − F(0) ≤ 0.
    pub condensation_energy: T,
}

const PHASE_GRID: usize = 64;

fn phase_grid<T: Real>(spec: &ModelSpec<T>) -> Vec<T> {
    match spec.family {
        Family::AnisotropicRabiHubbard => (0..PHASE_GRID)
            .map(|k| T::TAU() * lit(k as f64) / lit(PHASE_GRID as f64))
            .collect(),
        // F depends on θ only through cos 2θ (Dicke) or not at all; θ = 0 is optimal
        _ => vec![T::zero()],
    }
}

/// Global minimum of the classical free energy.
pub fn minimize_free_energy<T: Real>(
    spec: &ModelSpec<T>,
    beta: Beta<T>,
) -> Result<FieldMinimum<T>, LandauError> {
    check_spec(spec, beta)?;
    let mut best: Option<(T, T, T)> = None; // (excess, x, θ)
    for theta in phase_grid(spec) {
        let polys = gap_polynomials(spec, theta);
        check_bounded(spec, beta, &polys)?;
        let (x, f) = minimize_along(spec, beta, &polys);
        if best.map_or(true, |(fb, _, _)| f < fb) {
            best = Some((f, x, theta));
        }
    }
    let (f, x, theta) = best.expect("phase grid is non-empty");
    let theta = if x == T::zero() { T::zero() } else { theta };
    Ok(FieldMinimum {
        field: ClassicalField::new(x.sqrt(), theta),
        free_energy: reference_energy(spec, beta) + f,
        condensation_energy: f,
    })
}

fn check_bounded<T: Real>(
    spec: &ModelSpec<T>,
    beta: Beta<T>,
    polys: &[GapPolynomial<T>],
) -> Result<(), LandauError> {
    if spec.hubbard() > T::zero() {
        return Ok(());
    }
    // large x: Eᵢ → √dᵢ·x, tanh → 1 for any finite β as well
    let _ = beta;
    let slope = spec.omega - polys.iter().map(|p| p.d.sqrt()).sum::<T>();
    if slope < T::zero() {
        return Err(LandauError::Unbounded { slope: slope.to_f64().unwrap_or(f64::NAN) });
    }
    Ok(())
}

/// Minimizer along one phase: doubling grid, golden section, then bisection
/// on the analytic slope. Returns (x*, F(x*) − F(0)).
fn minimize_along<T: Real>(
    spec: &ModelSpec<T>,
    beta: Beta<T>,
    polys: &[GapPolynomial<T>],
) -> (T, T) {
    let f = |x: T| excess(spec, beta, polys, x);
    let two: T = lit(2.0);
    let mut grid = Vec::with_capacity(130);
    let mut x: T = lit(1e-18);
    let x_max: T = lit(1e18);
    while x <= x_max {
        grid.push((x, f(x)));
        x = x * two;
    }
    let (k, &(_, fmin)) = grid
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .1.partial_cmp(&b.1 .1).unwrap())
        .unwrap();
    if !(fmin < T::zero()) {
        return (T::zero(), T::zero());
    }
    let lo = if k == 0 { T::zero() } else { grid[k - 1].0 };
    let hi = grid[(k + 1).min(grid.len() - 1)].0;

    // golden section to ~√ε in x
    let inv_phi: T = lit((5f64.sqrt() - 1.0) / 2.0);
    let (mut a, mut b) = (lo, hi);
    let mut c = b - (b - a) * inv_phi;
    let mut d = a + (b - a) * inv_phi;
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a) <= lit::<T>(1e-10) * b {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - (b - a) * inv_phi;
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + (b - a) * inv_phi;
            fd = f(d);
        }
    }
    let mut xs = (a + b) / two;

    // polish on the slope when it brackets a root
    let slope = |x: T| excess_slope(spec, beta, polys, x);
    let (mut l, mut r) = (lo.max(lit(1e-300)), hi);
    if slope(l) < T::zero() && slope(r) > T::zero() {
        for _ in 0..200 {
            let m = (l + r) / two;
            if m <= l || m >= r {
                break;
            }
            if slope(m) < T::zero() {
                l = m;
            } else {
                r = m;
            }
        }
        let cand = (l + r) / two;
        if f(cand) <= f(xs) {
            xs = cand;
        }
    }
    let fx = f(xs);
    if fx < T::zero() {
        (xs, fx)
    } else {
        (T::zero(), T::zero())
    }
}

/// Coefficients of F = Σ F₂ₙ |b₀|²ⁿ around b₀ = 0, along the softest phase.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LandauCoefficients<T> {
    pub f0: T,
    pub f2: T,
    pub f4: T,
    pub f6: T,
    pub f8: T,
    /// Closed form ω − Σᵢ cᵢ tanh(βΩᵢ/2)/Ωᵢ with cᵢ the x-slope of Eᵢ².
    pub f2_closed_form: T,
}

impl<T: Real> LandauCoefficients<T> {
    /// F₂ₙ for n = 0..=4.
    pub fn get(&self, n: usize) -> Option<T> {
        [self.f0, self.f2, self.f4, self.f6, self.f8].get(n).copied()
    }
}

/// Phase along which F₂ is smallest: the real axis unless the rotating and
/// counter-rotating amplitudes have opposite signs.
pub fn softest_phase<T: Real>(spec: &ModelSpec<T>) -> T {
    let (g1, g2) = spec.rotating_counter(0);
    if spec.family == Family::AnisotropicRabiHubbard && g1 * g2 < T::zero() {
        T::FRAC_PI_2()
    } else {
        T::zero()
    }
}

/// ω − F₂, i.e. the frequency at which the closed-form F₂ vanishes
/// (F₂ is linear in ω).
pub fn f2_zero<T: Real>(spec: &ModelSpec<T>, beta: Beta<T>) -> T {
    gap_polynomials(spec, softest_phase(spec))
        .iter()
        .map(|p| {
            let e0 = p.a2.sqrt();
            beta.tanh_half(e0 + e0) * p.c / (e0 + e0)
        })
        .sum()
}

/// Closed-form F₂ along the softest phase.
pub fn f2_closed_form<T: Real>(spec: &ModelSpec<T>, beta: Beta<T>) -> T {
    spec.omega - f2_zero(spec, beta)
}

/// F₂ₙ by Richardson-extrapolated central differences in x = |b₀|².
pub fn landau_coefficients<T: Real>(
    spec: &ModelSpec<T>,
    beta: Beta<T>,
    max_order: usize,
) -> Result<LandauCoefficients<T>, LandauError> {
    check_spec(spec, beta)?;
    if !matches!(max_order, 2 | 4 | 6 | 8) {
        return Err(LandauError::InvalidOrder);
    }
    let polys = gap_polynomials(spec, softest_phase(spec));
    let g = |x: T| excess(spec, beta, &polys, x);

    let mut h0 = T::infinity();
    for p in &polys {
        h0 = h0.min(p.radius());
        if p.c != T::zero() {
            h0 = h0.min((p.a2 / p.c).abs());
        }
    }
    let h0 = if h0.is_finite() { h0 / lit(8.0) } else { T::one() };
    if !(h0 > T::min_positive_value().sqrt()) {
        return Err(LandauError::StepUnderflow);
    }

    let mut coeff = [T::zero(); 5];
    let mut factorial = T::one();
    for n in 1..=max_order / 2 {
        factorial *= lit(n as f64);
        coeff[n] = richardson_derivative(&g, n, h0) / factorial;
    }
    Ok(LandauCoefficients {
        f0: reference_energy(spec, beta),
        f2: coeff[1],
        f4: coeff[2],
        f6: coeff[3],
        f8: coeff[4],
        f2_closed_form: f2_closed_form(spec, beta),
    })
}

/// Second-order central stencil for the `order`-th derivative at 0.
fn central_difference<T: Real>(g: &impl Fn(T) -> T, order: usize, h: T) -> T {
    let two: T = lit(2.0);
    match order {
        1 => (g(h) - g(-h)) / (two * h),
        2 => (g(h) - two * g(T::zero()) + g(-h)) / (h * h),
        3 => (g(two * h) - two * g(h) + two * g(-h) - g(-two * h)) / (two * h * h * h),
        4 => {
            (g(two * h) - lit::<T>(4.0) * (g(h) + g(-h)) + lit::<T>(6.0) * g(T::zero())
                + g(-two * h))
                / (h * h * h * h)
        }
        _ => unreachable!("orders above 4 are not used"),
    }
}

/// Richardson table in h², returning the entry with the smallest change
/// between successive diagonal elements.
fn richardson_derivative<T: Real>(g: &impl Fn(T) -> T, order: usize, h0: T) -> T {
    const LEVELS: usize = 7;
    let mut table: Vec<Vec<T>> = Vec::with_capacity(LEVELS);
    let mut best = T::zero();
    let mut best_err = T::infinity();
    let mut h = h0;
    for i in 0..LEVELS {
        let mut row = vec![central_difference(g, order, h)];
        let mut pow4 = T::one();
        for j in 1..=i {
            pow4 *= lit(4.0);
            let prev = table[i - 1][j - 1];
            let v = row[j - 1] + (row[j - 1] - prev) / (pow4 - T::one());
            row.push(v);
        }
        if i > 0 {
            let err = (row[i] - table[i - 1][i - 1]).abs();
            if err < best_err {
                best_err = err;
                best = row[i];
            }
        } else {
            best = row[0];
        }
        table.push(row);
        h = h / lit(2.0);
    }
    best
}

/// Fit of the order-parameter exponent near the boundary.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExponentFit<T> {
    /// Exponent of |b₀| ∼ (s − s_c)^α.
    pub alpha: T,
    /// Exponent of the photon number |b₀|² ∼ (s − s_c)^{2α}.
    pub photon_exponent: T,
    /// Critical coupling scale s_c.
    pub critical_scale: T,
    /// Relative window (s − s_c)/s_c used.
    pub window: (T, T),
    /// RMS residual of the log-log fit.
    pub residual: T,
    pub points: usize,
}

#[derive(Clone, Copy, Debug)]
pub struct ExponentScan<T> {
    pub window: (T, T),
    pub points: usize,
}

impl<T: Real> Default for ExponentScan<T> {
    fn default() -> Self {
        ExponentScan { window: (lit(1e-4), lit(1e-2)), points: 21 }
    }
}

/// Least squares of ln y against ln x; returns (slope, intercept, rms residual).
pub fn fit_power_law<T: Real>(xs: &[T], ys: &[T]) -> Result<(T, T, T), LandauError> {
    let pts: Vec<(T, T)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > T::zero() && **y > T::zero())
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return Err(LandauError::DegenerateFit);
    }
    let n: T = lit(pts.len() as f64);
    let mx = pts.iter().map(|p| p.0).sum::<T>() / n;
    let my = pts.iter().map(|p| p.1).sum::<T>() / n;
    let sxx: T = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    if sxx.is_zero() {
        return Err(LandauError::DegenerateFit);
    }
    let sxy: T = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let rss: T = pts.iter().map(|p| (p.1 - icpt - slope * p.0).powi(2)).sum();
    Ok((slope, icpt, (rss / n).sqrt()))
}

/// Scans the overall coupling scale s = s_c(1 + δ) with δ log-spaced over the
/// window and fits |b₀| against s − s_c.
pub fn fit_exponent<T: Real>(
    spec: &ModelSpec<T>,
    beta: Beta<T>,
    scan: ExponentScan<T>,
) -> Result<ExponentFit<T>, LandauError> {
    check_spec(spec, beta)?;
    let s_c = match critical_coupling_scale(spec, beta)? {
        CriticalCoupling::Value(s) => s,
        CriticalCoupling::AlwaysSuperradiant => return Err(LandauError::AlwaysSuperradiant),
    };
    let (lo, hi) = scan.window;
    // A window wholly on the normal side (δ < 0) is allowed and yields EmptyWindow.
    let sign = if lo > T::zero() { T::one() } else { -T::one() };
    let (alo, ahi) = (lo.abs(), hi.abs());
    if !(hi > lo && alo > T::zero() && ahi > T::zero() && lo * hi > T::zero()) || scan.points < 2 {
        return Err(LandauError::DegenerateFit);
    }
    let (llo, lhi) = (alo.ln(), ahi.ln());
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for k in 0..scan.points {
        let t: T = lit(k as f64 / (scan.points - 1) as f64);
        let delta = sign * (llo + (lhi - llo) * t).exp();
        let s = s_c * (T::one() + delta);
        let m = minimize_free_energy(&spec.with_coupling_scale(s), beta)?;
        if m.field.amplitude > T::zero() {
            xs.push(s - s_c);
            ys.push(m.field.amplitude);
        }
    }
    if xs.is_empty() {
        return Err(LandauError::EmptyWindow);
    }
    let (alpha, _, residual) = fit_power_law(&xs, &ys)?;
    Ok(ExponentFit {
        alpha,
        photon_exponent: alpha + alpha,
        critical_scale: s_c,
        window: (lo, hi),
        residual,
        points: xs.len(),
    })
}
