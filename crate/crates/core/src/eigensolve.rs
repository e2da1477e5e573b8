//! Diagonalization and observables.
//!
//! The dense path is the ground truth; the Lanczos path handles dimensions
//! beyond it. [`ground_manifold`] combines both block-by-block when a
//! conserved diagonal charge is available.

use std::collections::BTreeMap;

use num_complex::Complex;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::models::{
    build_basis, build_hamiltonian, collective_sz_operator, excitation_operator,
    parity_operator, photon_number_operator, BasisConfig, ModelError, ModelSpec,
};
use crate::scalar::{lit, Beta, Real};
use crate::sparse::SparseOperator;

#[derive(Debug, Error, PartialEq)]
pub enum SolveError {
    #[error("dimension {dim} exceeds the dense limit {limit}")]
    TooLargeForDense { dim: usize, limit: usize },
    #[error("operator is not flagged Hermitian")]
    NotHermitian,
    #[error("Lanczos did not converge: residual {residual:e} after {iterations} iterations (target {target:e})")]
    NoConvergence { residual: f64, iterations: usize, target: f64 },
    #[error("invalid inverse temperature")]
    InvalidBeta,
    #[error("operator dimensions differ ({0} vs {1})")]
    DimensionMismatch(usize, usize),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceReport<T> {
    /// Largest ‖Hv − Ev‖ over the reported pairs.
    pub max_residual: T,
    pub iterations: usize,
    pub restarts: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumResult<T> {
    /// Ascending.
    pub eigenvalues: Vec<T>,
    pub eigenvectors: Option<Vec<Vec<Complex<T>>>>,
    pub convergence: ConvergenceReport<T>,
}

#[derive(Clone, Copy, Debug)]
pub struct DenseOptions {
    pub max_dim: usize,
}

impl Default for DenseOptions {
    fn default() -> Self {
        DenseOptions { max_dim: 4096 }
    }
}

fn norm<T: Real>(v: &[Complex<T>]) -> T {
    v.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()
}

fn dot<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> Complex<T> {
    a.iter().zip(b).fold(Complex::zero(), |s, (x, y)| s + x.conj() * y)
}

fn residual<T: Real>(h: &SparseOperator<T>, v: &[Complex<T>], e: T) -> T {
    let hv = h.apply(v);
    hv.iter()
        .zip(v)
        .map(|(a, b)| (a - b * e).norm_sqr())
        .sum::<T>()
        .sqrt()
}

// Real-symmetric input takes the real solver, several times faster than the
// complex one.
fn eigh<T: Real>(dim: usize, dense: &[Complex<T>]) -> (Vec<T>, Vec<Complex<T>>) {
    if dense.iter().all(|z| z.im == T::zero()) {
        let re: Vec<T> = dense.iter().map(|z| z.re).collect();
        let (vals, vecs) = T::symmetric_eigh(dim, &re);
        (vals, vecs.into_iter().map(|x| Complex::new(x, T::zero())).collect())
    } else {
        T::hermitian_eigh(dim, dense)
    }
}

/// Ascending eigenvalues only, skipping the eigenvectors.
pub fn dense_eigenvalues<T: Real>(
    h: &SparseOperator<T>,
    opts: DenseOptions,
) -> Result<Vec<T>, SolveError> {
    let dim = h.dim();
    if dim > opts.max_dim {
        return Err(SolveError::TooLargeForDense { dim, limit: opts.max_dim });
    }
    if !h.is_hermitian() {
        return Err(SolveError::NotHermitian);
    }
    let dense = h.to_dense();
    if dense.iter().all(|z| z.im == T::zero()) {
        let re: Vec<T> = dense.iter().map(|z| z.re).collect();
        Ok(T::symmetric_eigvals(dim, &re))
    } else {
        Ok(T::hermitian_eigvals(dim, &dense))
    }
}

/// Full spectrum by dense diagonalization.
pub fn dense_spectrum<T: Real>(
    h: &SparseOperator<T>,
    opts: DenseOptions,
) -> Result<SpectrumResult<T>, SolveError> {
    let dim = h.dim();
    if dim > opts.max_dim {
        return Err(SolveError::TooLargeForDense { dim, limit: opts.max_dim });
    }
    if !h.is_hermitian() {
        return Err(SolveError::NotHermitian);
    }
    let (vals, flat) = eigh(dim, &h.to_dense());
    let vecs: Vec<Vec<Complex<T>>> = flat.chunks(dim.max(1)).map(<[_]>::to_vec).collect();
    let max_residual = if dim <= 256 {
        vals.iter().zip(&vecs).map(|(&e, v)| residual(h, v, e)).fold(T::zero(), T::max)
    } else {
        T::zero()
    };
    Ok(SpectrumResult {
        eigenvalues: vals,
        eigenvectors: Some(vecs),
        convergence: ConvergenceReport { max_residual, iterations: 0, restarts: 0 },
    })
}

#[derive(Clone, Copy, Debug)]
pub struct LanczosOptions<T> {
    /// Residual target relative to the operator norm bound.
    pub tol: T,
    pub max_krylov: usize,
    pub max_restarts: usize,
    pub seed: u64,
}

impl<T: Real> Default for LanczosOptions<T> {
    fn default() -> Self {
        LanczosOptions { tol: lit(1e-10), max_krylov: 240, max_restarts: 60, seed: 0x5eed }
    }
}

impl<T: Real> LanczosOptions<T> {
    pub fn with_tol(tol: T) -> Self {
        LanczosOptions { tol, ..Default::default() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroundState<T> {
    pub energy: T,
    pub vector: Vec<Complex<T>>,
    pub residual: T,
    pub iterations: usize,
}

/// Lowest eigenpair by restarted Lanczos; residual ≤ tol·‖H‖.
pub fn ground_state<T: Real>(h: &SparseOperator<T>, tol: T) -> Result<GroundState<T>, SolveError> {
    let spec = lowest_eigenpairs(h, 1, LanczosOptions::with_tol(tol))?;
    let mut vecs = spec.eigenvectors.unwrap_or_default();
    Ok(GroundState {
        energy: spec.eigenvalues[0],
        vector: vecs.swap_remove(0),
        residual: spec.convergence.max_residual,
        iterations: spec.convergence.iterations,
    })
}

/// `k` lowest eigenpairs, found one at a time with locking.
pub fn lowest_eigenpairs<T: Real>(
    h: &SparseOperator<T>,
    k: usize,
    opts: LanczosOptions<T>,
) -> Result<SpectrumResult<T>, SolveError> {
    if !h.is_hermitian() {
        return Err(SolveError::NotHermitian);
    }
    let dim = h.dim();
    let k = k.min(dim);
    let scale = h.norm_bound().max(T::min_positive_value());
    let target = opts.tol * scale;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    let mut locked: Vec<Vec<Complex<T>>> = Vec::new();
    let mut values = Vec::new();
    let mut iterations = 0;
    let mut restarts = 0;
    let mut max_res = T::zero();
    // Real operators keep the whole iteration real, which lets the projected
    // problem use the real eigensolver.
    let real = h.entries().all(|(_, _, z)| z.im == T::zero());
    for _ in 0..k {
        let start: Vec<Complex<T>> = (0..dim)
            .map(|_| {
                let re = lit(rng.random_range(-0.5..0.5));
                let im = if real { T::zero() } else { lit(rng.random_range(-0.5..0.5)) };
                Complex::new(re, im)
            })
            .collect();
        let out = thick_restart(h, start, &locked, &opts, scale, target);
        iterations += out.iterations;
        restarts += out.restarts;
        match out.pair {
            Some((theta, x, r)) => {
                values.push(theta);
                locked.push(x);
                max_res = max_res.max(r);
            }
            None => {
                return Err(SolveError::NoConvergence {
                    residual: out.residual.to_f64().unwrap_or(f64::NAN),
                    iterations,
                    target: target.to_f64().unwrap_or(f64::NAN),
                })
            }
        }
    }
    // Locking can return pairs slightly out of order for near-degenerate levels.
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
    Ok(SpectrumResult {
        eigenvalues: order.iter().map(|&i| values[i]).collect(),
        eigenvectors: Some(order.iter().map(|&i| locked[i].clone()).collect()),
        convergence: ConvergenceReport { max_residual: max_res, iterations, restarts },
    })
}

fn project_out<T: Real>(v: &mut [Complex<T>], against: &[Vec<Complex<T>>]) {
    for u in against {
        let c = dot(u, v);
        v.iter_mut().zip(u).for_each(|(x, y)| *x -= y * c);
    }
}

struct RestartOutcome<T> {
    pair: Option<(T, Vec<Complex<T>>, T)>,
    residual: T,
    iterations: usize,
    restarts: usize,
}

fn combine<T: Real>(vs: &[Vec<Complex<T>>], coeffs: &[Complex<T>]) -> Vec<Complex<T>> {
    let mut x = vec![Complex::zero(); vs[0].len()];
    for (v, &c) in vs.iter().zip(coeffs) {
        x.iter_mut().zip(v).for_each(|(xi, vi)| *xi += vi * c);
    }
    x
}

/// Lowest eigenpair orthogonal to `locked` by thick-restart Lanczos: after
/// each cycle the lowest Ritz vectors are kept and the expansion continues
/// from the residual of the first one. The projected matrix is formed
/// explicitly, so no three-term recurrence has to survive the restart.
fn thick_restart<T: Real>(
    h: &SparseOperator<T>,
    start: Vec<Complex<T>>,
    locked: &[Vec<Complex<T>>],
    opts: &LanczosOptions<T>,
    scale: T,
    target: T,
) -> RestartOutcome<T> {
    let dim = h.dim();
    let m_max = opts.max_krylov.min(dim - locked.len()).max(1);
    let keep = (m_max / 4).clamp(1, 24);
    let breakdown = scale * T::epsilon() * lit(64.0);

    let mut vs: Vec<Vec<Complex<T>>> = Vec::with_capacity(m_max);
    let mut hvs: Vec<Vec<Complex<T>>> = Vec::with_capacity(m_max);
    // projected matrix, row-major with stride m_max
    let mut proj = vec![Complex::zero(); m_max * m_max];
    let mut next = start;
    let mut out = RestartOutcome { pair: None, residual: T::infinity(), iterations: 0, restarts: 0 };

    for cycle in 0..=opts.max_restarts {
        while vs.len() < m_max {
            for _ in 0..2 {
                project_out(&mut next, locked);
                project_out(&mut next, &vs);
            }
            let b = norm(&next);
            if b <= breakdown {
                break;
            }
            next.iter_mut().for_each(|z| *z = *z / b);
            let hv = h.apply(&next);
            out.iterations += 1;
            let j = vs.len();
            for (i, v) in vs.iter().enumerate() {
                let t = dot(v, &hv);
                proj[i * m_max + j] = t;
                proj[j * m_max + i] = t.conj();
            }
            proj[j * m_max + j] = Complex::new(dot(&next, &hv).re, T::zero());
            vs.push(std::mem::take(&mut next));
            next = hv.clone();
            hvs.push(hv);
        }
        if vs.is_empty() {
            return out;
        }

        let m = vs.len();
        let mut small = vec![Complex::zero(); m * m];
        for i in 0..m {
            small[i * m..(i + 1) * m].copy_from_slice(&proj[i * m_max..i * m_max + m]);
        }
        let (theta, y) = eigh(m, &small);
        let p = keep.min(m);
        let xs: Vec<Vec<Complex<T>>> = (0..p).map(|i| combine(&vs, &y[i * m..(i + 1) * m])).collect();
        let hxs: Vec<Vec<Complex<T>>> =
            (0..p).map(|i| combine(&hvs, &y[i * m..(i + 1) * m])).collect();
        let r: Vec<Complex<T>> = hxs[0].iter().zip(&xs[0]).map(|(a, b)| a - b * theta[0]).collect();
        let rn = norm(&r);

        if rn <= target || m < m_max {
            // Confirm against a fresh product; the stored images drift slowly.
            let mut x = xs[0].clone();
            let nx = norm(&x);
            x.iter_mut().for_each(|z| *z = *z / nx);
            let true_res = residual(h, &x, theta[0]);
            out.residual = true_res;
            if true_res <= target {
                out.pair = Some((theta[0], x, true_res));
                return out;
            }
        } else {
            out.residual = rn;
        }
        if cycle == opts.max_restarts {
            break;
        }
        out.restarts += 1;

        // Restart from the kept Ritz vectors; recompute their images so the
        // drift does not accumulate.
        vs = xs;
        hvs = vs.iter().map(|v| h.apply(v)).collect();
        out.iterations += p;
        proj.iter_mut().for_each(|z| *z = Complex::zero());
        for i in 0..p {
            for j in i..p {
                let t = dot(&vs[i], &hvs[j]);
                proj[i * m_max + j] = t;
                proj[j * m_max + i] = t.conj();
            }
        }
        next = r;
    }
    out
}

/// Ground manifold: lowest level (degenerate partners averaged by callers)
/// plus the gap to the first excited level.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundManifold<T> {
    pub energy: T,
    /// Orthonormal states within the degeneracy tolerance of `energy`.
    pub states: Vec<Vec<Complex<T>>>,
    /// Distance to the first level outside the manifold (∞ if none).
    pub gap: T,
    /// Splitting inside the manifold (quasi-degeneracy).
    pub quasi_gap: T,
}

// Index sets of the eigenspaces of a diagonal charge (half-integer safe).
fn charge_blocks<T: Real>(
    charge: Option<&SparseOperator<T>>,
    dim: usize,
) -> Result<Vec<Vec<usize>>, SolveError> {
    Ok(match charge {
        Some(q) => {
            if q.dim() != dim {
                return Err(SolveError::DimensionMismatch(q.dim(), dim));
            }
            let mut by_charge: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
            for (i, d) in q.real_diagonal().into_iter().enumerate() {
                let key = (d * lit(2.0)).round().to_i64().unwrap_or(i64::MAX);
                by_charge.entry(key).or_default().push(i);
            }
            by_charge.into_values().collect()
        }
        None => vec![(0..dim).collect()],
    })
}

/// Degeneracy tolerance used when averaging ground manifolds.
pub fn degeneracy_tol<T: Real>(e0: T) -> T {
    T::epsilon().sqrt() * e0.abs().max(T::one())
}

/// Ground manifold computed block by block over the eigenspaces of a
/// diagonal `charge` that commutes with `h`. Small blocks go through the
/// dense solver, the rest through Lanczos.
pub fn ground_manifold<T: Real>(
    h: &SparseOperator<T>,
    charge: Option<&SparseOperator<T>>,
    tol: T,
) -> Result<GroundManifold<T>, SolveError> {
    const DENSE_BLOCK: usize = 400;
    let dim = h.dim();
    let blocks = charge_blocks(charge, dim)?;

    let mut levels: Vec<(T, Vec<Complex<T>>)> = Vec::new();
    for block in &blocks {
        let sub = h.restrict(block);
        let spec = if block.len() <= DENSE_BLOCK {
            dense_spectrum(&sub, DenseOptions { max_dim: DENSE_BLOCK })?
        } else {
            lowest_eigenpairs(&sub, 2, LanczosOptions::with_tol(tol))?
        };
        let vecs = spec.eigenvectors.unwrap_or_default();
        for (e, v) in spec.eigenvalues.into_iter().zip(vecs).take(2) {
            let mut full = vec![Complex::zero(); dim];
            for (&i, z) in block.iter().zip(v) {
                full[i] = z;
            }
            levels.push((e, full));
        }
    }
    levels.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let e0 = levels[0].0;
    let dtol = degeneracy_tol(e0);
    let mut states = Vec::new();
    let mut top = e0;
    let mut gap = T::infinity();
    for (e, v) in levels {
        if e - e0 <= dtol {
            top = e;
            states.push(v);
        } else {
            gap = e - e0;
            break;
        }
    }
    Ok(GroundManifold { energy: e0, states, gap, quasi_gap: top - e0 })
}

/// Ground-state and thermal observables.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ObservableSet<T> {
    pub photon_number: T,
    pub photon_fluct: T,
    pub collective_sz: T,
    pub parity: T,
}

struct ObservableOps<T> {
    n: SparseOperator<T>,
    n2: SparseOperator<T>,
    sz: SparseOperator<T>,
    parity: SparseOperator<T>,
}

impl<T: Real> ObservableOps<T> {
    fn new(basis: &BasisConfig) -> Self {
        let n = photon_number_operator(basis);
        let n2 = n.matmul(&n);
        ObservableOps { n, n2, sz: collective_sz_operator(basis), parity: parity_operator(basis) }
    }

    fn raw(&self, v: &[Complex<T>]) -> [T; 4] {
        [
            self.n.expectation(v).re,
            self.n2.expectation(v).re,
            self.sz.expectation(v).re,
            self.parity.expectation(v).re,
        ]
    }
}

fn finish<T: Real>(m: [T; 4]) -> ObservableSet<T> {
    ObservableSet {
        photon_number: m[0],
        photon_fluct: m[1] - m[0] * m[0],
        collective_sz: m[2],
        parity: m[3],
    }
}

/// Observables of a normalized pure state.
pub fn observables_of_state<T: Real>(basis: &BasisConfig, v: &[Complex<T>]) -> ObservableSet<T> {
    finish(ObservableOps::new(basis).raw(v))
}

/// Observables averaged uniformly over a ground manifold.
pub fn observables_of_manifold<T: Real>(
    basis: &BasisConfig,
    manifold: &GroundManifold<T>,
) -> ObservableSet<T> {
    let ops = ObservableOps::new(basis);
    let k: T = lit(manifold.states.len() as f64);
    let mut acc = [T::zero(); 4];
    for v in &manifold.states {
        for (a, x) in acc.iter_mut().zip(ops.raw(v)) {
            *a += x / k;
        }
    }
    finish(acc)
}

/// Boltzmann weights over a spectrum, shifted by the lowest level.
///
/// At β = ∞ the weight is spread uniformly over the degenerate ground space.
pub fn boltzmann_weights<T: Real>(eigenvalues: &[T], beta: Beta<T>) -> Vec<T> {
    let e0 = eigenvalues.iter().copied().fold(T::infinity(), T::min);
    let raw: Vec<T> = match beta {
        Beta::Finite(b) => eigenvalues.iter().map(|&e| (-(b * (e - e0))).exp()).collect(),
        Beta::Infinite => {
            let dtol = degeneracy_tol(e0);
            eigenvalues
                .iter()
                .map(|&e| if e - e0 <= dtol { T::one() } else { T::zero() })
                .collect()
        }
    };
    let z: T = raw.iter().copied().sum();
    raw.into_iter().map(|w| w / z).collect()
}

/// Tr(O e^{−βH}) / Tr(e^{−βH}) on the dense path.
pub fn thermal_expectation<T: Real>(
    h: &SparseOperator<T>,
    beta: Beta<T>,
    obs: &SparseOperator<T>,
) -> Result<T, SolveError> {
    Ok(thermal_expectations(h, beta, &[obs])?[0])
}

/// Several thermal expectations sharing one diagonalization.
pub fn thermal_expectations<T: Real>(
    h: &SparseOperator<T>,
    beta: Beta<T>,
    observables: &[&SparseOperator<T>],
) -> Result<Vec<T>, SolveError> {
    thermal_expectations_blocked(h, None, beta, observables)
}

/// Thermal expectations with `h` split over the eigenspaces of a diagonal
/// charge commuting with it. The density matrix is block diagonal, so only
/// the diagonal blocks of each observable contribute.
pub fn thermal_expectations_blocked<T: Real>(
    h: &SparseOperator<T>,
    charge: Option<&SparseOperator<T>>,
    beta: Beta<T>,
    observables: &[&SparseOperator<T>],
) -> Result<Vec<T>, SolveError> {
    if !beta.is_valid() {
        return Err(SolveError::InvalidBeta);
    }
    for o in observables {
        if o.dim() != h.dim() {
            return Err(SolveError::DimensionMismatch(o.dim(), h.dim()));
        }
    }
    let blocks = charge_blocks(charge, h.dim())?;
    let mut energies = Vec::new();
    // Per level: the expectation of every observable.
    let mut values: Vec<Vec<T>> = Vec::new();
    for block in &blocks {
        let sub = h.restrict(block);
        let spec = dense_spectrum(&sub, DenseOptions::default())?;
        let subs: Vec<SparseOperator<T>> = observables.iter().map(|o| o.restrict(block)).collect();
        for (e, v) in spec.eigenvalues.into_iter().zip(spec.eigenvectors.unwrap_or_default()) {
            energies.push(e);
            values.push(subs.iter().map(|o| o.expectation(&v).re).collect());
        }
    }
    let weights = boltzmann_weights(&energies, beta);
    let mut out = vec![T::zero(); observables.len()];
    for (&w, vals) in weights.iter().zip(&values) {
        if w > T::zero() {
            for (acc, &x) in out.iter_mut().zip(vals) {
                *acc += w * x;
            }
        }
    }
    Ok(out)
}

/// Free energy −(1/β) ln Z on the dense path (ground energy at β = ∞).
pub fn free_energy_dense<T: Real>(h: &SparseOperator<T>, beta: Beta<T>) -> Result<T, SolveError> {
    let levels = dense_eigenvalues(h, DenseOptions::default())?;
    let e0 = levels[0];
    Ok(match beta {
        Beta::Infinite => e0,
        Beta::Finite(b) => {
            let z: T = levels.iter().map(|&e| (-(b * (e - e0))).exp()).sum();
            e0 - z.ln() / b
        }
    })
}

/// Thermal (dense) or ground-manifold observables for a model at a cutoff.
pub fn model_observables<T: Real>(
    spec: &ModelSpec<T>,
    beta: Beta<T>,
    fock_cutoff: usize,
    tol: T,
) -> Result<(ObservableSet<T>, Option<GroundManifold<T>>), SolveError> {
    let basis = build_basis(spec.n_atoms, fock_cutoff)?;
    let h = build_hamiltonian(spec, &basis)?;
    match beta {
        Beta::Infinite => {
            let charge = symmetry_charge(spec, &basis);
            let gm = ground_manifold(&h, Some(&charge), tol)?;
            Ok((observables_of_manifold(&basis, &gm), Some(gm)))
        }
        Beta::Finite(_) => {
            let ops = ObservableOps::new(&basis);
            let charge = symmetry_charge(spec, &basis);
            let v = thermal_expectations_blocked(
                &h,
                Some(&charge),
                beta,
                &[&ops.n, &ops.n2, &ops.sz, &ops.parity],
            )?;
            Ok((finish([v[0], v[1], v[2], v[3]]), None))
        }
    }
}

/// The strongest diagonal conserved charge of the family: excitation number
/// for rotating-wave families, parity otherwise.
pub fn symmetry_charge<T: Real>(spec: &ModelSpec<T>, basis: &BasisConfig) -> SparseOperator<T> {
    if spec.family.is_rotating_wave() {
        excitation_operator(basis)
    } else {
        parity_operator(basis)
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum CutoffError {
    #[error("tail tolerance must lie in (0, 1)")]
    InvalidTolerance,
    /// Photon number grows beyond the supported cutoff range; expected deep in
    /// the superradiant phase.
    #[error("photon distribution not contained below cutoff {cap} (tail {tail:e})")]
    Divergent { cap: usize, tail: f64 },
    #[error(transparent)]
    Solve(#[from] SolveError),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CutoffReport<T> {
    pub fock_cutoff: usize,
    /// Population of the two highest Fock levels at that cutoff.
    pub tail: T,
}

#[derive(Clone, Copy, Debug)]
pub struct CutoffOptions {
    pub start: usize,
    pub hard_cap: usize,
}

impl Default for CutoffOptions {
    fn default() -> Self {
        CutoffOptions { start: 2, hard_cap: 1 << 14 }
    }
}

/// Population of the top two Fock levels in the relevant state(s).
pub fn fock_tail<T: Real>(
    spec: &ModelSpec<T>,
    beta: Beta<T>,
    fock_cutoff: usize,
    tol: T,
) -> Result<T, SolveError> {
    let basis = build_basis(spec.n_atoms, fock_cutoff)?;
    let h = build_hamiltonian(spec, &basis)?;
    let top = fock_cutoff.saturating_sub(1);
    let proj = SparseOperator::diagonal(
        (0..basis.dim).map(|i| if basis.fock(i) >= top { T::one() } else { T::zero() }),
    );
    match beta {
        Beta::Infinite => {
            let charge = symmetry_charge(spec, &basis);
            let gm = ground_manifold(&h, Some(&charge), tol)?;
            let k: T = lit(gm.states.len() as f64);
            Ok(gm.states.iter().map(|v| proj.expectation(v).re).sum::<T>() / k)
        }
        Beta::Finite(_) => {
            let charge = symmetry_charge(spec, &basis);
            Ok(thermal_expectations_blocked(&h, Some(&charge), beta, &[&proj])?[0])
        }
    }
}

/// Smallest cutoff on the doubling ladder whose top-two-level population is
/// below `tail_tol`.
pub fn adaptive_cutoff<T: Real>(
    spec: &ModelSpec<T>,
    beta: Beta<T>,
    tail_tol: T,
    opts: CutoffOptions,
) -> Result<CutoffReport<T>, CutoffError> {
    if !(tail_tol > T::zero() && tail_tol < T::one()) {
        return Err(CutoffError::InvalidTolerance);
    }
    let tol = lit(1e-11);
    let mut n_max = opts.start.max(2);
    let mut tail = T::one();
    while n_max <= opts.hard_cap {
        match fock_tail(spec, beta, n_max, tol) {
            Ok(t) => tail = t,
            Err(SolveError::TooLargeForDense { .. }) => break,
            Err(e) => return Err(e.into()),
        }
        if tail < tail_tol {
            return Ok(CutoffReport { fock_cutoff: n_max, tail });
        }
        n_max *= 2;
    }
    Err(CutoffError::Divergent {
        cap: n_max.min(opts.hard_cap),
        tail: tail.to_f64().unwrap_or(f64::NAN),
    })
}
