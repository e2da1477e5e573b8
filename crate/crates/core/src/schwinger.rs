//! Two-fermion (α, β) representation of each spin and the phase-weighted
//! trace identity Z = i^N Tr exp(−βH_F − iπN_F/2).
//!
//! Basis index = fock · 4^N + occupation mask, with one mask bit per mode at
//! the position given by the [`ModeOrdering`]. Fermionic signs follow the
//! Jordan-Wigner string over lower mask bits.

use std::collections::BTreeMap;

use num_complex::Complex;
use serde::Serialize;
use thiserror::Error;

use crate::eigensolve::{dense_eigenvalues, DenseOptions, SolveError};
use crate::models::{build_basis, build_hamiltonian, ModelError, ModelSpec};
use crate::scalar::{lit, Real};
use crate::sparse::SparseOperator;

pub const MAX_ATOMS: usize = 2;

#[derive(Debug, Error, PartialEq)]
pub enum SchwingerError {
    #[error("fermion representation supports at most {MAX_ATOMS} atoms, got {0}")]
    TooManyAtoms(usize),
    #[error("basis has {basis} atoms but the model has {model}")]
    Mismatch { basis: usize, model: usize },
    #[error("fermion number {n_f} outside 0..={max}")]
    InvalidSector { n_f: usize, max: usize },
    #[error("inverse temperature must be finite and positive")]
    InvalidBeta,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Solve(#[from] SolveError),
}

/// Placement of the 2N modes along the Jordan-Wigner string.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub enum ModeOrdering {
    /// α₁, β₁, α₂, β₂, …
    #[default]
    Interleaved,
    /// β_N, α_N, …, β₁, α₁
    Reversed,
    /// α₁, …, α_N, β₁, …, β_N
    Blocked,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ModeKind {
    Alpha,
    Beta,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Mode {
    pub site: usize,
    pub kind: ModeKind,
}

impl Mode {
    pub fn alpha(site: usize) -> Self {
        Mode { site, kind: ModeKind::Alpha }
    }

    pub fn beta(site: usize) -> Self {
        Mode { site, kind: ModeKind::Beta }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct FermionBasis {
    pub n_atoms: usize,
    pub fock_cutoff: usize,
    pub ordering: ModeOrdering,
    pub dim: usize,
}

impl FermionBasis {
    pub fn new(n_atoms: usize, fock_cutoff: usize, ordering: ModeOrdering) -> Result<Self, SchwingerError> {
        if n_atoms == 0 {
            return Err(ModelError::NoAtoms.into());
        }
        if n_atoms > MAX_ATOMS {
            return Err(SchwingerError::TooManyAtoms(n_atoms));
        }
        let dim = (fock_cutoff + 1) * modes_states(n_atoms);
        Ok(FermionBasis { n_atoms, fock_cutoff, ordering, dim })
    }

    pub fn mode_count(&self) -> usize {
        2 * self.n_atoms
    }

    /// Bit position of a mode in the occupation mask.
    pub fn position(&self, mode: Mode) -> usize {
        let n = self.n_atoms;
        let (i, a) = (mode.site, mode.kind == ModeKind::Alpha);
        match self.ordering {
            ModeOrdering::Interleaved => 2 * i + usize::from(!a),
            ModeOrdering::Reversed => 2 * n - 1 - (2 * i + usize::from(!a)),
            ModeOrdering::Blocked => {
                if a {
                    i
                } else {
                    n + i
                }
            }
        }
    }

    pub fn index(&self, fock: usize, mask: usize) -> usize {
        fock * modes_states(self.n_atoms) + mask
    }

    pub fn fock(&self, index: usize) -> usize {
        index / modes_states(self.n_atoms)
    }

    pub fn mask(&self, index: usize) -> usize {
        index % modes_states(self.n_atoms)
    }

    pub fn fermion_number(&self, index: usize) -> usize {
        self.mask(index).count_ones() as usize
    }

    fn occupied(&self, mask: usize, mode: Mode) -> bool {
        mask >> self.position(mode) & 1 == 1
    }

    /// Per-site occupation (0, 1 or 2) of a mask, encoded base 3.
    fn pattern(&self, mask: usize) -> usize {
        (0..self.n_atoms).rev().fold(0, |acc, i| {
            let occ = usize::from(self.occupied(mask, Mode::alpha(i)))
                + usize::from(self.occupied(mask, Mode::beta(i)));
            acc * 3 + occ
        })
    }

    /// Whether every site holds exactly one fermion.
    pub fn is_physical(&self, index: usize) -> bool {
        let mask = self.mask(index);
        (0..self.n_atoms).all(|i| {
            self.occupied(mask, Mode::alpha(i)) != self.occupied(mask, Mode::beta(i))
        })
    }
}

fn modes_states(n_atoms: usize) -> usize {
    1 << (2 * n_atoms)
}

/// c_p on a mask: Some((sign, new mask)) if mode p is occupied.
fn annihilate(mask: usize, p: usize) -> Option<(i32, usize)> {
    if mask >> p & 1 == 0 {
        return None;
    }
    let sign = if (mask & ((1 << p) - 1)).count_ones() % 2 == 0 { 1 } else { -1 };
    Some((sign, mask ^ (1 << p)))
}

fn create(mask: usize, p: usize) -> Option<(i32, usize)> {
    if mask >> p & 1 == 1 {
        return None;
    }
    let sign = if (mask & ((1 << p) - 1)).count_ones() % 2 == 0 { 1 } else { -1 };
    Some((sign, mask | (1 << p)))
}

/// c†_p c_q on a mask.
fn hop(mask: usize, p: usize, q: usize) -> Option<(i32, usize)> {
    let (s1, m1) = annihilate(mask, q)?;
    let (s2, m2) = create(m1, p)?;
    Some((s1 * s2, m2))
}

/// Annihilation operator of one fermionic mode (identity on the boson).
pub fn annihilation_operator<T: Real>(basis: &FermionBasis, mode: Mode) -> SparseOperator<T> {
    let p = basis.position(mode);
    let trip = (0..basis.dim).filter_map(|idx| {
        let (s, m) = annihilate(basis.mask(idx), p)?;
        let to = basis.index(basis.fock(idx), m);
        Some((to, idx, Complex::new(lit::<T>(f64::from(s)), T::zero())))
    });
    SparseOperator::from_triplets(basis.dim, trip.collect::<Vec<_>>(), false)
}

pub fn fermion_number_operator<T: Real>(basis: &FermionBasis) -> SparseOperator<T> {
    SparseOperator::diagonal((0..basis.dim).map(|i| lit::<T>(basis.fermion_number(i) as f64)))
}

/// H_F: the spin Hamiltonian with σ⁺ᵢ → α†ᵢβᵢ, σ⁻ᵢ → β†ᵢαᵢ,
/// σᶻᵢ → α†ᵢαᵢ − β†ᵢβᵢ, on the full fermionic Fock space.
pub fn build_fermion_hamiltonian<T: Real>(
    spec: &ModelSpec<T>,
    basis: &FermionBasis,
) -> Result<SparseOperator<T>, SchwingerError> {
    spec.validate()?;
    if spec.n_atoms > MAX_ATOMS {
        return Err(SchwingerError::TooManyAtoms(spec.n_atoms));
    }
    if basis.n_atoms != spec.n_atoms {
        return Err(SchwingerError::Mismatch { basis: basis.n_atoms, model: spec.n_atoms });
    }
    let two: T = lit(2.0);
    let inv_sqrt_n = spec.n().sqrt().recip();
    let (w, u, kappa) = (spec.omega, spec.hubbard(), spec.kappa_value());
    let mut trip = Vec::new();
    for idx in 0..basis.dim {
        let n = basis.fock(idx);
        let mask = basis.mask(idx);
        let nf: T = lit(n as f64);
        let mut diag = w * nf + u * nf * (nf - T::one());
        for i in 0..basis.n_atoms {
            let sz = i32::from(basis.occupied(mask, Mode::alpha(i)))
                - i32::from(basis.occupied(mask, Mode::beta(i)));
            diag += (spec.atom_splittings[i] / two + kappa * nf) * lit(f64::from(sz));
        }
        if !diag.is_zero() {
            trip.push((idx, idx, Complex::new(diag, T::zero())));
        }
        if n == 0 {
            continue;
        }
        // b lowers the photon number; pair it with σ⁺ (g₁) and σ⁻ (g₂)
        let amp = nf.sqrt() * inv_sqrt_n;
        for i in 0..basis.n_atoms {
            let (g1, g2) = spec.rotating_counter(i);
            let a = basis.position(Mode::alpha(i));
            let b = basis.position(Mode::beta(i));
            for (g, (p, q)) in [(g1, (a, b)), (g2, (b, a))] {
                if g.is_zero() {
                    continue;
                }
                if let Some((s, m)) = hop(mask, p, q) {
                    let to = basis.index(n - 1, m);
                    let v = Complex::new(g * amp * lit(f64::from(s)), T::zero());
                    trip.push((to, idx, v));
                    trip.push((idx, to, v.conj()));
                }
            }
        }
    }
    Ok(SparseOperator::from_triplets(basis.dim, trip, true))
}

/// Eigenvalues of H_F grouped by (N_F, physical?), computed block by block
/// over per-site occupation patterns, which H_F conserves.
fn block_levels<T: Real>(
    h: &SparseOperator<T>,
    basis: &FermionBasis,
) -> Result<BTreeMap<(usize, bool), Vec<T>>, SchwingerError> {
    let mut blocks: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for idx in 0..basis.dim {
        blocks.entry(basis.pattern(basis.mask(idx))).or_default().push(idx);
    }
    let mut out: BTreeMap<(usize, bool), Vec<T>> = BTreeMap::new();
    for idxs in blocks.values() {
        let nf = basis.fermion_number(idxs[0]);
        let phys = basis.is_physical(idxs[0]);
        let levels = dense_eigenvalues(&h.restrict(idxs), DenseOptions { max_dim: basis.dim })?;
        out.entry((nf, phys)).or_default().extend(levels);
    }
    Ok(out)
}

fn shifted_sum<T: Real>(levels: &[T], beta: T, e_ref: T) -> T {
    levels.iter().map(|&e| (-(beta * (e - e_ref))).exp()).sum()
}

/// Tr over the N_F = `n_f` subspace of e^{−βH_F}.
pub fn sector_trace<T: Real>(
    h: &SparseOperator<T>,
    basis: &FermionBasis,
    beta: T,
    n_f: usize,
) -> Result<T, SchwingerError> {
    if !(beta.is_finite() && beta > T::zero()) {
        return Err(SchwingerError::InvalidBeta);
    }
    if n_f > basis.mode_count() {
        return Err(SchwingerError::InvalidSector { n_f, max: basis.mode_count() });
    }
    let levels = block_levels(h, basis)?;
    Ok(levels
        .iter()
        .filter(|((nf, _), _)| *nf == n_f)
        .map(|(_, ev)| shifted_sum(ev, beta, T::zero()))
        .sum())
}

/// Eigenvalues of H_F restricted to singly occupied sites (N_F = N).
pub fn physical_spectrum<T: Real>(
    h: &SparseOperator<T>,
    basis: &FermionBasis,
) -> Result<Vec<T>, SchwingerError> {
    let mut ev = block_levels(h, basis)?.remove(&(basis.n_atoms, true)).unwrap_or_default();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(ev)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SectorReport<T> {
    pub n_f: usize,
    /// e^{iφ N_F} with the configured per-fermion angle φ.
    pub phase: Complex<T>,
    pub trace: T,
    pub physical_trace: T,
    pub unphysical_trace: T,
    /// i^N · phase · trace.
    pub weighted: Complex<T>,
    pub weighted_unphysical: Complex<T>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PartitionIdentity<T> {
    /// Traces are reported relative to e^{−β·energy_shift}.
    pub energy_shift: T,
    pub z_spin: T,
    pub z_fermion_phase: Complex<T>,
    pub relative_error: T,
    /// |Im Z_F| / |Z_spin|.
    pub imaginary_residue: T,
    /// |Σ weighted unphysical| / |Z_spin|.
    pub unphysical_residue: T,
    pub sectors: Vec<SectorReport<T>>,
}

impl<T: Real> PartitionIdentity<T> {
    pub fn holds(&self, rel_tol: T, imag_tol: T) -> bool {
        self.relative_error < rel_tol && self.imaginary_residue < imag_tol
    }
}

#[derive(Clone, Copy, Debug)]
pub struct IdentityOptions<T> {
    /// Angle φ in the per-fermion phase e^{iφ}; the identity needs −π/2.
    pub phase_per_fermion: T,
}

impl<T: Real> Default for IdentityOptions<T> {
    fn default() -> Self {
        IdentityOptions { phase_per_fermion: -T::FRAC_PI_2() }
    }
}

/// Compares Z of the spin model with i^N Σ_{N_F} e^{−iπN_F/2} Tr_{N_F} e^{−βH_F}
/// at the same boson cutoff.
pub fn verify_partition_identity<T: Real>(
    spec: &ModelSpec<T>,
    beta: T,
    basis: &FermionBasis,
) -> Result<PartitionIdentity<T>, SchwingerError> {
    verify_partition_identity_with(spec, beta, basis, IdentityOptions::default())
}

pub fn verify_partition_identity_with<T: Real>(
    spec: &ModelSpec<T>,
    beta: T,
    basis: &FermionBasis,
    opts: IdentityOptions<T>,
) -> Result<PartitionIdentity<T>, SchwingerError> {
    if !(beta.is_finite() && beta > T::zero()) {
        return Err(SchwingerError::InvalidBeta);
    }
    let hf = build_fermion_hamiltonian(spec, basis)?;
    let levels = block_levels(&hf, basis)?;

    let spin_basis = build_basis(spec.n_atoms, basis.fock_cutoff)?;
    let hs = build_hamiltonian(spec, &spin_basis)?;
    let spin_levels = dense_eigenvalues(&hs, DenseOptions { max_dim: spin_basis.dim.max(1) })?;

    let e_ref = levels
        .values()
        .flatten()
        .chain(&spin_levels)
        .copied()
        .fold(T::infinity(), T::min);
    let z_spin = shifted_sum(&spin_levels, beta, e_ref);

    let prefactor = Complex::new(T::zero(), T::one()).powi(spec.n_atoms as i32);
    let mut sectors = Vec::new();
    let mut z = Compensated2::default();
    let mut unphys = Compensated2::default();
    for n_f in 0..=basis.mode_count() {
        let phys = levels.get(&(n_f, true)).map_or(T::zero(), |ev| shifted_sum(ev, beta, e_ref));
        let other = levels.get(&(n_f, false)).map_or(T::zero(), |ev| shifted_sum(ev, beta, e_ref));
        let phase = Complex::from_polar(T::one(), opts.phase_per_fermion * lit(n_f as f64));
        let w = prefactor * phase;
        z.add(w * phys);
        z.add(w * other);
        unphys.add(w * other);
        sectors.push(SectorReport {
            n_f,
            phase,
            trace: phys + other,
            physical_trace: phys,
            unphysical_trace: other,
            weighted: w * (phys + other),
            weighted_unphysical: w * other,
        });
    }
    let zf = z.total();
    Ok(PartitionIdentity {
        energy_shift: e_ref,
        z_spin,
        z_fermion_phase: zf,
        relative_error: (zf - z_spin).norm() / z_spin,
        imaginary_residue: zf.im.abs() / z_spin,
        unphysical_residue: unphys.total().norm() / z_spin,
        sectors,
    })
}

/// Kahan sums on real and imaginary parts.
#[derive(Default)]
struct Compensated2<T> {
    s: Complex<T>,
    c: Complex<T>,
}

impl<T: Real> Compensated2<T> {
    fn add(&mut self, x: Complex<T>) {
        let y = x - self.c;
        let t = self.s + y;
        self.c = (t - self.s) - y;
        self.s = t;
    }

    fn total(&self) -> Complex<T> {
        self.s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimension_formula() {
        let b = FermionBasis::new(2, 5, ModeOrdering::Interleaved).unwrap();
        assert_eq!(b.dim, 16 * 6);
        assert!(FermionBasis::new(3, 1, ModeOrdering::Interleaved).is_err());
    }

    #[test]
    fn orderings_are_permutations() {
        for ord in [ModeOrdering::Interleaved, ModeOrdering::Reversed, ModeOrdering::Blocked] {
            let b = FermionBasis::new(2, 0, ord).unwrap();
            let mut pos: Vec<usize> = (0..2)
                .flat_map(|i| [b.position(Mode::alpha(i)), b.position(Mode::beta(i))])
                .collect();
            pos.sort();
            assert_eq!(pos, vec![0, 1, 2, 3]);
        }
    }

    #[test]
    fn jordan_wigner_sign() {
        // c†_0 c_2 on |0b110⟩: c_2 passes bit 1 (−1); c†_0 passes nothing
        assert_eq!(hop(0b110, 0, 2), Some((-1, 0b011)));
        assert_eq!(hop(0b110, 0, 0), None);
    }

    #[test]
    fn invalid_sector() {
        let s = ModelSpec::jaynes_cummings(1, 1.0f64, 1.0, 0.2);
        let b = FermionBasis::new(1, 2, ModeOrdering::Interleaved).unwrap();
        let h = build_fermion_hamiltonian(&s, &b).unwrap();
        assert!(matches!(sector_trace(&h, &b, 1.0, 3), Err(SchwingerError::InvalidSector { .. })));
    }
}
