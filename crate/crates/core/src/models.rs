//! Model families and their Hamiltonians on the truncated spin ⊗ boson space.
//!
//! Basis ordering is boson-major: `index = fock · 2^N + spin_mask`, where bit
//! `i` of `spin_mask` set means σᶻᵢ = +1.

use num_complex::Complex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::{from_usize, lit, Real};
use crate::sparse::SparseOperator;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("n_atoms must be at least 1")]
    NoAtoms,
    #[error("{field} has length {got}, expected {expected}")]
    Length { field: &'static str, got: usize, expected: usize },
    #[error("{field} must be finite")]
    NonFinite { field: &'static str },
    #[error("{field} must be positive")]
    NonPositive { field: &'static str },
    #[error("{family:?} requires identical entries in {field}")]
    Inhomogeneous { family: Family, field: &'static str },
    #[error("{family:?} requires field {field}")]
    Missing { family: Family, field: &'static str },
    #[error("field {field} is not used by {family:?}")]
    Unexpected { family: Family, field: &'static str },
    #[error("basis has {basis} atoms but the model has {model}")]
    BasisMismatch { basis: usize, model: usize },
    #[error("Hilbert-space dimension overflows usize")]
    DimensionOverflow,
    #[error("{0} atoms exceed the spin bitmask width")]
    TooManyAtoms(usize),
}

/// The five spin-boson families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    #[serde(alias = "jaynes_cummings")]
    JaynesCummings,
    #[serde(alias = "dicke")]
    Dicke,
    #[serde(alias = "anisotropic_rabi_hubbard")]
    AnisotropicRabiHubbard,
    #[serde(alias = "inhomogeneous")]
    Inhomogeneous,
    #[serde(alias = "nonlinear_kappa")]
    NonlinearKappa,
}

impl Family {
    pub const ALL: [Family; 5] = [
        Family::JaynesCummings,
        Family::Dicke,
        Family::AnisotropicRabiHubbard,
        Family::Inhomogeneous,
        Family::NonlinearKappa,
    ];

    /// Families whose coupling conserves the excitation number.
    pub fn is_rotating_wave(self) -> bool {
        matches!(self, Family::JaynesCummings | Family::Inhomogeneous | Family::NonlinearKappa)
    }

    /// Families with a single shared Ω and g.
    pub fn is_homogeneous(self) -> bool {
        !matches!(self, Family::Inhomogeneous)
    }
}

/// Complete description of one spin-boson model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec<T> {
    pub family: Family,
    pub n_atoms: usize,
    /// Boson frequency ω.
    pub omega: T,
    /// Atomic splittings Ωᵢ, one per atom.
    pub atom_splittings: Vec<T>,
    /// Couplings gᵢ, one per atom. Empty for the anisotropic family.
    #[serde(default)]
    pub couplings: Vec<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g_rotating: Option<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g_counter: Option<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hubbard_u: Option<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<T>,
}

impl<T: Real> ModelSpec<T> {
    fn homogeneous(family: Family, n: usize, omega: T, splitting: T, g: T) -> Self {
        ModelSpec {
            family,
            n_atoms: n,
            omega,
            atom_splittings: vec![splitting; n],
            couplings: vec![g; n],
            g_rotating: None,
            g_counter: None,
            hubbard_u: None,
            kappa: None,
        }
    }

    pub fn jaynes_cummings(n: usize, omega: T, splitting: T, g: T) -> Self {
        Self::homogeneous(Family::JaynesCummings, n, omega, splitting, g)
    }

    pub fn dicke(n: usize, omega: T, splitting: T, g: T) -> Self {
        Self::homogeneous(Family::Dicke, n, omega, splitting, g)
    }

    pub fn anisotropic(n: usize, omega: T, splitting: T, g_rotating: T, g_counter: T, u: T) -> Self {
        ModelSpec {
            family: Family::AnisotropicRabiHubbard,
            n_atoms: n,
            omega,
            atom_splittings: vec![splitting; n],
            couplings: Vec::new(),
            g_rotating: Some(g_rotating),
            g_counter: Some(g_counter),
            hubbard_u: Some(u),
            kappa: None,
        }
    }

    pub fn inhomogeneous(omega: T, splittings: Vec<T>, couplings: Vec<T>) -> Self {
        ModelSpec {
            family: Family::Inhomogeneous,
            n_atoms: splittings.len(),
            omega,
            atom_splittings: splittings,
            couplings,
            g_rotating: None,
            g_counter: None,
            hubbard_u: None,
            kappa: None,
        }
    }

    pub fn nonlinear_kappa(n: usize, omega: T, splitting: T, g: T, kappa: T) -> Self {
        let mut s = Self::homogeneous(Family::NonlinearKappa, n, omega, splitting, g);
        s.kappa = Some(kappa);
        s
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let fam = self.family;
        let n = self.n_atoms;
        if n == 0 {
            return Err(ModelError::NoAtoms);
        }
        check_positive("omega", self.omega)?;
        if self.atom_splittings.len() != n {
            return Err(ModelError::Length {
                field: "atom_splittings",
                got: self.atom_splittings.len(),
                expected: n,
            });
        }
        for &s in &self.atom_splittings {
            check_positive("atom_splittings", s)?;
        }
        let needs_couplings = fam != Family::AnisotropicRabiHubbard;
        let expected = if needs_couplings { n } else { 0 };
        if self.couplings.len() != expected {
            return Err(ModelError::Length {
                field: "couplings",
                got: self.couplings.len(),
                expected,
            });
        }
        for &g in &self.couplings {
            check_finite("couplings", g)?;
        }
        if fam.is_homogeneous() {
            if !all_equal(&self.atom_splittings) {
                return Err(ModelError::Inhomogeneous { family: fam, field: "atom_splittings" });
            }
            if !all_equal(&self.couplings) {
                return Err(ModelError::Inhomogeneous { family: fam, field: "couplings" });
            }
        }
        let aniso = fam == Family::AnisotropicRabiHubbard;
        let kappa = fam == Family::NonlinearKappa;
        for (field, value, wanted) in [
            ("g_rotating", self.g_rotating, aniso),
            ("g_counter", self.g_counter, aniso),
            ("kappa", self.kappa, kappa),
        ] {
            match (value, wanted) {
                (None, true) => return Err(ModelError::Missing { family: fam, field }),
                (Some(_), false) => return Err(ModelError::Unexpected { family: fam, field }),
                (Some(v), true) => check_finite(field, v)?,
                (None, false) => {}
            }
        }
        match (self.hubbard_u, aniso) {
            (Some(_), false) => {
                return Err(ModelError::Unexpected { family: fam, field: "hubbard_u" })
            }
            (Some(u), true) => {
                check_finite("hubbard_u", u)?;
                if u < T::zero() {
                    return Err(ModelError::NonPositive { field: "hubbard_u" });
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// η = 1 with the rotating-wave approximation, 2 without it.
    ///
    /// For the anisotropic family η is only defined on the unified lines
    /// g₁ = g₂ (η = 2) and g₂ = 0 (η = 1).
    pub fn eta(&self) -> Option<u32> {
        match self.family {
            Family::JaynesCummings | Family::Inhomogeneous | Family::NonlinearKappa => Some(1),
            Family::Dicke => Some(2),
            Family::AnisotropicRabiHubbard => {
                let (g1, g2) = (self.g_rotating?, self.g_counter?);
                if g1 == g2 {
                    Some(2)
                } else if g2 == T::zero() {
                    Some(1)
                } else {
                    None
                }
            }
        }
    }

    pub fn n(&self) -> T {
        from_usize(self.n_atoms)
    }

    /// Shared Ω of a homogeneous family (first entry otherwise).
    pub fn splitting(&self) -> T {
        self.atom_splittings[0]
    }

    /// Shared g of JC, Dicke and κ models.
    pub fn g(&self) -> Option<T> {
        match self.family {
            Family::JaynesCummings | Family::Dicke | Family::NonlinearKappa => {
                self.couplings.first().copied()
            }
            _ => None,
        }
    }

    pub fn hubbard(&self) -> T {
        self.hubbard_u.unwrap_or_else(T::zero)
    }

    pub fn kappa_value(&self) -> T {
        self.kappa.unwrap_or_else(T::zero)
    }

    /// Rotating and counter-rotating amplitudes of atom `i`.
    pub fn rotating_counter(&self, i: usize) -> (T, T) {
        match self.family {
            Family::AnisotropicRabiHubbard => (
                self.g_rotating.unwrap_or_else(T::zero),
                self.g_counter.unwrap_or_else(T::zero),
            ),
            Family::Dicke => (self.couplings[i], self.couplings[i]),
            _ => (self.couplings[i], T::zero()),
        }
    }

    pub fn with_omega(&self, omega: T) -> Self {
        ModelSpec { omega, ..self.clone() }
    }

    /// Multiplies every coupling (gᵢ, g₁, g₂) by `s`.
    pub fn with_coupling_scale(&self, s: T) -> Self {
        let mut out = self.clone();
        out.couplings.iter_mut().for_each(|g| *g = *g * s);
        out.g_rotating = out.g_rotating.map(|g| g * s);
        out.g_counter = out.g_counter.map(|g| g * s);
        out
    }

    /// Sets the shared coupling of a single-g family.
    pub fn with_g(&self, g: T) -> Self {
        let mut out = self.clone();
        out.couplings.iter_mut().for_each(|c| *c = g);
        out
    }

    /// The classical-limit scaling rule gᵢ → √λ gᵢ, Ωᵢ → λ Ωᵢ.
    pub fn lambda_scaled(&self, lambda: T) -> Self {
        let mut out = self.with_coupling_scale(lambda.sqrt());
        out.atom_splittings.iter_mut().for_each(|o| *o = *o * lambda);
        out
    }
}

fn check_finite<T: Real>(field: &'static str, v: T) -> Result<(), ModelError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(ModelError::NonFinite { field })
    }
}

fn check_positive<T: Real>(field: &'static str, v: T) -> Result<(), ModelError> {
    check_finite(field, v)?;
    if v > T::zero() {
        Ok(())
    } else {
        Err(ModelError::NonPositive { field })
    }
}

fn all_equal<T: PartialEq>(v: &[T]) -> bool {
    v.windows(2).all(|w| w[0] == w[1])
}

/// Truncated spin ⊗ boson basis.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BasisConfig {
    pub n_atoms: usize,
    pub fock_cutoff: usize,
    pub dim: usize,
}

impl BasisConfig {
    pub fn new(n_atoms: usize, fock_cutoff: usize) -> Result<Self, ModelError> {
        if n_atoms == 0 {
            return Err(ModelError::NoAtoms);
        }
        if n_atoms >= usize::BITS as usize {
            return Err(ModelError::TooManyAtoms(n_atoms));
        }
        let dim = fock_cutoff
            .checked_add(1)
            .and_then(|f| f.checked_mul(1usize << n_atoms))
            .ok_or(ModelError::DimensionOverflow)?;
        Ok(BasisConfig { n_atoms, fock_cutoff, dim })
    }

    pub fn spin_states(&self) -> usize {
        1 << self.n_atoms
    }

    pub fn index(&self, fock: usize, spins: usize) -> usize {
        fock * self.spin_states() + spins
    }

    pub fn fock(&self, index: usize) -> usize {
        index / self.spin_states()
    }

    pub fn spins(&self, index: usize) -> usize {
        index % self.spin_states()
    }

    /// Number of up spins, Σᵢ(σᶻᵢ+1)/2.
    pub fn up_count(&self, index: usize) -> usize {
        self.spins(index).count_ones() as usize
    }
}

pub fn build_basis(n_atoms: usize, fock_cutoff: usize) -> Result<BasisConfig, ModelError> {
    BasisConfig::new(n_atoms, fock_cutoff)
}

fn re<T: Real>(x: T) -> Complex<T> {
    Complex::new(x, T::zero())
}

/// Assembles the model Hamiltonian.
pub fn build_hamiltonian<T: Real>(
    spec: &ModelSpec<T>,
    basis: &BasisConfig,
) -> Result<SparseOperator<T>, ModelError> {
    spec.validate()?;
    if basis.n_atoms != spec.n_atoms {
        return Err(ModelError::BasisMismatch { basis: basis.n_atoms, model: spec.n_atoms });
    }
    let inv_sqrt_n = spec.n().sqrt().recip();
    let half = lit::<T>(0.5);
    let u = spec.hubbard();
    let kappa = spec.kappa_value();
    let mut trip = Vec::with_capacity(basis.dim * (1 + 2 * spec.n_atoms));

    for idx in 0..basis.dim {
        let n = basis.fock(idx);
        let mask = basis.spins(idx);
        let nf: T = from_usize(n);
        let mut diag = spec.omega * nf + u * nf * (nf - T::one());
        for i in 0..spec.n_atoms {
            let sz = if mask >> i & 1 == 1 { T::one() } else { -T::one() };
            diag += (spec.atom_splittings[i] * half + kappa * nf) * sz;
        }
        trip.push((idx, idx, re(diag)));

        // Terms lowering the boson number: b acting on |n⟩.
        if n == 0 {
            continue;
        }
        let amp = nf.sqrt();
        for i in 0..spec.n_atoms {
            let (g_rot, g_ctr) = spec.rotating_counter(i);
            let up = mask >> i & 1 == 1;
            let flipped = basis.index(n - 1, mask ^ (1 << i));
            // σ⁺ b (rotating) or σ⁻ b (counter-rotating), plus Hermitian conjugate
            let g = if up { g_ctr } else { g_rot } * inv_sqrt_n * amp;
            if g != T::zero() {
                trip.push((flipped, idx, re(g)));
                trip.push((idx, flipped, re(g)));
            }
        }
    }
    Ok(SparseOperator::from_triplets(basis.dim, trip, true))
}

/// Π = exp(iπ(b†b + Σᵢ(σᶻᵢ+1)/2)).
pub fn parity_operator<T: Real>(basis: &BasisConfig) -> SparseOperator<T> {
    SparseOperator::diagonal((0..basis.dim).map(|i| {
        if (basis.fock(i) + basis.up_count(i)) % 2 == 0 {
            T::one()
        } else {
            -T::one()
        }
    }))
}

/// b†b + Σᵢ(σᶻᵢ+1)/2.
pub fn excitation_operator<T: Real>(basis: &BasisConfig) -> SparseOperator<T> {
    SparseOperator::diagonal((0..basis.dim).map(|i| from_usize(basis.fock(i) + basis.up_count(i))))
}

/// b†b.
pub fn photon_number_operator<T: Real>(basis: &BasisConfig) -> SparseOperator<T> {
    SparseOperator::diagonal((0..basis.dim).map(|i| from_usize(basis.fock(i))))
}

/// Σᵢ σᶻᵢ.
pub fn collective_sz_operator<T: Real>(basis: &BasisConfig) -> SparseOperator<T> {
    SparseOperator::diagonal((0..basis.dim).map(|i| {
        let up: T = from_usize(basis.up_count(i));
        up + up - from_usize(basis.n_atoms)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basis_dimensions() {
        assert_eq!(build_basis(1, 3).unwrap().dim, 8);
        assert_eq!(build_basis(3, 100).unwrap().dim, 808);
        assert_eq!(build_basis(2, 0).unwrap().dim, 4);
        assert_eq!(build_basis(0, 3), Err(ModelError::NoAtoms));
        assert_eq!(build_basis(2, usize::MAX), Err(ModelError::DimensionOverflow));
        assert!(build_basis(40, usize::MAX >> 30).is_err());
    }

    #[test]
    fn basis_ordering_is_boson_major() {
        let b = build_basis(2, 3).unwrap();
        assert_eq!(b.index(2, 0b01), 9);
        assert_eq!(b.fock(9), 2);
        assert_eq!(b.spins(9), 0b01);
        assert_eq!(b.up_count(b.index(1, 0b11)), 2);
    }

    #[test]
    fn validation_rejects_bad_specs() {
        let mut s = ModelSpec::dicke(2, 1.0, 1.0, 0.5);
        assert!(s.validate().is_ok());
        s.atom_splittings = vec![1.0, 2.0];
        assert!(matches!(s.validate(), Err(ModelError::Inhomogeneous { .. })));
        let mut s = ModelSpec::dicke(2, 1.0, 1.0, 0.5);
        s.kappa = Some(0.1);
        assert!(matches!(s.validate(), Err(ModelError::Unexpected { field: "kappa", .. })));
        let mut s = ModelSpec::jaynes_cummings(1, f64::NAN, 1.0, 0.5);
        assert!(matches!(s.validate(), Err(ModelError::NonFinite { .. })));
        s.omega = -1.0;
        assert!(matches!(s.validate(), Err(ModelError::NonPositive { .. })));
        let s = ModelSpec::inhomogeneous(1.0, vec![1.0, 2.0], vec![0.1]);
        assert!(matches!(s.validate(), Err(ModelError::Length { .. })));
        let mut s = ModelSpec::anisotropic(1, 1.0, 1.0, 0.2, 0.3, 1.0);
        s.g_counter = None;
        assert!(matches!(s.validate(), Err(ModelError::Missing { .. })));
    }

    #[test]
    fn eta_is_derived() {
        assert_eq!(ModelSpec::jaynes_cummings(1, 1.0, 1.0, 1.0).eta(), Some(1));
        assert_eq!(ModelSpec::dicke(1, 1.0, 1.0, 1.0).eta(), Some(2));
        assert_eq!(ModelSpec::anisotropic(1, 1.0, 1.0, 0.3, 0.3, 0.0).eta(), Some(2));
        assert_eq!(ModelSpec::anisotropic(1, 1.0, 1.0, 0.3, 0.0, 0.0).eta(), Some(1));
        assert_eq!(ModelSpec::anisotropic(1, 1.0, 1.0, 0.3, 0.1, 0.0).eta(), None);
    }

    #[test]
    fn json_round_trip_and_unknown_fields() {
        let s = ModelSpec::nonlinear_kappa(1, 1.9, 100.0, 12.0, 0.5);
        let text = serde_json::to_string(&s).unwrap();
        let back: ModelSpec<f64> = serde_json::from_str(&text).unwrap();
        assert_eq!(back, s);
        let bad = text.replace("\"omega\"", "\"eta\":2,\"omega\"");
        assert!(serde_json::from_str::<ModelSpec<f64>>(&bad).is_err());
    }

    #[test]
    fn hubbard_term_is_n_times_n_minus_one() {
        let s = ModelSpec::anisotropic(1, 1.0, 2.0, 0.0, 0.0, 3.0);
        let b = build_basis(1, 4).unwrap();
        let h = build_hamiltonian(&s, &b).unwrap();
        // |n=3, down⟩: 3ω + 3·3·2 − Ω/2
        assert_eq!(h.get(b.index(3, 0), b.index(3, 0)).re, 3.0 + 18.0 - 1.0);
    }

    #[test]
    fn kappa_shifts_spin_splitting_with_photons() {
        let s = ModelSpec::nonlinear_kappa(1, 1.0, 2.0, 0.0, 0.25);
        let b = build_basis(1, 4).unwrap();
        let h = build_hamiltonian(&s, &b).unwrap();
        // |n=2, up⟩: 2ω + (Ω/2 + 2κ)
        assert_eq!(h.get(b.index(2, 1), b.index(2, 1)).re, 2.0 + 1.0 + 0.5);
    }
}
