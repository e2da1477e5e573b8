//! Closed-form phase boundaries and the classicality gauge.
//!
//! Every family reduces to
//! ω_c = (1/N) Σᵢ (|g₁ᵢ| + |g₂ᵢ|)² tanh(βΩᵢ/2)/Ωᵢ + κN tanh(βΩ/2),
//! with (g₁ᵢ, g₂ᵢ) the rotating and counter-rotating amplitudes of atom i.

use serde::Serialize;
use thiserror::Error;

use crate::models::{Family, ModelError, ModelSpec};
use crate::scalar::{Beta, Real};

#[derive(Debug, Error, PartialEq)]
pub enum BoundaryError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("invalid inverse temperature")]
    InvalidBeta,
    #[error("omega must be positive and finite")]
    InvalidOmega,
    #[error("a single critical g is undefined for {0:?}")]
    NoSingleCoupling(Family),
    #[error("the model has no atom-field coupling to scale")]
    NoCoupling,
}

/// Outcome of inverting the boundary for a coupling.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum CriticalCoupling<T> {
    Value(T),
    /// The κ term alone already exceeds ω: superradiant at any coupling.
    AlwaysSuperradiant,
}

impl<T: Real> CriticalCoupling<T> {
    pub fn value(self) -> Option<T> {
        match self {
            CriticalCoupling::Value(g) => Some(g),
            CriticalCoupling::AlwaysSuperradiant => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound(serialize = "T: Real"))]
pub struct BoundaryResult<T> {
    pub family: Family,
    pub beta: Beta<T>,
    pub critical_omega: T,
    /// Part of ω_c coming from the atom-field couplings.
    pub coupling_part: T,
    /// Part of ω_c coming from the κ b†b σᶻ term.
    pub kappa_part: T,
    /// g_c at the spec's ω, where a single g is defined.
    pub critical_g: Option<CriticalCoupling<T>>,
    pub classicality: T,
}

fn check<T: Real>(spec: &ModelSpec<T>, beta: Beta<T>) -> Result<(), BoundaryError> {
    spec.validate()?;
    if !beta.is_valid() {
        return Err(BoundaryError::InvalidBeta);
    }
    Ok(())
}

/// (1/N) Σᵢ (|g₁ᵢ| + |g₂ᵢ|)² tanh(βΩᵢ/2)/Ωᵢ.
pub fn coupling_contribution<T: Real>(spec: &ModelSpec<T>, beta: Beta<T>) -> T {
    let sum: T = (0..spec.n_atoms)
        .map(|i| {
            let (g1, g2) = spec.rotating_counter(i);
            let om = spec.atom_splittings[i];
            let g = g1.abs() + g2.abs();
            g * g * beta.tanh_half(om) / om
        })
        .sum();
    sum / spec.n()
}

/// κN tanh(βΩ/2); zero outside the κ family.
pub fn kappa_contribution<T: Real>(spec: &ModelSpec<T>, beta: Beta<T>) -> T {
    if spec.family != Family::NonlinearKappa {
        return T::zero();
    }
    spec.kappa_value() * spec.n() * beta.tanh_half(spec.splitting())
}

pub fn critical_omega<T: Real>(
    spec: &ModelSpec<T>,
    beta: Beta<T>,
) -> Result<BoundaryResult<T>, BoundaryError> {
    check(spec, beta)?;
    let coupling_part = coupling_contribution(spec, beta);
    let kappa_part = kappa_contribution(spec, beta);
    let critical_g = match critical_g(spec, beta, spec.omega) {
        Ok(g) => Some(g),
        Err(BoundaryError::NoSingleCoupling(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(BoundaryResult {
        family: spec.family,
        beta,
        critical_omega: coupling_part + kappa_part,
        coupling_part,
        kappa_part,
        critical_g,
        classicality: classicality(spec),
    })
}

/// Inverts the boundary for the shared coupling g at frequency `omega`.
///
/// Defined for JC, Dicke and κ models, and for the anisotropic family on
/// its unified lines g₁ = g₂ (returned g is g₁ = g₂) and g₂ = 0.
pub fn critical_g<T: Real>(
    spec: &ModelSpec<T>,
    beta: Beta<T>,
    omega: T,
) -> Result<CriticalCoupling<T>, BoundaryError> {
    check(spec, beta)?;
    if !(omega.is_finite() && omega > T::zero()) {
        return Err(BoundaryError::InvalidOmega);
    }
    let eta = match (spec.family, spec.eta()) {
        (Family::Inhomogeneous, _) | (_, None) => {
            return Err(BoundaryError::NoSingleCoupling(spec.family))
        }
        (_, Some(e)) => T::from_u32(e).unwrap(),
    };
    let om = spec.splitting();
    let t = beta.tanh_half(om);
    let radicand = omega * om / t - spec.kappa_value() * spec.n() * om;
    if radicand <= T::zero() {
        return Ok(CriticalCoupling::AlwaysSuperradiant);
    }
    Ok(CriticalCoupling::Value(radicand.sqrt() / eta))
}

/// Factor s_c by which all couplings must be scaled to put the spec's ω on
/// the boundary.
pub fn critical_coupling_scale<T: Real>(
    spec: &ModelSpec<T>,
    beta: Beta<T>,
) -> Result<CriticalCoupling<T>, BoundaryError> {
    check(spec, beta)?;
    let a = coupling_contribution(spec, beta);
    if a == T::zero() {
        return Err(BoundaryError::NoCoupling);
    }
    let rest = spec.omega - kappa_contribution(spec, beta);
    if rest <= T::zero() {
        return Ok(CriticalCoupling::AlwaysSuperradiant);
    }
    Ok(CriticalCoupling::Value((rest / a).sqrt()))
}

/// Smallness parameter of the classical-field limit.
///
/// ω/(NΩ) for homogeneous families; (1/N²) Σᵢ gᵢ²/Ωᵢ² for inhomogeneous
/// atoms, which equals ω_c/(NΩ) in the identical-atom case.
pub fn classicality<T: Real>(spec: &ModelSpec<T>) -> T {
    let n = spec.n();
    match spec.family {
        Family::Inhomogeneous => {
            let s: T = spec
                .couplings
                .iter()
                .zip(&spec.atom_splittings)
                .map(|(&g, &o)| (g / o) * (g / o))
                .sum();
            s / (n * n)
        }
        _ => spec.omega / (n * spec.splitting()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jc_unit_boundary() {
        let s = ModelSpec::jaynes_cummings(1, 1.0f64, 1.0, 1.0);
        let r = critical_omega(&s, Beta::Infinite).unwrap();
        assert_eq!(r.critical_omega, 1.0);
        assert_eq!(r.critical_g, Some(CriticalCoupling::Value(1.0)));
    }

    #[test]
    fn dicke_inversion() {
        let s = ModelSpec::dicke(1, 1.0f64, 100.0, 0.0);
        let g = critical_g(&s, Beta::Infinite, 1.0).unwrap().value().unwrap();
        assert!((g - 5.0).abs() < 1e-14);
    }

    #[test]
    fn kappa_can_be_always_superradiant() {
        let s = ModelSpec::nonlinear_kappa(2, 0.5f64, 1.0, 0.3, 1.0);
        assert_eq!(critical_g(&s, Beta::Infinite, 0.5).unwrap(), CriticalCoupling::AlwaysSuperradiant);
    }

    #[test]
    fn inhomogeneous_has_no_single_g() {
        let s = ModelSpec::inhomogeneous(1.0f64, vec![1.0, 2.0], vec![0.1, 0.2]);
        assert!(matches!(critical_g(&s, Beta::Infinite, 1.0), Err(BoundaryError::NoSingleCoupling(_))));
        assert!(critical_omega(&s, Beta::Infinite).unwrap().critical_g.is_none());
    }

    #[test]
    fn invalid_beta_rejected() {
        let s = ModelSpec::jaynes_cummings(1, 1.0f64, 1.0, 1.0);
        assert_eq!(critical_omega(&s, Beta::Finite(-1.0)).unwrap_err(), BoundaryError::InvalidBeta);
    }
}
