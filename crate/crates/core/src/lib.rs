//! Numerical laboratory for superradiant transitions in spin-boson models.
//!
//! The physics modules are generic over [`scalar::Real`] (`f32` or `f64`);
//! the aliases below fix the scalar to `f64`, or `f32` where marked.

pub mod boundary;
pub mod effective_action;
pub mod eigensolve;
pub mod landau;
pub mod models;
pub mod scalar;
pub mod schwinger;
pub mod sparse;
pub mod special;

pub use scalar::{Beta, Real};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Any error raised by the library.
#[derive(Debug, thiserror::Error, PartialEq)]
pub enum Error {
    #[error(transparent)]
    Model(#[from] models::ModelError),
    #[error(transparent)]
    Solve(#[from] eigensolve::SolveError),
    #[error(transparent)]
    Cutoff(#[from] eigensolve::CutoffError),
    #[error(transparent)]
    Landau(#[from] landau::LandauError),
    #[error(transparent)]
    Action(#[from] effective_action::ActionError),
    #[error(transparent)]
    Schwinger(#[from] schwinger::SchwingerError),
    #[error(transparent)]
    Boundary(#[from] boundary::BoundaryError),
}

pub type BetaF64 = Beta<f64>;
pub type ModelSpecF64 = models::ModelSpec<f64>;
pub type ModelSpecF32 = models::ModelSpec<f32>;
pub type SparseOperatorF64 = sparse::SparseOperator<f64>;
pub type SpectrumF64 = eigensolve::SpectrumResult<f64>;
pub type ObservableSetF64 = eigensolve::ObservableSet<f64>;
pub type ClassicalFieldF64 = landau::ClassicalField<f64>;
pub type LandauCoefficientsF64 = landau::LandauCoefficients<f64>;
pub type ExponentFitF64 = landau::ExponentFit<f64>;
pub type ChiCoefficientF64 = effective_action::ChiCoefficient<f64>;
pub type BoundaryResultF64 = boundary::BoundaryResult<f64>;
pub type PartitionIdentityF64 = schwinger::PartitionIdentity<f64>;
