//! Scalar abstraction shared by every numerical module.
//!
//! All physics is written against [`Real`], which is implemented for `f32` and
//! `f64`. Dense Hermitian diagonalization is a per-type hook so the generic
//! code never has to name a linear-algebra backend.

use std::fmt::{self, Debug, Display};
use std::iter::Sum;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};
use serde::de::{self, DeserializeOwned, Deserializer};
use serde::{Deserialize, Serialize, Serializer};

mod sealed {
    pub trait Sealed {}
    impl Sealed for f32 {}
    impl Sealed for f64 {}
}

/// Real floating-point scalar: `f32` or `f64`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + NumAssign
    + Debug
    + Display
    + Default
    + Sum
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
    + sealed::Sealed
{
    /// Full eigendecomposition of a dense Hermitian matrix given row-major.
    ///
    /// Eigenvalues come back ascending; eigenvector `k` occupies
    /// `vectors[k * dim..(k + 1) * dim]`.
    fn hermitian_eigh(dim: usize, row_major: &[Complex<Self>]) -> (Vec<Self>, Vec<Complex<Self>>);

    /// Same as [`Real::hermitian_eigh`] for a real symmetric matrix.
    fn symmetric_eigh(dim: usize, row_major: &[Self]) -> (Vec<Self>, Vec<Self>);

    /// Ascending eigenvalues only.
    fn hermitian_eigvals(dim: usize, row_major: &[Complex<Self>]) -> Vec<Self>;

    /// Ascending eigenvalues only.
    fn symmetric_eigvals(dim: usize, row_major: &[Self]) -> Vec<Self>;
}

macro_rules! impl_real {
    ($t:ty) => {
        impl Real for $t {
            fn hermitian_eigh(
                dim: usize,
                row_major: &[Complex<Self>],
            ) -> (Vec<Self>, Vec<Complex<Self>>) {
                let m = DMatrix::from_row_slice(dim, dim, row_major);
                let eig = SymmetricEigen::new(m);
                sorted_columns(dim, eig.eigenvalues.as_slice(), |r, c| eig.eigenvectors[(r, c)])
            }

            fn symmetric_eigh(dim: usize, row_major: &[Self]) -> (Vec<Self>, Vec<Self>) {
                let m = DMatrix::from_row_slice(dim, dim, row_major);
                let eig = SymmetricEigen::new(m);
                sorted_columns(dim, eig.eigenvalues.as_slice(), |r, c| eig.eigenvectors[(r, c)])
            }

            fn hermitian_eigvals(dim: usize, row_major: &[Complex<Self>]) -> Vec<Self> {
                let m = DMatrix::from_row_slice(dim, dim, row_major);
                sorted(m.symmetric_eigenvalues().as_slice())
            }

            fn symmetric_eigvals(dim: usize, row_major: &[Self]) -> Vec<Self> {
                let m = DMatrix::from_row_slice(dim, dim, row_major);
                sorted(m.symmetric_eigenvalues().as_slice())
            }
        }
    };
}

impl_real!(f32);
impl_real!(f64);

fn sorted_columns<R: Float, E: Copy>(
    dim: usize,
    values: &[R],
    entry: impl Fn(usize, usize) -> E,
) -> (Vec<R>, Vec<E>) {
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(std::cmp::Ordering::Equal));
    let evals = order.iter().map(|&k| values[k]).collect();
    let mut evecs = Vec::with_capacity(dim * dim);
    for &k in &order {
        evecs.extend((0..dim).map(|r| entry(r, k)));
    }
    (evals, evecs)
}

fn sorted<R: Float>(values: &[R]) -> Vec<R> {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    v
}

/// Converts an `f64` literal into the working scalar.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("literal representable in the scalar type")
}

#[inline]
pub(crate) fn from_usize<T: Real>(n: usize) -> T {
    T::from_usize(n).expect("count representable in the scalar type")
}

/// Inverse temperature β, with an explicit zero-temperature sentinel.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Beta<T> {
    Finite(T),
    /// β = ∞, i.e. the ground-state limit.
    Infinite,
}

impl<T: Real> Beta<T> {
    /// Maps a temperature to β; `T = 0` is the ground-state sentinel.
    pub fn from_temperature(temperature: T) -> Self {
        if temperature == T::zero() {
            Beta::Infinite
        } else {
            Beta::Finite(temperature.recip())
        }
    }

    pub fn value(self) -> Option<T> {
        match self {
            Beta::Finite(b) => Some(b),
            Beta::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Beta::Infinite)
    }

    /// True for β = ∞ or a finite strictly positive β.
    pub fn is_valid(self) -> bool {
        match self {
            Beta::Finite(b) => b.is_finite() && b > T::zero(),
            Beta::Infinite => true,
        }
    }

    /// tanh(β·e/2), evaluated symbolically as sign(e) at β = ∞.
    pub fn tanh_half(self, energy: T) -> T {
        match self {
            Beta::Finite(b) => (b * energy / lit(2.0)).tanh(),
            Beta::Infinite => {
                if energy > T::zero() {
                    T::one()
                } else if energy < T::zero() {
                    -T::one()
                } else {
                    T::zero()
                }
            }
        }
    }

    /// Temperature 1/β (zero at the sentinel).
    pub fn temperature(self) -> T {
        match self {
            Beta::Finite(b) => b.recip(),
            Beta::Infinite => T::zero(),
        }
    }
}

impl<T: Real> Display for Beta<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Beta::Finite(b) => write!(f, "{b}"),
            Beta::Infinite => f.write_str("inf"),
        }
    }
}

impl<T: Real> Serialize for Beta<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Beta::Finite(b) => b.serialize(serializer),
            Beta::Infinite => serializer.serialize_str("inf"),
        }
    }
}

impl<'de, T: Real> Deserialize<'de> for Beta<T> {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Number(f64),
            Text(String),
        }
        match Repr::deserialize(deserializer)? {
            Repr::Number(b) if b.is_infinite() && b > 0.0 => Ok(Beta::Infinite),
            Repr::Number(b) if b.is_finite() && b > 0.0 => Ok(Beta::Finite(lit(b))),
            Repr::Number(b) => Err(de::Error::custom(format!("beta must be positive, got {b}"))),
            Repr::Text(s) if matches!(s.as_str(), "inf" | "infinity" | "Infinity") => {
                Ok(Beta::Infinite)
            }
            Repr::Text(s) => Err(de::Error::custom(format!(
                "beta must be a positive number or \"inf\", got {s:?}"
            ))),
        }
    }
}
