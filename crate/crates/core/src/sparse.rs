//! Compressed-row complex operators on a truncated Hilbert space.

use std::collections::BTreeMap;

use num_complex::Complex;
use num_traits::Zero;

use crate::scalar::Real;

/// Immutable CSR matrix with complex entries and no stored zeros.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseOperator<T> {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    values: Vec<Complex<T>>,
    hermitian: bool,
}

impl<T: Real> SparseOperator<T> {
    /// Assembles from `(row, col, value)` triplets. Duplicates are summed and
    /// entries that cancel to exactly zero are dropped.
    pub fn from_triplets(
        dim: usize,
        triplets: impl IntoIterator<Item = (usize, usize, Complex<T>)>,
        hermitian: bool,
    ) -> Self {
        let mut acc: BTreeMap<(usize, usize), Complex<T>> = BTreeMap::new();
        for (r, c, v) in triplets {
            assert!(r < dim && c < dim, "entry ({r}, {c}) outside dimension {dim}");
            *acc.entry((r, c)).or_insert_with(Complex::zero) += v;
        }
        let mut row_ptr = vec![0usize; dim + 1];
        let mut cols = Vec::with_capacity(acc.len());
        let mut values = Vec::with_capacity(acc.len());
        for ((r, c), v) in acc {
            if v.is_zero() {
                continue;
            }
            row_ptr[r + 1] += 1;
            cols.push(c);
            values.push(v);
        }
        for r in 0..dim {
            row_ptr[r + 1] += row_ptr[r];
        }
        let op = SparseOperator { dim, row_ptr, cols, values, hermitian };
        debug_assert!(!hermitian || dim > 512 || op.is_hermitian_exact());
        op
    }

    pub fn identity(dim: usize) -> Self {
        Self::diagonal((0..dim).map(|_| T::one()))
    }

    /// Real diagonal operator.
    pub fn diagonal(diag: impl IntoIterator<Item = T>) -> Self {
        let diag: Vec<T> = diag.into_iter().collect();
        let dim = diag.len();
        Self::from_triplets(
            dim,
            diag.into_iter().enumerate().map(|(i, d)| (i, i, Complex::new(d, T::zero()))),
            true,
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, Complex<T>)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.cols[span.clone()].iter().copied().zip(self.values[span].iter().copied())
    }

    /// All stored entries in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, Complex<T>)> + '_ {
        (0..self.dim).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn get(&self, r: usize, c: usize) -> Complex<T> {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.cols[span.clone()].binary_search(&c) {
            Ok(k) => self.values[span.start + k],
            Err(_) => Complex::zero(),
        }
    }

    /// Diagonal as real numbers (imaginary parts dropped).
    pub fn real_diagonal(&self) -> Vec<T> {
        (0..self.dim).map(|i| self.get(i, i).re).collect()
    }

    pub fn apply(&self, v: &[Complex<T>]) -> Vec<Complex<T>> {
        let mut out = vec![Complex::zero(); self.dim];
        self.apply_into(v, &mut out);
        out
    }

    pub fn apply_into(&self, v: &[Complex<T>], out: &mut [Complex<T>]) {
        assert_eq!(v.len(), self.dim);
        for (r, o) in out.iter_mut().enumerate() {
            let mut s = Complex::zero();
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                s += self.values[k] * v[self.cols[k]];
            }
            *o = s;
        }
    }

    /// ⟨v|A|v⟩ (no normalization).
    pub fn expectation(&self, v: &[Complex<T>]) -> Complex<T> {
        let av = self.apply(v);
        v.iter().zip(&av).fold(Complex::zero(), |acc, (a, b)| acc + a.conj() * b)
    }

    /// Dense row-major copy.
    pub fn to_dense(&self) -> Vec<Complex<T>> {
        let mut d = vec![Complex::zero(); self.dim * self.dim];
        for (r, c, v) in self.entries() {
            d[r * self.dim + c] = v;
        }
        d
    }

    pub fn adjoint(&self) -> Self {
        Self::from_triplets(
            self.dim,
            self.entries().map(|(r, c, v)| (c, r, v.conj())),
            self.hermitian,
        )
    }

    /// Entry-by-entry check that the operator equals its adjoint.
    pub fn is_hermitian_exact(&self) -> bool {
        self.entries().all(|(r, c, v)| self.get(c, r) == v.conj())
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.dim, rhs.dim);
        let mut trip = Vec::new();
        for r in 0..self.dim {
            let mut row: BTreeMap<usize, Complex<T>> = BTreeMap::new();
            for (k, a) in self.row(r) {
                for (c, b) in rhs.row(k) {
                    *row.entry(c).or_insert_with(Complex::zero) += a * b;
                }
            }
            trip.extend(row.into_iter().map(|(c, v)| (r, c, v)));
        }
        Self::from_triplets(self.dim, trip, false)
    }

    pub fn add(&self, rhs: &Self) -> Self {
        assert_eq!(self.dim, rhs.dim);
        Self::from_triplets(
            self.dim,
            self.entries().chain(rhs.entries()),
            self.hermitian && rhs.hermitian,
        )
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        assert_eq!(self.dim, rhs.dim);
        Self::from_triplets(
            self.dim,
            self.entries().chain(rhs.entries().map(|(r, c, v)| (r, c, -v))),
            self.hermitian && rhs.hermitian,
        )
    }

    /// [A, B] = AB − BA.
    pub fn commutator(&self, rhs: &Self) -> Self {
        self.matmul(rhs).sub(&rhs.matmul(self))
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.norm()))
    }

    /// Largest |entry| among rows and columns accepted by `keep`.
    pub fn max_abs_where(&self, keep: impl Fn(usize) -> bool) -> T {
        self.entries()
            .filter(|&(r, c, _)| keep(r) && keep(c))
            .fold(T::zero(), |m, (_, _, v)| m.max(v.norm()))
    }

    /// Max absolute row sum; bounds the spectral norm from above.
    pub fn norm_bound(&self) -> T {
        (0..self.dim)
            .map(|r| self.row(r).fold(T::zero(), |s, (_, v)| s + v.norm()))
            .fold(T::zero(), T::max)
    }

    /// Principal submatrix on `indices` (in the given order).
    pub fn restrict(&self, indices: &[usize]) -> Self {
        let mut position = vec![usize::MAX; self.dim];
        for (k, &i) in indices.iter().enumerate() {
            position[i] = k;
        }
        let trip = indices.iter().enumerate().flat_map(|(k, &i)| {
            let position = &position;
            self.row(i).filter_map(move |(c, v)| {
                let p = position[c];
                (p != usize::MAX).then_some((k, p, v))
            })
        });
        Self::from_triplets(indices.len(), trip.collect::<Vec<_>>(), self.hermitian)
    }
}
