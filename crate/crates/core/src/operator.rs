//! Dense complex square matrices with a cached Hermiticity class.
//!
//! Every generator, Hamiltonian and propagator in the crate is an
//! [`OperatorMatrix`]. Values are immutable once built; arithmetic returns new
//! matrices and reclassifies them.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{check_dim, domain, Result};

pub type C64 = Complex<f64>;

/// Absolute entrywise tolerance for the Hermitian / anti-Hermitian tests.
pub const HERMITICITY_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Hermiticity {
    Hermitian,
    AntiHermitian,
    Neither,
}

#[derive(Clone, PartialEq)]
pub struct OperatorMatrix {
    entries: DMatrix<C64>,
    hermitian: bool,
    anti_hermitian: bool,
}

impl OperatorMatrix {
    pub fn new(entries: DMatrix<C64>) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(domain(format!(
                "operator must be square, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        if entries.nrows() == 0 {
            return Err(domain("operator dimension must be positive"));
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(domain("operator entries must be finite"));
        }
        Ok(Self::classify(entries))
    }

    fn classify(entries: DMatrix<C64>) -> Self {
        let n = entries.nrows();
        let mut hermitian = true;
        let mut anti_hermitian = true;
        for i in 0..n {
            for j in i..n {
                let a = entries[(i, j)];
                let b = entries[(j, i)].conj();
                if (a - b).norm() > HERMITICITY_TOL {
                    hermitian = false;
                }
                if (a + b).norm() > HERMITICITY_TOL {
                    anti_hermitian = false;
                }
            }
        }
        Self {
            entries,
            hermitian,
            anti_hermitian,
        }
    }

    /// Row-major constructor.
    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let n = rows.len();
        for r in rows {
            check_dim(n, r.len())?;
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn identity(dim: usize) -> Self {
        Self::classify(DMatrix::identity(dim, dim))
    }

    pub fn zeros(dim: usize) -> Self {
        Self::classify(DMatrix::zeros(dim, dim))
    }

    pub fn from_diagonal(diag: &[C64]) -> Self {
        Self::classify(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<C64> {
        &self.entries
    }

    pub fn into_entries(self) -> DMatrix<C64> {
        self.entries
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.entries[(row, col)]
    }

    /// Hermitian wins when both tests pass (the zero matrix).
    pub fn hermiticity(&self) -> Hermiticity {
        if self.hermitian {
            Hermiticity::Hermitian
        } else if self.anti_hermitian {
            Hermiticity::AntiHermitian
        } else {
            Hermiticity::Neither
        }
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn is_anti_hermitian(&self) -> bool {
        self.anti_hermitian
    }

    pub fn adjoint(&self) -> Self {
        Self::classify(self.entries.adjoint())
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::classify(&self.entries * C64::new(s, 0.0))
    }

    pub fn scale_complex(&self, s: C64) -> Self {
        Self::classify(&self.entries * s)
    }

    pub fn trace(&self) -> C64 {
        self.entries.trace()
    }

    /// `sqrt(Re tr(X† X))`.
    pub fn frobenius_norm(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Real inner product `Re tr(X† Y)`.
    pub fn real_inner(&self, other: &Self) -> Result<f64> {
        check_dim(self.dim(), other.dim())?;
        Ok(self
            .entries
            .iter()
            .zip(other.entries.iter())
            .map(|(x, y)| x.re * y.re + x.im * y.im)
            .sum())
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim(), other.dim(), "max_abs_diff on unequal dims");
        self.entries
            .iter()
            .zip(other.entries.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn max_off_diagonal(&self) -> f64 {
        let n = self.dim();
        let mut m = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    m = m.max(self.entries[(i, j)].norm());
                }
            }
        }
        m
    }

    pub fn is_diagonal(&self, tol: f64) -> bool {
        self.max_off_diagonal() <= tol
    }

    pub fn diagonal(&self) -> Vec<C64> {
        self.entries.diagonal().iter().copied().collect()
    }

    pub fn kron(&self, other: &Self) -> Self {
        Self::classify(self.entries.kronecker(&other.entries))
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        check_dim(self.dim(), other.dim())?;
        Ok(Self::classify(&self.entries * &other.entries))
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        check_dim(self.dim(), other.dim())?;
        Ok(Self::classify(&self.entries + &other.entries))
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        check_dim(self.dim(), other.dim())?;
        Ok(Self::classify(&self.entries - &other.entries))
    }

    pub fn apply(&self, v: &DVector<C64>) -> Result<DVector<C64>> {
        check_dim(self.dim(), v.len())?;
        Ok(&self.entries * v)
    }

    /// Real coordinates (real parts then imaginary parts, column-major),
    /// under which `Re tr(X† Y)` is the Euclidean dot product.
    pub(crate) fn real_coords(&self) -> Vec<f64> {
        self.entries
            .iter()
            .map(|z| z.re)
            .chain(self.entries.iter().map(|z| z.im))
            .collect()
    }

    pub(crate) fn from_real_coords(dim: usize, coords: &[f64]) -> Self {
        let nn = dim * dim;
        debug_assert_eq!(coords.len(), 2 * nn);
        Self::classify(DMatrix::from_iterator(
            dim,
            dim,
            (0..nn).map(|k| C64::new(coords[k], coords[nn + k])),
        ))
    }
}

impl fmt::Debug for OperatorMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "OperatorMatrix({:?}) ", self.hermiticity())?;
        fmt::Display::fmt(&self.entries, f)
    }
}

// Panicking operators for internal use on matrices already known to agree in
// dimension. Public fallible variants are the `try_*` methods.
impl Mul for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn mul(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        assert_eq!(self.dim(), rhs.dim(), "operator product dimension mismatch");
        OperatorMatrix::classify(&self.entries * &rhs.entries)
    }
}

impl Add for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn add(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        assert_eq!(self.dim(), rhs.dim(), "operator sum dimension mismatch");
        OperatorMatrix::classify(&self.entries + &rhs.entries)
    }
}

impl Sub for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn sub(self, rhs: &OperatorMatrix) -> OperatorMatrix {
        assert_eq!(self.dim(), rhs.dim(), "operator difference dimension mismatch");
        OperatorMatrix::classify(&self.entries - &rhs.entries)
    }
}

impl Neg for &OperatorMatrix {
    type Output = OperatorMatrix;
    fn neg(self) -> OperatorMatrix {
        OperatorMatrix::classify(-&self.entries)
    }
}

/// Serialized as a row-major array of rows, each entry a `[re, im]` pair.
impl Serialize for OperatorMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let n = self.dim();
        let rows: Vec<Vec<[f64; 2]>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let z = self.entries[(i, j)];
                        [z.re, z.im]
                    })
                    .collect()
            })
            .collect();
        rows.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for OperatorMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let rows: Vec<Vec<[f64; 2]>> = Vec::deserialize(deserializer)?;
        let rows: Vec<Vec<C64>> = rows
            .into_iter()
            .map(|r| r.into_iter().map(|[re, im]| C64::new(re, im)).collect())
            .collect();
        OperatorMatrix::from_rows(&rows).map_err(D::Error::custom)
    }
}
