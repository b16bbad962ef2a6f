//! Dense complex matrices, Hermitian eigendecomposition, and PSD powers.
//!
//! [`CMatrix`] is the workhorse value type for every operator in the crate:
//! observables, states, POVM elements, frame elements, unitaries. Matrices
//! are immutable after construction; all arithmetic produces new values.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::tolerances::{HERMITIAN_TOL, PSD_EIG_TOL, RANK_REL_TOL};

/// Dense complex matrix with row-major serialization order.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    inner: DMatrix<Complex64>,
}

impl CMatrix {
    /// Builds a matrix from row-major entries, rejecting NaN/Inf.
    pub fn from_row_major(rows: usize, cols: usize, entries: Vec<Complex64>) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::ShapeMismatch(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                entries.len()
            )));
        }
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidArgument(
                "matrix dimensions must be positive".into(),
            ));
        }
        if entries
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::InvalidArgument(
                "matrix entries must be finite".into(),
            ));
        }
        Ok(Self {
            inner: DMatrix::from_fn(rows, cols, |r, c| entries[r * cols + c]),
        })
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> Complex64) -> Self {
        Self {
            inner: DMatrix::from_fn(rows, cols, f),
        }
    }

    /// Convenience constructor from real row-major entries.
    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = rows[0].len();
        Self::from_fn(r, c, |i, j| Complex64::new(rows[i][j], 0.0))
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            inner: DMatrix::zeros(rows, cols),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            inner: DMatrix::identity(n, n),
        }
    }

    pub(crate) fn from_na(inner: DMatrix<Complex64>) -> Self {
        Self { inner }
    }

    pub(crate) fn as_na(&self) -> &DMatrix<Complex64> {
        &self.inner
    }

    pub fn rows(&self) -> usize {
        self.inner.nrows()
    }

    pub fn cols(&self) -> usize {
        self.inner.ncols()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows(), self.cols())
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.inner[(row, col)]
    }

    pub fn set(&mut self, row: usize, col: usize, value: Complex64) {
        self.inner[(row, col)] = value;
    }

    /// Entries in row-major order.
    pub fn row_major_entries(&self) -> Vec<Complex64> {
        let (r, c) = self.shape();
        let mut out = Vec::with_capacity(r * c);
        for i in 0..r {
            for j in 0..c {
                out.push(self.inner[(i, j)]);
            }
        }
        out
    }

    pub fn adjoint(&self) -> Self {
        Self {
            inner: self.inner.adjoint(),
        }
    }

    pub fn transpose(&self) -> Self {
        Self {
            inner: self.inner.transpose(),
        }
    }

    pub fn conjugate(&self) -> Self {
        Self {
            inner: self.inner.map(|z| z.conj()),
        }
    }

    pub fn trace(&self) -> Complex64 {
        self.inner.diagonal().sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.inner.norm()
    }

    pub fn scale(&self, s: f64) -> Self {
        self * Complex64::new(s, 0.0)
    }

    /// Frobenius norm of `A - A†`.
    pub fn hermitian_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        (&self.inner - self.inner.adjoint()).norm()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_defect() <= tol
    }

    /// `(A + A†)/2`; callers must have checked squareness.
    pub fn symmetrize(&self) -> Self {
        Self {
            inner: (&self.inner + self.inner.adjoint()) * Complex64::new(0.5, 0.0),
        }
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &Self) -> Self {
        Self {
            inner: self.inner.kronecker(&other.inner),
        }
    }

    /// `‖U†U - I‖_F`, infinite for non-square input.
    pub fn unitarity_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows();
        (self.inner.adjoint() * &self.inner - DMatrix::<Complex64>::identity(n, n)).norm()
    }

    /// Hermitian eigendecomposition with ascending eigenvalues.
    ///
    /// The input must be Hermitian within [`HERMITIAN_TOL`] (Frobenius); it is
    /// symmetrized before factorization so rounding drift from upstream
    /// products does not leak into the eigenvectors.
    pub fn herm_eig(&self) -> Result<HermitianEig> {
        if !self.is_square() {
            return Err(Error::ShapeMismatch(format!(
                "eigendecomposition needs a square matrix, got {}x{}",
                self.rows(),
                self.cols()
            )));
        }
        let defect = self.hermitian_defect();
        if defect > HERMITIAN_TOL {
            return Err(Error::NotHermitian {
                defect,
                tol: HERMITIAN_TOL,
            });
        }
        let sym = self.symmetrize();
        let eig = sym.inner.symmetric_eigen();
        let n = self.rows();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let eigenvectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
        Ok(HermitianEig {
            eigenvalues,
            eigenvectors: Self {
                inner: eigenvectors,
            },
        })
    }

    /// Raises a Hermitian PSD matrix to a real power in its eigenbasis.
    ///
    /// Eigenvalues below `-PSD_EIG_TOL` reject the input as non-PSD; values in
    /// `[-PSD_EIG_TOL, 0)` are clipped to zero. For negative exponents any
    /// eigenvalue under `RANK_REL_TOL × max` makes the input singular.
    pub fn psd_power(&self, exponent: f64) -> Result<Self> {
        let eig = self.herm_eig()?;
        let min_eig = eig.eigenvalues.first().copied().unwrap_or(0.0);
        if min_eig < -PSD_EIG_TOL {
            return Err(Error::NotPsd { min_eig });
        }
        let max_eig = eig.eigenvalues.last().copied().unwrap_or(0.0).max(0.0);
        let clipped: Vec<f64> = eig.eigenvalues.iter().map(|&l| l.max(0.0)).collect();
        if exponent < 0.0 {
            let floor = RANK_REL_TOL * max_eig;
            if clipped.iter().any(|&l| l <= floor) {
                return Err(Error::Singular(format!(
                    "psd_power({exponent}) on an operator with eigenvalue ≤ {floor:.3e}"
                )));
            }
        }
        let powered: Vec<f64> = clipped.iter().map(|&l| l.powf(exponent)).collect();
        Ok(eig.recompose(&powered))
    }
}

/// Eigendecomposition of a Hermitian matrix: ascending real eigenvalues and
/// an orthonormal column matrix of eigenvectors.
#[derive(Debug, Clone)]
pub struct HermitianEig {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: CMatrix,
}

impl HermitianEig {
    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }

    /// `V diag(values) V†` for caller-supplied spectrum values.
    pub fn recompose(&self, values: &[f64]) -> CMatrix {
        let v = self.eigenvectors.as_na();
        let d = DMatrix::from_diagonal(&DVector::from_iterator(
            values.len(),
            values.iter().map(|&x| Complex64::new(x, 0.0)),
        ));
        CMatrix::from_na(v * d * v.adjoint())
    }

    /// The `i`-th eigenvector as a column vector.
    pub fn eigenvector(&self, i: usize) -> Vec<Complex64> {
        (0..self.eigenvectors.rows())
            .map(|r| self.eigenvectors.get(r, i))
            .collect()
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = Complex64;
    fn index(&self, idx: (usize, usize)) -> &Complex64 {
        &self.inner[idx]
    }
}

macro_rules! impl_binop {
    ($trait:ident, $method:ident, $op:tt) => {
        impl std::ops::$trait<&CMatrix> for &CMatrix {
            type Output = CMatrix;
            fn $method(self, rhs: &CMatrix) -> CMatrix {
                CMatrix { inner: &self.inner $op &rhs.inner }
            }
        }
        impl std::ops::$trait<CMatrix> for CMatrix {
            type Output = CMatrix;
            fn $method(self, rhs: CMatrix) -> CMatrix {
                &self $op &rhs
            }
        }
        impl std::ops::$trait<&CMatrix> for CMatrix {
            type Output = CMatrix;
            fn $method(self, rhs: &CMatrix) -> CMatrix {
                &self $op rhs
            }
        }
        impl std::ops::$trait<CMatrix> for &CMatrix {
            type Output = CMatrix;
            fn $method(self, rhs: CMatrix) -> CMatrix {
                self $op &rhs
            }
        }
    };
}

impl_binop!(Add, add, +);
impl_binop!(Sub, sub, -);
impl_binop!(Mul, mul, *);

impl std::ops::Mul<Complex64> for &CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: Complex64) -> CMatrix {
        CMatrix {
            inner: &self.inner * rhs,
        }
    }
}

impl std::ops::Mul<Complex64> for CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: Complex64) -> CMatrix {
        &self * rhs
    }
}

impl std::ops::Neg for &CMatrix {
    type Output = CMatrix;
    fn neg(self) -> CMatrix {
        CMatrix {
            inner: -&self.inner,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct MatrixJson {
    rows: usize,
    cols: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl Serialize for CMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let entries = self.row_major_entries();
        MatrixJson {
            rows: self.rows(),
            cols: self.cols(),
            re: entries.iter().map(|z| z.re).collect(),
            im: entries.iter().map(|z| z.im).collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for CMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = MatrixJson::deserialize(deserializer)?;
        if raw.re.len() != raw.rows * raw.cols || raw.im.len() != raw.rows * raw.cols {
            return Err(D::Error::custom(format!(
                "matrix {}x{} needs {} re/im entries, got {}/{}",
                raw.rows,
                raw.cols,
                raw.rows * raw.cols,
                raw.re.len(),
                raw.im.len()
            )));
        }
        let entries: Vec<Complex64> = raw
            .re
            .iter()
            .zip(raw.im.iter())
            .map(|(&re, &im)| Complex64::new(re, im))
            .collect();
        CMatrix::from_row_major(raw.rows, raw.cols, entries).map_err(D::Error::custom)
    }
}

/// The Pauli matrices for d=2, used throughout the tests and the CLI.
pub mod pauli {
    use super::CMatrix;
    use num_complex::Complex64;

    pub fn x() -> CMatrix {
        CMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]])
    }

    pub fn y() -> CMatrix {
        CMatrix::from_fn(2, 2, |r, c| match (r, c) {
            (0, 1) => Complex64::new(0.0, -1.0),
            (1, 0) => Complex64::new(0.0, 1.0),
            _ => Complex64::new(0.0, 0.0),
        })
    }

    pub fn z() -> CMatrix {
        CMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, -1.0]])
    }
}
