//! Hilbert-Schmidt vectorization: the double-ket isomorphism between
//! operators `A: K → H` and bipartite vectors `|A⟩⟩ ∈ H ⊗ K`.
//!
//! Conventions: both factor bases are the computational ones and the
//! amplitude layout is row-major over `(n, m)`, so `|A⟩⟩` amplitude
//! `n·dim_k + m` is literally the matrix entry `A_{nm}`. Under this map
//! `⟨⟨A|B⟩⟩ = Tr[A†B]`, `(A ⊗ B)|C⟩⟩ = |A C Bᵀ⟩⟩`, and the two partial
//! traces of `|A⟩⟩⟨⟨B|` are `AB†` (over K) and `Aᵀ B*` (over H).

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matrix::CMatrix;

/// A vector in `H ⊗ K` identified with an operator from `K` to `H`.
#[derive(Debug, Clone, PartialEq)]
pub struct DoubleKet {
    dim_h: usize,
    dim_k: usize,
    amplitudes: DVector<Complex64>,
}

impl DoubleKet {
    pub fn new(dim_h: usize, dim_k: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != dim_h * dim_k {
            return Err(Error::ShapeMismatch(format!(
                "double ket over {dim_h}x{dim_k} needs {} amplitudes, got {}",
                dim_h * dim_k,
                amplitudes.len()
            )));
        }
        Ok(Self {
            dim_h,
            dim_k,
            amplitudes: DVector::from_vec(amplitudes),
        })
    }

    pub fn dim_h(&self) -> usize {
        self.dim_h
    }

    pub fn dim_k(&self) -> usize {
        self.dim_k
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn amplitude(&self, i: usize) -> Complex64 {
        self.amplitudes[i]
    }

    pub fn amplitudes(&self) -> Vec<Complex64> {
        self.amplitudes.iter().copied().collect()
    }

    /// `⟨⟨self|other⟩⟩`.
    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        if self.len() != other.len() {
            return Err(Error::ShapeMismatch(format!(
                "double-ket inner product between lengths {} and {}",
                self.len(),
                other.len()
            )));
        }
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            dim_h: self.dim_h,
            dim_k: self.dim_k,
            amplitudes: &self.amplitudes * s,
        }
    }
}

/// `A ↦ |A⟩⟩`.
pub fn vectorize(a: &CMatrix) -> DoubleKet {
    let (dim_h, dim_k) = a.shape();
    DoubleKet {
        dim_h,
        dim_k,
        amplitudes: DVector::from_vec(a.row_major_entries()),
    }
}

/// `|A⟩⟩ ↦ A`, the exact inverse of [`vectorize`].
pub fn devectorize(v: &DoubleKet) -> CMatrix {
    CMatrix::from_fn(v.dim_h, v.dim_k, |n, m| v.amplitudes[n * v.dim_k + m])
}

/// Hilbert-Schmidt inner product `Tr[A†B]`.
pub fn hs_inner(a: &CMatrix, b: &CMatrix) -> Result<Complex64> {
    if a.shape() != b.shape() {
        return Err(Error::ShapeMismatch(format!(
            "hs_inner between {:?} and {:?}",
            a.shape(),
            b.shape()
        )));
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for r in 0..a.rows() {
        for c in 0..a.cols() {
            acc += a.get(r, c).conj() * b.get(r, c);
        }
    }
    Ok(acc)
}

/// `(A ⊗ B)|C⟩⟩ = |A C Bᵀ⟩⟩`.
pub fn sandwich(a: &CMatrix, b: &CMatrix, c_ket: &DoubleKet) -> Result<DoubleKet> {
    let c = devectorize(c_ket);
    if a.cols() != c.rows() || b.cols() != c.cols() {
        return Err(Error::ShapeMismatch(format!(
            "sandwich: A is {:?}, B is {:?}, C is {:?}",
            a.shape(),
            b.shape(),
            c.shape()
        )));
    }
    Ok(vectorize(&(a * &c * b.transpose())))
}

/// `Tr_K[|A⟩⟩⟨⟨B|] = A B†`.
pub fn partial_trace_ancilla(a_ket: &DoubleKet, b_ket: &DoubleKet) -> Result<CMatrix> {
    check_same_dims(a_ket, b_ket)?;
    let a = devectorize(a_ket);
    let b = devectorize(b_ket);
    Ok(&a * b.adjoint())
}

/// `Tr_H[|A⟩⟩⟨⟨B|] = Aᵀ B*`.
pub fn partial_trace_system(a_ket: &DoubleKet, b_ket: &DoubleKet) -> Result<CMatrix> {
    check_same_dims(a_ket, b_ket)?;
    let a = devectorize(a_ket);
    let b = devectorize(b_ket);
    Ok(a.transpose() * b.conjugate())
}

fn check_same_dims(a: &DoubleKet, b: &DoubleKet) -> Result<()> {
    if a.dim_h != b.dim_h || a.dim_k != b.dim_k {
        return Err(Error::ShapeMismatch(format!(
            "double kets over {}x{} and {}x{}",
            a.dim_h, a.dim_k, b.dim_h, b.dim_k
        )));
    }
    Ok(())
}

/// Accumulates `|A⟩⟩⟨⟨B|` into `target` (a `(dh·dk) × (dh·dk)` matrix).
pub(crate) fn accumulate_outer(target: &mut CMatrix, a: &DoubleKet, b: &DoubleKet) {
    let n = a.len();
    debug_assert_eq!(b.len(), n);
    debug_assert_eq!(target.shape(), (n, n));
    for i in 0..n {
        let ai = a.amplitudes[i];
        for j in 0..n {
            let v = target.get(i, j) + ai * b.amplitudes[j].conj();
            target.set(i, j, v);
        }
    }
}
