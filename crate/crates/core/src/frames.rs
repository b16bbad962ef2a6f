//! Operator frames and dual frames.
//!
//! A frame is a spanning set of operators `Ξ_i` from `K` to `H`: there are
//! constants `0 < a ≤ b` with `a‖A‖² ≤ Σ_i |⟨A, Ξ_i⟩|² ≤ b‖A‖²` for every
//! operator `A`. The bounds are the extreme eigenvalues of the frame
//! operator `F = Σ_i |Ξ_i⟩⟩⟨⟨Ξ_i|`, and `F` is invertible exactly when the
//! set is a frame. A dual frame `Θ_i` turns the frame into an expansion
//! `A = Σ_i Tr[Θ_i† A] Ξ_i`; the canonical dual applies `F⁻¹` elementwise
//! and every other dual differs by an arbitrary-operator correction term.
//!
//! Continuous frames enter as finite weighted frames: a quadrature weight
//! `√w_i` is folded into each element, after which all of the discrete
//! machinery applies unchanged.

use std::sync::OnceLock;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hs::{accumulate_outer, devectorize, hs_inner, vectorize, DoubleKet};
use crate::matrix::{CMatrix, HermitianEig};
use crate::tolerances::FRAME_COND_TOL;

/// Ordered collection of same-shape operators from `K` to `H`.
///
/// The element order is significant: duals are index-aligned with their
/// parent frame and processing functions are keyed by index. The frame
/// operator is computed once on first use and cached.
#[derive(Debug, Clone)]
pub struct OperatorFrame {
    dim_h: usize,
    dim_k: usize,
    elements: Vec<CMatrix>,
    frame_op: OnceLock<FrameOperator>,
}

impl OperatorFrame {
    pub fn new(elements: Vec<CMatrix>) -> Result<Self> {
        let first = elements
            .first()
            .ok_or_else(|| Error::Empty("operator frame needs at least one element".into()))?;
        let (dim_h, dim_k) = first.shape();
        if elements.iter().any(|e| e.shape() != (dim_h, dim_k)) {
            return Err(Error::ShapeMismatch(
                "frame elements must share one shape".into(),
            ));
        }
        Ok(Self {
            dim_h,
            dim_k,
            elements,
            frame_op: OnceLock::new(),
        })
    }

    /// Builds a finite weighted frame by folding `√w_i` into each element.
    pub fn weighted(elements: Vec<CMatrix>, weights: &[f64]) -> Result<Self> {
        if elements.len() != weights.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} elements but {} weights",
                elements.len(),
                weights.len()
            )));
        }
        if weights.iter().any(|&w| w < 0.0 || !w.is_finite()) {
            return Err(Error::InvalidArgument(
                "frame weights must be finite and ≥ 0".into(),
            ));
        }
        let folded = elements
            .into_iter()
            .zip(weights)
            .map(|(e, &w)| e.scale(w.sqrt()))
            .collect();
        Self::new(folded)
    }

    pub fn dim_h(&self) -> usize {
        self.dim_h
    }

    pub fn dim_k(&self) -> usize {
        self.dim_k
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn element(&self, i: usize) -> &CMatrix {
        &self.elements[i]
    }

    pub fn elements(&self) -> &[CMatrix] {
        &self.elements
    }

    /// The frame operator `F = Σ_i |Ξ_i⟩⟩⟨⟨Ξ_i|`, Hermitian PSD of side
    /// `dim_h · dim_k`. Cached after the first call; concurrent first calls
    /// race benignly on an idempotent compute.
    pub fn frame_operator(&self) -> &FrameOperator {
        self.frame_op.get_or_init(|| FrameOperator::compute(self))
    }

    /// Frame bounds `(a, b)`: the extreme eigenvalues of `F`.
    pub fn frame_bounds(&self) -> (f64, f64) {
        let eig = &self.frame_operator().eig;
        (eig.min_eigenvalue(), eig.max_eigenvalue())
    }

    /// Whether the set spans the whole operator space, in the scale-free
    /// sense `min eig(F) > tol × max eig(F)`.
    pub fn is_frame(&self, tol: f64) -> bool {
        let (a, b) = self.frame_bounds();
        a > tol * b
    }

    /// The canonical dual `Θ_i = F⁻¹ Ξ_i`.
    ///
    /// Errors out rather than falling back to a pseudo-inverse when `F` is
    /// singular: a silent pseudo-inverse would mask non-universality.
    pub fn canonical_dual(&self) -> Result<DualFrame> {
        let f_inv = self.frame_operator().inverse_matrix()?;
        let elements = self
            .elements
            .iter()
            .map(|xi| apply_superop(&f_inv, xi))
            .collect();
        Ok(DualFrame {
            elements,
            provenance: DualProvenance::Canonical,
        })
    }

    /// An alternate dual parameterized by arbitrary operators `Y_i`:
    /// `|Θ_i⟩⟩ = F⁻¹|Ξ_i⟩⟩ + |Y_i⟩⟩ − Σ_j ⟨⟨Ξ_j|F⁻¹|Ξ_i⟩⟩ |Y_j⟩⟩`.
    pub fn alternate_dual(&self, y_list: &[CMatrix]) -> Result<DualFrame> {
        if y_list.len() != self.len() {
            return Err(Error::ShapeMismatch(format!(
                "frame has {} elements but {} Y operators were given",
                self.len(),
                y_list.len()
            )));
        }
        if y_list.iter().any(|y| y.shape() != (self.dim_h, self.dim_k)) {
            return Err(Error::ShapeMismatch(
                "Y operators must match the frame shape".into(),
            ));
        }
        let f_inv = self.frame_operator().inverse_matrix()?;
        let canon: Vec<CMatrix> = self
            .elements
            .iter()
            .map(|xi| apply_superop(&f_inv, xi))
            .collect();
        let mut elements = Vec::with_capacity(self.len());
        for (i, base) in canon.iter().enumerate() {
            let mut theta = base + &y_list[i];
            for (j, y) in y_list.iter().enumerate() {
                // ⟨⟨Ξ_j|F⁻¹|Ξ_i⟩⟩ = Tr[Ξ_j† Θ⁰_i]
                let coeff = hs_inner(&self.elements[j], base)?;
                theta = theta - y * coeff;
            }
            elements.push(theta);
        }
        Ok(DualFrame {
            elements,
            provenance: DualProvenance::Alternate,
        })
    }
}

/// The cached frame operator together with its eigendecomposition.
#[derive(Debug, Clone)]
pub struct FrameOperator {
    matrix: CMatrix,
    eig: HermitianEig,
}

impl FrameOperator {
    fn compute(frame: &OperatorFrame) -> Self {
        let n = frame.dim_h * frame.dim_k;
        let mut matrix = CMatrix::zeros(n, n);
        for xi in &frame.elements {
            let ket = vectorize(xi);
            accumulate_outer(&mut matrix, &ket, &ket);
        }
        Self::from_matrix(matrix)
    }

    /// Wraps a Hermitian PSD superoperator matrix (used for the closed-form
    /// group-covariant frame operators).
    pub(crate) fn from_matrix(matrix: CMatrix) -> Self {
        let sym = matrix.symmetrize();
        let eig = sym
            .herm_eig()
            .expect("symmetrized frame operator is Hermitian");
        Self { matrix: sym, eig }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eig.eigenvalues
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.eig.min_eigenvalue(), self.eig.max_eigenvalue())
    }

    /// `F⁻¹` as a dense superoperator matrix; errors when `F` fails the
    /// relative condition test.
    pub fn inverse_matrix(&self) -> Result<CMatrix> {
        let (min, max) = self.bounds();
        if min <= FRAME_COND_TOL * max || max <= 0.0 {
            return Err(Error::Singular(format!(
                "frame operator has eigenvalue range [{min:.3e}, {max:.3e}]"
            )));
        }
        let inverted: Vec<f64> = self.eig.eigenvalues.iter().map(|&l| 1.0 / l).collect();
        Ok(self.eig.recompose(&inverted))
    }
}

/// Applies a `(dh·dk)²` superoperator matrix to an operator via its double ket.
fn apply_superop(superop: &CMatrix, operand: &CMatrix) -> CMatrix {
    let ket = vectorize(operand);
    let n = ket.len();
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for (i, slot) in out.iter_mut().enumerate() {
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..n {
            acc += superop.get(i, j) * ket.amplitude(j);
        }
        *slot = acc;
    }
    devectorize(&DoubleKet::new(operand.rows(), operand.cols(), out).expect("shape preserved"))
}

/// Where a dual frame came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DualProvenance {
    Canonical,
    Alternate,
    Covariant,
}

/// A dual frame, index-aligned with its parent.
#[derive(Debug, Clone)]
pub struct DualFrame {
    elements: Vec<CMatrix>,
    provenance: DualProvenance,
}

impl DualFrame {
    pub fn new(elements: Vec<CMatrix>, provenance: DualProvenance) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::Empty("dual frame needs at least one element".into()));
        }
        Ok(Self {
            elements,
            provenance,
        })
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn element(&self, i: usize) -> &CMatrix {
        &self.elements[i]
    }

    pub fn elements(&self) -> &[CMatrix] {
        &self.elements
    }

    pub fn provenance(&self) -> DualProvenance {
        self.provenance
    }
}

/// Frobenius norm of `Σ_i |Ξ_i⟩⟩⟨⟨Θ_i| − I` on the `(dh·dk)`-dimensional
/// vector space; zero exactly when the pair satisfies the completeness
/// relation for all states.
pub fn completeness_defect(frame: &OperatorFrame, dual: &DualFrame) -> Result<f64> {
    if frame.len() != dual.len() {
        return Err(Error::ShapeMismatch(format!(
            "frame has {} elements, dual has {}",
            frame.len(),
            dual.len()
        )));
    }
    let n = frame.dim_h * frame.dim_k;
    let mut acc = CMatrix::zeros(n, n);
    for (xi, theta) in frame.elements.iter().zip(dual.elements.iter()) {
        if theta.shape() != (frame.dim_h, frame.dim_k) {
            return Err(Error::ShapeMismatch(
                "dual element shape differs from frame".into(),
            ));
        }
        accumulate_outer(&mut acc, &vectorize(xi), &vectorize(theta));
    }
    Ok((acc - CMatrix::identity(n)).frobenius_norm())
}

/// Expansion coefficients `c_i = Tr[Θ_i† A]` and the reconstruction
/// `Σ_i c_i Ξ_i`.
pub fn expand(
    a: &CMatrix,
    frame: &OperatorFrame,
    dual: &DualFrame,
) -> Result<(Vec<Complex64>, CMatrix)> {
    if frame.len() != dual.len() {
        return Err(Error::ShapeMismatch(format!(
            "frame has {} elements, dual has {}",
            frame.len(),
            dual.len()
        )));
    }
    if a.shape() != (frame.dim_h, frame.dim_k) {
        return Err(Error::ShapeMismatch(format!(
            "operand is {:?} but the frame acts on {:?}",
            a.shape(),
            (frame.dim_h, frame.dim_k)
        )));
    }
    let mut coefficients = Vec::with_capacity(frame.len());
    let mut reconstruction = CMatrix::zeros(frame.dim_h, frame.dim_k);
    for (xi, theta) in frame.elements.iter().zip(dual.elements.iter()) {
        let c = hs_inner(theta, a)?;
        coefficients.push(c);
        reconstruction = reconstruction + xi * c;
    }
    Ok((coefficients, reconstruction))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::pauli;
    use rand::{Rng, SeedableRng};

    fn random_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> CMatrix {
        CMatrix::from_fn(rows, cols, |_, _| {
            Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        })
    }

    fn basis_frame(d: usize) -> OperatorFrame {
        let mut elements = Vec::new();
        for n in 0..d {
            for m in 0..d {
                elements.push(CMatrix::from_fn(d, d, |r, c| {
                    if (r, c) == (n, m) {
                        Complex64::new(1.0, 0.0)
                    } else {
                        Complex64::new(0.0, 0.0)
                    }
                }));
            }
        }
        OperatorFrame::new(elements).unwrap()
    }

    fn pauli_frame() -> OperatorFrame {
        let s = 1.0 / 2f64.sqrt();
        OperatorFrame::new(vec![
            CMatrix::identity(2).scale(s),
            pauli::x().scale(s),
            pauli::y().scale(s),
            pauli::z().scale(s),
        ])
        .unwrap()
    }

    fn random_frame(count: usize, d: usize, seed: u64) -> OperatorFrame {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        OperatorFrame::new((0..count).map(|_| random_matrix(d, d, &mut rng)).collect()).unwrap()
    }

    #[test]
    fn orthonormal_bases_have_identity_frame_operator() {
        for frame in [basis_frame(2), pauli_frame()] {
            let f = frame.frame_operator();
            assert!((f.matrix() - &CMatrix::identity(4)).frobenius_norm() < 1e-12);
            let (a, b) = frame.frame_bounds();
            assert!((a - 1.0).abs() < 1e-12 && (b - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn doubled_basis_doubles_the_bounds() {
        let mut elements = basis_frame(2).elements().to_vec();
        elements.extend(basis_frame(2).elements().iter().cloned());
        let frame = OperatorFrame::new(elements).unwrap();
        let (a, b) = frame.frame_bounds();
        assert!((a - 2.0).abs() < 1e-12 && (b - 2.0).abs() < 1e-12);
    }

    #[test]
    fn deficient_sets_are_not_frames() {
        assert!(pauli_frame().is_frame(FRAME_COND_TOL));
        let three = OperatorFrame::new(vec![CMatrix::identity(2), pauli::x(), pauli::y()]).unwrap();
        assert!(!three.is_frame(FRAME_COND_TOL));
    }

    #[test]
    fn canonical_dual_of_orthonormal_basis_is_itself() {
        let frame = pauli_frame();
        let dual = frame.canonical_dual().unwrap();
        for (xi, theta) in frame.elements().iter().zip(dual.elements()) {
            assert!((xi - theta).frobenius_norm() < 1e-12);
        }
    }

    #[test]
    fn canonical_dual_inverts_scaling() {
        let frame = pauli_frame();
        let scaled =
            OperatorFrame::new(frame.elements().iter().map(|e| e.scale(2.0)).collect()).unwrap();
        let dual = scaled.canonical_dual().unwrap();
        for (xi, theta) in frame.elements().iter().zip(dual.elements()) {
            // elements were scaled by 2, so duals must carry 1/2
            assert!((xi.scale(0.5) - theta.clone()).frobenius_norm() < 1e-12);
        }
    }

    #[test]
    fn canonical_dual_rejects_singular_frames() {
        let three = OperatorFrame::new(vec![CMatrix::identity(2), pauli::x(), pauli::y()]).unwrap();
        assert!(matches!(three.canonical_dual(), Err(Error::Singular(_))));
    }

    #[test]
    fn alternate_dual_with_zero_y_is_canonical() {
        let frame = random_frame(6, 2, 1);
        let zeros = vec![CMatrix::zeros(2, 2); 6];
        let alt = frame.alternate_dual(&zeros).unwrap();
        let canon = frame.canonical_dual().unwrap();
        for (a, c) in alt.elements().iter().zip(canon.elements()) {
            assert!((a - c).frobenius_norm() < 1e-12);
        }
    }

    #[test]
    fn alternate_dual_correction_cancels_on_orthonormal_frames() {
        let frame = pauli_frame();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        let ys: Vec<CMatrix> = (0..4).map(|_| random_matrix(2, 2, &mut rng)).collect();
        let alt = frame.alternate_dual(&ys).unwrap();
        let canon = frame.canonical_dual().unwrap();
        for (a, c) in alt.elements().iter().zip(canon.elements()) {
            assert!((a - c).frobenius_norm() < 1e-10);
        }
    }

    #[test]
    fn alternate_dual_reconstructs_random_operators() {
        let frame = random_frame(6, 2, 3);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let ys: Vec<CMatrix> = (0..6).map(|_| random_matrix(2, 2, &mut rng)).collect();
        let dual = frame.alternate_dual(&ys).unwrap();
        assert!(completeness_defect(&frame, &dual).unwrap() < 1e-8);
        for _ in 0..20 {
            let a = random_matrix(2, 2, &mut rng);
            let (_, rec) = expand(&a, &frame, &dual).unwrap();
            assert!((rec - a).frobenius_norm() < 1e-8);
        }
    }

    #[test]
    fn expansion_coefficients_of_identity_in_pauli_frame() {
        let frame = pauli_frame();
        let dual = frame.canonical_dual().unwrap();
        let (coeffs, rec) = expand(&CMatrix::identity(2), &frame, &dual).unwrap();
        assert!((coeffs[0] - Complex64::new(2f64.sqrt(), 0.0)).norm() < 1e-12);
        for c in &coeffs[1..] {
            assert!(c.norm() < 1e-12);
        }
        assert!((rec - CMatrix::identity(2)).frobenius_norm() < 1e-12);

        let (zeros, rec0) = expand(&CMatrix::zeros(2, 2), &frame, &dual).unwrap();
        assert!(zeros.iter().all(|c| c.norm() == 0.0));
        assert!(rec0.frobenius_norm() == 0.0);
    }

    #[test]
    fn completeness_defect_detects_rank_deficiency() {
        let frame = basis_frame(2);
        let self_dual =
            DualFrame::new(frame.elements().to_vec(), DualProvenance::Alternate).unwrap();
        assert!(completeness_defect(&frame, &self_dual).unwrap() < 1e-12);

        for seed in 10..15 {
            let frame = random_frame(4, 2, seed); // minimal cardinality
            if !frame.is_frame(FRAME_COND_TOL) {
                continue;
            }
            let dual = frame.canonical_dual().unwrap();
            assert!(completeness_defect(&frame, &dual).unwrap() < 1e-10);

            let truncated = OperatorFrame::new(frame.elements()[..3].to_vec()).unwrap();
            let truncated_dual =
                DualFrame::new(dual.elements()[..3].to_vec(), DualProvenance::Alternate).unwrap();
            assert!(completeness_defect(&truncated, &truncated_dual).unwrap() > 0.1);
        }
    }

    #[test]
    fn expansion_is_exact_and_symmetric_for_valid_duals() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for seed in 0..3 {
            let frame = random_frame(7, 2, 50 + seed);
            assert!(frame.is_frame(FRAME_COND_TOL));
            let dual = frame.canonical_dual().unwrap();
            for _ in 0..50 {
                let a = random_matrix(2, 2, &mut rng);
                let (_, rec) = expand(&a, &frame, &dual).unwrap();
                assert!((&rec - &a).frobenius_norm() < 1e-8);
                // adjoint form: Σ_i Tr[Ξ_i† A] Θ_i also reconstructs A
                let mut rec2 = CMatrix::zeros(2, 2);
                for (xi, theta) in frame.elements().iter().zip(dual.elements()) {
                    rec2 = rec2 + theta * hs_inner(xi, &a).unwrap();
                }
                assert!((&rec2 - &a).frobenius_norm() < 1e-8);
            }
        }
    }

    #[test]
    fn weighted_frames_fold_sqrt_weights() {
        let elements = pauli_frame().elements().to_vec();
        let weighted = OperatorFrame::weighted(elements, &[4.0, 4.0, 4.0, 4.0]).unwrap();
        let (a, b) = weighted.frame_bounds();
        // each element scaled by 2 → F scaled by 4
        assert!((a - 4.0).abs() < 1e-12 && (b - 4.0).abs() < 1e-12);
    }

    #[test]
    fn scalar_scaling_scales_bounds_quadratically() {
        let frame = random_frame(6, 2, 77);
        let (a0, b0) = frame.frame_bounds();
        let s = 3.0;
        let scaled =
            OperatorFrame::new(frame.elements().iter().map(|e| e.scale(s)).collect()).unwrap();
        let (a1, b1) = scaled.frame_bounds();
        assert!((a1 - s * s * a0).abs() < 1e-8 * b1);
        assert!((b1 - s * s * b0).abs() < 1e-8 * b1);
    }
}
