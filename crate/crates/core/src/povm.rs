//! POVMs, quantum states, observables, and the data-processing machinery
//! that turns a joint measurement plus a fixed ancilla state into estimates
//! of arbitrary operator expectations.
//!
//! The central construction: diagonalize each POVM element `Π_i` into
//! double-ket vectors `|Ψ^(i)_j⟩⟩`, then form the system operators
//! `Ξ_i[ν] = Σ_j Ψ^(i)_j ν^τ Ψ^(i)_j†`. The POVM is universal for the
//! ancilla state `ν` exactly when that set is an operator frame; any dual of
//! it yields processing coefficients `f_i = Tr[Θ_i† O]` with
//! `Σ_i f_i Tr[(ρ⊗ν)Π_i] = Tr[ρO]`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::frames::{DualFrame, OperatorFrame};
use crate::hs::{devectorize, hs_inner, DoubleKet};
use crate::matrix::CMatrix;
use crate::tolerances::{
    COMPLETENESS_TOL, HERMITIAN_TOL, PROB_CLIP_TOL, PSD_EIG_TOL, RANK_REL_TOL, TRACE_TOL,
};

/// A density matrix: Hermitian, PSD, unit trace (all within tolerance).
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: CMatrix,
}

impl DensityMatrix {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::InvalidState("density matrix must be square".into()));
        }
        let defect = matrix.hermitian_defect();
        if defect > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!(
                "not Hermitian: ‖ρ - ρ†‖_F = {defect:.3e}"
            )));
        }
        let sym = matrix.symmetrize();
        let eig = sym.herm_eig()?;
        if eig.min_eigenvalue() < -PSD_EIG_TOL {
            return Err(Error::InvalidState(format!(
                "not PSD: min eigenvalue {:.3e}",
                eig.min_eigenvalue()
            )));
        }
        let tr = sym.trace().re;
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        Ok(Self { matrix: sym })
    }

    /// `|k⟩⟨k|` in dimension `dim`.
    pub fn pure_basis(dim: usize, k: usize) -> Self {
        let matrix = CMatrix::from_fn(dim, dim, |r, c| {
            if r == k && c == k {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        Self { matrix }
    }

    /// `I/d`.
    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            matrix: CMatrix::identity(dim).scale(1.0 / dim as f64),
        }
    }

    /// A state of prescribed purity: the mixture `t|0⟩⟨0| + (1−t)I/d` with
    /// `t` solved from `Tr[ρ²] = t²(1 − 1/d) + 1/d`.
    pub fn with_purity(dim: usize, purity: f64) -> Result<Self> {
        let d = dim as f64;
        if !(purity > 1.0 / d && purity <= 1.0 + 1e-12) {
            return Err(Error::InvalidState(format!(
                "purity {purity} outside (1/{dim}, 1]"
            )));
        }
        let t = ((purity.min(1.0) - 1.0 / d) / (1.0 - 1.0 / d)).sqrt();
        let matrix = Self::pure_basis(dim, 0).matrix().scale(t)
            + CMatrix::identity(dim).scale((1.0 - t) / d);
        Self::new(matrix)
    }

    /// `|ψ⟩⟨ψ|` from an unnormalized state vector.
    pub fn from_state_vector(psi: &[Complex64]) -> Result<Self> {
        let norm2: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        if norm2 <= 0.0 {
            return Err(Error::InvalidState("zero state vector".into()));
        }
        let d = psi.len();
        let matrix = CMatrix::from_fn(d, d, |r, c| psi[r] * psi[c].conj() / norm2);
        Ok(Self { matrix })
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// `ν^τ` in the fixed vectorization basis.
    pub fn transposed(&self) -> CMatrix {
        self.matrix.transpose()
    }

    /// Purity `Tr[ρ²]`.
    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }
}

/// An operator whose expectation is to be estimated.
#[derive(Debug, Clone)]
pub struct Observable {
    matrix: CMatrix,
    hermitian: bool,
}

impl Observable {
    /// Wraps a Hermitian observable, validating the flag.
    pub fn hermitian(matrix: CMatrix) -> Result<Self> {
        let defect = matrix.hermitian_defect();
        if defect > HERMITIAN_TOL {
            return Err(Error::NotHermitian {
                defect,
                tol: HERMITIAN_TOL,
            });
        }
        Ok(Self {
            matrix: matrix.symmetrize(),
            hermitian: true,
        })
    }

    /// Wraps an arbitrary operator.
    pub fn general(matrix: CMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::ShapeMismatch("observable must be square".into()));
        }
        Ok(Self {
            matrix,
            hermitian: false,
        })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }
}

/// Outcome-indexed processing coefficients `f_i(ν, O) = Tr[Θ_i† O]`.
#[derive(Debug, Clone)]
pub struct ProcessingFunction {
    values: Vec<Complex64>,
}

impl ProcessingFunction {
    pub fn new(values: Vec<Complex64>) -> Self {
        Self { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn value(&self, i: usize) -> Complex64 {
        self.values[i]
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Real parts, the processed values for Hermitian observables.
    pub fn real_values(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.re).collect()
    }
}

/// A positive operator valued measure, optionally on a bipartite space
/// `H ⊗ K` with a recorded split.
#[derive(Debug, Clone)]
pub struct Povm {
    dim: usize,
    elements: Vec<CMatrix>,
    split: Option<(usize, usize)>,
}

impl Povm {
    /// Validates Hermiticity, positivity, and completeness before wrapping.
    pub fn new(elements: Vec<CMatrix>, split: Option<(usize, usize)>) -> Result<Self> {
        let first = elements
            .first()
            .ok_or_else(|| Error::Empty("POVM needs at least one element".into()))?;
        let dim = first.rows();
        if let Some((dh, dk)) = split {
            if dh * dk != dim {
                return Err(Error::InvalidPovm(format!(
                    "bipartite split {dh}x{dk} does not factor dimension {dim}"
                )));
            }
        }
        let povm = Self {
            dim,
            elements,
            split,
        };
        let report = povm.validate()?;
        if let Some((i, &min)) = report
            .element_min_eigenvalues
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
        {
            if min < -PSD_EIG_TOL {
                return Err(Error::InvalidPovm(format!(
                    "element {i} has eigenvalue {min:.3e}"
                )));
            }
        }
        if report.completeness_defect > COMPLETENESS_TOL {
            return Err(Error::InvalidPovm(format!(
                "ΣΠ_i differs from identity by {:.3e}",
                report.completeness_defect
            )));
        }
        Ok(povm)
    }

    pub fn dim(&self) -> usize {
        self.dim
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

    pub fn split(&self) -> Option<(usize, usize)> {
        self.split
    }

    /// Diagnostic report: per-element Hermitian defects and minimum
    /// eigenvalues, plus the completeness defect `‖ΣΠ_i − I‖_F`.
    pub fn validate(&self) -> Result<PovmReport> {
        let mut element_min_eigenvalues = Vec::with_capacity(self.elements.len());
        let mut hermitian_defects = Vec::with_capacity(self.elements.len());
        let mut sum = CMatrix::zeros(self.dim, self.dim);
        for (i, pi) in self.elements.iter().enumerate() {
            if pi.shape() != (self.dim, self.dim) {
                return Err(Error::InvalidPovm(format!(
                    "element {i} has shape {:?}, expected {}x{}",
                    pi.shape(),
                    self.dim,
                    self.dim
                )));
            }
            let defect = pi.hermitian_defect();
            if defect > HERMITIAN_TOL {
                return Err(Error::InvalidPovm(format!(
                    "element {i} is not Hermitian (defect {defect:.3e})"
                )));
            }
            hermitian_defects.push(defect);
            let eig = pi.symmetrize().herm_eig()?;
            element_min_eigenvalues.push(eig.min_eigenvalue());
            sum = sum + pi;
        }
        let completeness_defect = (sum - CMatrix::identity(self.dim)).frobenius_norm();
        Ok(PovmReport {
            element_min_eigenvalues,
            hermitian_defects,
            completeness_defect,
        })
    }

    /// Spectral decomposition of one element into double kets with
    /// `Σ_j |Ψ_j⟩⟩⟨⟨Ψ_j| = Π_i`: each kept eigenvector is scaled by `√λ_j`,
    /// so the squared norm of `|Ψ_j⟩⟩` is the eigenvalue. Branches below the
    /// rank threshold contribute nothing downstream and are dropped.
    pub fn diagonalize_element(&self, index: usize) -> Result<Vec<DoubleKet>> {
        let (dim_h, dim_k) = self
            .split
            .ok_or_else(|| Error::InvalidArgument("bipartite split not set on this POVM".into()))?;
        diagonalize_psd(&self.elements[index], dim_h, dim_k)
    }

    /// The system frame `Ξ_i[ν] = Σ_j Ψ^(i)_j ν^τ Ψ^(i)_j†`, one element per
    /// outcome. The elements are Hermitian PSD and sum to `I_H`.
    pub fn xi_frame(&self, nu: &DensityMatrix) -> Result<OperatorFrame> {
        let (dim_h, dim_k) = self
            .split
            .ok_or_else(|| Error::InvalidArgument("bipartite split not set on this POVM".into()))?;
        if nu.dim() != dim_k {
            return Err(Error::ShapeMismatch(format!(
                "ancilla dimension {} does not match split ancilla {}",
                nu.dim(),
                dim_k
            )));
        }
        let nu_t = nu.transposed();
        let mut elements = Vec::with_capacity(self.elements.len());
        for pi in &self.elements {
            let kets = diagonalize_psd(pi, dim_h, dim_k)?;
            let mut xi = CMatrix::zeros(dim_h, dim_h);
            for ket in &kets {
                let psi = devectorize(ket);
                xi = xi + &psi * &nu_t * psi.adjoint();
            }
            elements.push(xi.symmetrize());
        }
        OperatorFrame::new(elements)
    }

    /// Universality: the induced system operators `Ξ_i[ν]` form a frame.
    pub fn is_universal(&self, nu: &DensityMatrix, tol: f64) -> Result<bool> {
        Ok(self.universality_report(nu, tol)?.universal)
    }

    /// Universality verdict together with the frame bounds: a barely
    /// invertible frame still makes a valid detector, just a noisy one, so
    /// the bounds matter diagnostically.
    pub fn universality_report(&self, nu: &DensityMatrix, tol: f64) -> Result<UniversalityReport> {
        let frame = self.xi_frame(nu)?;
        let (lower, upper) = frame.frame_bounds();
        Ok(UniversalityReport {
            universal: frame.is_frame(tol),
            bound_lower: lower,
            bound_upper: upper,
        })
    }

    /// Informational completeness of a single-system POVM: its elements span
    /// the full operator space on `H`.
    pub fn is_info_complete(&self, tol: f64) -> bool {
        if self.elements.len() < self.dim * self.dim {
            return false;
        }
        OperatorFrame::new(self.elements.clone())
            .map(|f| f.is_frame(tol))
            .unwrap_or(false)
    }

    /// Born probabilities `p_i = Tr[(ρ⊗ν)Π_i]` (or `Tr[ρΠ_i]` when no
    /// ancilla is given). Tiny negative values are clipped to zero and the
    /// vector renormalized; a clip beyond tolerance is an error.
    pub fn outcome_probabilities(
        &self,
        rho: &DensityMatrix,
        nu: Option<&DensityMatrix>,
    ) -> Result<Vec<f64>> {
        let state = match nu {
            Some(nu) => rho.matrix().kron(nu.matrix()),
            None => rho.matrix().clone(),
        };
        if state.shape() != (self.dim, self.dim) {
            return Err(Error::ShapeMismatch(format!(
                "state dimension {:?} does not match POVM dimension {}",
                state.shape(),
                self.dim
            )));
        }
        let mut probs = Vec::with_capacity(self.elements.len());
        let mut worst_clip = 0.0f64;
        for pi in &self.elements {
            let p = (&state * pi).trace().re;
            if p < 0.0 {
                worst_clip = worst_clip.max(-p);
            }
            probs.push(p.max(0.0));
        }
        if worst_clip > PROB_CLIP_TOL {
            return Err(Error::InvalidProbabilities(format!(
                "negative probability {:.3e} exceeds the clip tolerance",
                -worst_clip
            )));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidProbabilities(format!(
                "probabilities sum to {total}, expected 1"
            )));
        }
        for p in &mut probs {
            *p /= total;
        }
        Ok(probs)
    }
}

/// Report produced by [`Povm::validate`].
#[derive(Debug, Clone)]
pub struct PovmReport {
    pub element_min_eigenvalues: Vec<f64>,
    pub hermitian_defects: Vec<f64>,
    pub completeness_defect: f64,
}

/// Report produced by [`Povm::universality_report`].
#[derive(Debug, Clone, Copy)]
pub struct UniversalityReport {
    pub universal: bool,
    pub bound_lower: f64,
    pub bound_upper: f64,
}

fn diagonalize_psd(pi: &CMatrix, dim_h: usize, dim_k: usize) -> Result<Vec<DoubleKet>> {
    let eig = pi.herm_eig()?;
    if eig.min_eigenvalue() < -PSD_EIG_TOL {
        return Err(Error::NotPsd {
            min_eig: eig.min_eigenvalue(),
        });
    }
    let max_eig = eig.max_eigenvalue().max(0.0);
    let threshold = RANK_REL_TOL * max_eig;
    let mut kets = Vec::new();
    for (j, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda <= threshold {
            continue;
        }
        let scale = lambda.sqrt();
        let amps: Vec<Complex64> = eig.eigenvector(j).into_iter().map(|z| z * scale).collect();
        kets.push(DoubleKet::new(dim_h, dim_k, amps)?);
    }
    Ok(kets)
}

/// Processing coefficients `f_i = Tr[Θ_i† O]` for a dual frame.
pub fn processing_function(dual: &DualFrame, o: &Observable) -> Result<ProcessingFunction> {
    let mut values = Vec::with_capacity(dual.len());
    for theta in dual.elements() {
        values.push(hs_inner(theta, o.matrix())?);
    }
    Ok(ProcessingFunction::new(values))
}

/// The exact (infinite-statistics) estimate `Σ_i f_i Tr[(ρ⊗ν)Π_i]`.
///
/// Equals `Tr[ρO]` whenever `f` came from a valid dual of `Ξ_i[ν]`.
pub fn estimate_expectation_exact(
    rho: &DensityMatrix,
    nu: &DensityMatrix,
    povm: &Povm,
    f: &ProcessingFunction,
) -> Result<Complex64> {
    if f.len() != povm.len() {
        return Err(Error::ShapeMismatch(format!(
            "processing function has {} values for a {}-outcome POVM",
            f.len(),
            povm.len()
        )));
    }
    let joint = rho.matrix().kron(nu.matrix());
    if joint.shape() != (povm.dim(), povm.dim()) {
        return Err(Error::ShapeMismatch(format!(
            "ρ⊗ν has dimension {:?} but the POVM lives on {}",
            joint.shape(),
            povm.dim()
        )));
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for (i, pi) in povm.elements().iter().enumerate() {
        acc += f.value(i) * (&joint * pi).trace();
    }
    Ok(acc)
}

/// Builds an info-complete POVM from a frame of positive operators via
/// `Π_i = S^{-1/2} K_i S^{-1/2}` with `S = Σ_i K_i`.
pub fn info_complete_from_positive(k_list: &[CMatrix]) -> Result<Povm> {
    let first = k_list
        .first()
        .ok_or_else(|| Error::Empty("need at least one positive operator".into()))?;
    let dim = first.rows();
    let mut s = CMatrix::zeros(dim, dim);
    for k in k_list {
        if k.shape() != (dim, dim) {
            return Err(Error::ShapeMismatch(
                "operators must share one square shape".into(),
            ));
        }
        s = s + k;
    }
    let s_inv_sqrt = s.psd_power(-0.5).map_err(|e| match e {
        Error::Singular(_) => Error::Singular("S = ΣK_i is singular".into()),
        other => other,
    })?;
    let elements: Vec<CMatrix> = k_list
        .iter()
        .map(|k| (&s_inv_sqrt * k * &s_inv_sqrt).symmetrize())
        .collect();
    Povm::new(elements, None)
}
