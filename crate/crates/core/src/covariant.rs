//! Group-covariant detectors.
//!
//! Two constructions live here. The discrete one realizes the abelian group
//! `ℤ_d × ℤ_d` through the Weyl-Heisenberg unitaries `U_(a,b) = Z^a X^b`,
//! whose Bell POVM is orthogonal with `d²` outcomes; for an ancilla `ν` with
//! all `Tr[U_β ν*] ≠ 0` the induced system operators form a frame whose dual
//! is unique and has a closed form. The continuous one covers `SU(d)`
//! covariance, where Schur's lemma collapses the frame operator, its
//! inverse, the canonical dual `ξ = a ν^τ + b I`, and the optimal covariant
//! processing into closed-form expressions in `p = Tr[(ν^τ)²]`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::estimation::HaarSampler;
use crate::frames::{DualFrame, DualProvenance, FrameOperator, OperatorFrame};
use crate::hs::{hs_inner, vectorize};
use crate::matrix::CMatrix;
use crate::povm::{DensityMatrix, Observable, Povm};
use crate::tolerances::{HERMITIAN_TOL, OVERLAP_TOL, PSD_EIG_TOL, TRACE_TOL};

/// The `d²` Weyl-Heisenberg unitaries `U_(a,b) = Z^a X^b` with
/// `Z|k⟩ = ω^k|k⟩`, `X|k⟩ = |k+1 mod d⟩`, `ω = exp(2πi/d)`, indexed by
/// `α = a·d + b` so that `U_0 = I`.
#[derive(Debug, Clone)]
pub struct WeylSystem {
    d: usize,
    unitaries: Vec<CMatrix>,
}

impl WeylSystem {
    pub fn new(d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidArgument(format!(
                "Weyl system needs d ≥ 2, got {d}"
            )));
        }
        let omega = Complex64::new(0.0, 2.0 * std::f64::consts::PI / d as f64).exp();
        let z = CMatrix::from_fn(d, d, |r, c| {
            if r == c {
                omega.powu(r as u32)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let x = CMatrix::from_fn(d, d, |r, c| {
            if r == (c + 1) % d {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let mut z_pow = vec![CMatrix::identity(d)];
        let mut x_pow = vec![CMatrix::identity(d)];
        for k in 1..d {
            z_pow.push(&z_pow[k - 1] * &z);
            x_pow.push(&x_pow[k - 1] * &x);
        }
        let mut unitaries = Vec::with_capacity(d * d);
        for za in &z_pow {
            for xb in &x_pow {
                unitaries.push(za * xb);
            }
        }
        Ok(Self { d, unitaries })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.unitaries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.unitaries.is_empty()
    }

    pub fn unitaries(&self) -> &[CMatrix] {
        &self.unitaries
    }

    pub fn unitary(&self, alpha: usize) -> &CMatrix {
        &self.unitaries[alpha]
    }

    pub fn flat_index(&self, a: usize, b: usize) -> usize {
        (a % self.d) * self.d + (b % self.d)
    }

    pub fn index_pair(&self, alpha: usize) -> (usize, usize) {
        (alpha / self.d, alpha % self.d)
    }

    /// The commutation cocycle: `U_α U_β U_α† = e^{i c(α,β)} U_β` with
    /// `c((a,b),(a′,b′)) = (2π/d)(a b′ − a′ b)`.
    pub fn cocycle(&self, alpha: usize, beta: usize) -> f64 {
        let (a, b) = self.index_pair(alpha);
        let (ap, bp) = self.index_pair(beta);
        (2.0 * std::f64::consts::PI / self.d as f64) * (a as f64 * bp as f64 - ap as f64 * b as f64)
    }

    /// Largest deviation from `Tr[U_α† U_β] = d δ_αβ` over all pairs.
    pub fn orthogonality_defect(&self) -> f64 {
        let d = self.d as f64;
        let mut worst: f64 = 0.0;
        for (i, ui) in self.unitaries.iter().enumerate() {
            for (j, uj) in self.unitaries.iter().enumerate() {
                let t = hs_inner(ui, uj).expect("same shape");
                let expected = if i == j { d } else { 0.0 };
                worst = worst.max((t - Complex64::new(expected, 0.0)).norm());
            }
        }
        worst
    }

    /// Largest deviation from the projective commutation relation over all
    /// pairs.
    pub fn cocycle_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for alpha in 0..self.len() {
            for beta in 0..self.len() {
                let ua = &self.unitaries[alpha];
                let ub = &self.unitaries[beta];
                let lhs = ua * ub * ua.adjoint();
                let rhs = ub * Complex64::new(0.0, self.cocycle(alpha, beta)).exp();
                worst = worst.max((lhs - rhs).frobenius_norm());
            }
        }
        worst
    }

    /// The induced system frame `Ξ_α[ν] = (1/d) U_α ν^τ U_α†`.
    pub fn xi_frame(&self, nu: &DensityMatrix) -> Result<OperatorFrame> {
        if nu.dim() != self.d {
            return Err(Error::ShapeMismatch(format!(
                "ancilla dimension {} does not match d = {}",
                nu.dim(),
                self.d
            )));
        }
        let nu_t = nu.transposed();
        let scale = 1.0 / self.d as f64;
        let elements = self
            .unitaries
            .iter()
            .map(|u| (u * &nu_t * u.adjoint()).scale(scale).symmetrize())
            .collect();
        OperatorFrame::new(elements)
    }
}

/// A Bell POVM `Π_i = (α_i/d)|U_i⟩⟩⟨⟨U_i|`: weighted projectors onto
/// maximally entangled states.
#[derive(Debug, Clone)]
pub struct BellPovm {
    weights: Vec<f64>,
    povm: Povm,
}

impl BellPovm {
    /// Builds the POVM from unitaries and positive weights, failing when the
    /// elements do not sum to the identity.
    pub fn new(unitaries: &[CMatrix], weights: &[f64]) -> Result<Self> {
        if unitaries.len() != weights.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} unitaries but {} weights",
                unitaries.len(),
                weights.len()
            )));
        }
        if unitaries.is_empty() {
            return Err(Error::Empty("Bell POVM needs at least one unitary".into()));
        }
        let d = unitaries[0].rows();
        for (i, u) in unitaries.iter().enumerate() {
            let defect = u.unitarity_defect();
            if defect > 1e-10 {
                return Err(Error::InvalidArgument(format!(
                    "matrix {i} is not unitary (defect {defect:.3e})"
                )));
            }
        }
        if weights.iter().any(|&w| w <= 0.0 || !w.is_finite()) {
            return Err(Error::InvalidArgument(
                "Bell weights must be positive".into(),
            ));
        }
        let mut elements = Vec::with_capacity(unitaries.len());
        for (u, &w) in unitaries.iter().zip(weights) {
            let ket = vectorize(u);
            let n = ket.len();
            let scale = Complex64::new(w / d as f64, 0.0);
            elements.push(CMatrix::from_fn(n, n, |i, j| {
                scale * ket.amplitude(i) * ket.amplitude(j).conj()
            }));
        }
        let povm = Povm::new(elements, Some((d, d)))?;
        Ok(Self {
            weights: weights.to_vec(),
            povm,
        })
    }

    /// The orthogonal `d²`-outcome Bell POVM of a Weyl system (all weights 1).
    pub fn from_weyl(w: &WeylSystem) -> Result<Self> {
        Self::new(w.unitaries(), &vec![1.0; w.len()])
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn povm(&self) -> &Povm {
        &self.povm
    }

    pub fn into_povm(self) -> Povm {
        self.povm
    }
}

/// The group-generated ancilla `ν = I/d + Σ_{α>0} U_α / (d(d²−1))`,
/// Hermitized.
///
/// The raw sum is not Hermitian for a generic Weyl realization.
/// Hermitizing keeps the state physical whenever it stays PSD (it does for
/// d ≤ 5, checked numerically), but for even d it cancels the components
/// along unitaries with `ab ≡ d/2 (mod d)`, so `Tr[U ν*]` vanishes there and
/// the induced frame is singular; callers needing a universal Weyl detector
/// for even d must pick a different full-rank ancilla.
pub fn abelian_ancilla(d: usize) -> Result<DensityMatrix> {
    let w = WeylSystem::new(d)?;
    let df = d as f64;
    let mut nu = CMatrix::identity(d).scale(1.0 / df);
    let coeff = 1.0 / (df * (df * df - 1.0));
    for u in &w.unitaries()[1..] {
        nu = nu + u.scale(coeff);
    }
    let herm = nu.symmetrize();
    let eig = herm.herm_eig()?;
    if eig.min_eigenvalue() < -PSD_EIG_TOL {
        return Err(Error::NotPsd {
            min_eig: eig.min_eigenvalue(),
        });
    }
    DensityMatrix::new(herm)
}

/// The unique dual of the Weyl frame `Ξ_α = (1/d) U_α ν^τ U_α†`:
/// `Θ_α = (1/d) Σ_β U_β e^{−i c(β,α)} / Tr[U_β ν*]`.
pub fn abelian_dual(w: &WeylSystem, nu: &DensityMatrix) -> Result<DualFrame> {
    if nu.dim() != w.dim() {
        return Err(Error::ShapeMismatch(format!(
            "ancilla dimension {} does not match d = {}",
            nu.dim(),
            w.dim()
        )));
    }
    let nu_conj = nu.matrix().conjugate();
    let mut denominators = Vec::with_capacity(w.len());
    for (beta, u) in w.unitaries().iter().enumerate() {
        let t = (u * &nu_conj).trace();
        if t.norm() < OVERLAP_TOL {
            return Err(Error::VanishingOverlap {
                index: beta,
                value: t.norm(),
            });
        }
        denominators.push(t);
    }
    let d = w.dim();
    let scale = Complex64::new(1.0 / d as f64, 0.0);
    let mut elements = Vec::with_capacity(w.len());
    for alpha in 0..w.len() {
        let mut theta = CMatrix::zeros(d, d);
        for (beta, u) in w.unitaries().iter().enumerate() {
            let phase = Complex64::new(0.0, -w.cocycle(beta, alpha)).exp();
            theta = theta + u * (phase / denominators[beta]);
        }
        elements.push(theta * scale);
    }
    DualFrame::new(elements, DualProvenance::Covariant)
}

/// Scalar parameters of the SU(d) covariant frame for an ancilla of purity
/// `p = Tr[(ν^τ)²]`: the canonical dual is `ξ = a ν^τ + b I` with
/// `a = (d²−1)/(dp−1)` and `b = (p−d)/(dp−1)`, so `a + b·d = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SudFrameParams {
    pub d: usize,
    pub p: f64,
    pub a: f64,
    pub b: f64,
}

/// Purity of the transposed ancilla; transposition preserves it.
fn ancilla_purity(nu: &DensityMatrix) -> f64 {
    nu.purity()
}

fn check_invertible_purity(d: usize, p: f64) -> Result<()> {
    let df = d as f64;
    if p <= 1.0 / df + 1e-10 {
        return Err(Error::Singular(format!(
            "frame singular: nu = I/d (purity {p:.6} ≤ 1/d)"
        )));
    }
    Ok(())
}

pub fn sud_params(nu: &DensityMatrix) -> Result<SudFrameParams> {
    let d = nu.dim();
    let p = ancilla_purity(nu);
    check_invertible_purity(d, p)?;
    let df = d as f64;
    let denom = df * p - 1.0;
    Ok(SudFrameParams {
        d,
        p,
        a: (df * df - 1.0) / denom,
        b: (p - df) / denom,
    })
}

fn identity_projector_combination(d: usize, id_coeff: f64, rest_coeff: f64) -> CMatrix {
    // c1 · (1/d)|I⟩⟩⟨⟨I| + c2 · (I − (1/d)|I⟩⟩⟨⟨I|) on the d²-dim space
    let ket = vectorize(&CMatrix::identity(d));
    let n = d * d;
    let inv_d = 1.0 / d as f64;
    CMatrix::from_fn(n, n, |i, j| {
        let p_entry = ket.amplitude(i) * ket.amplitude(j).conj() * inv_d;
        let id_entry = if i == j {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        };
        p_entry * Complex64::new(id_coeff - rest_coeff, 0.0)
            + id_entry * Complex64::new(rest_coeff, 0.0)
    })
}

/// Closed-form SU(d) frame operator
/// `F = (1/d)|I⟩⟩⟨⟨I| + ((dp−1)/(d²−1)) (I − (1/d)|I⟩⟩⟨⟨I|)`, with
/// eigenvalue 1 on the identity direction and `(dp−1)/(d²−1)` elsewhere.
pub fn sud_frame_operator(nu: &DensityMatrix) -> FrameOperator {
    let d = nu.dim();
    let df = d as f64;
    let p = ancilla_purity(nu);
    let rest = (df * p - 1.0) / (df * df - 1.0);
    FrameOperator::from_matrix(identity_projector_combination(d, 1.0, rest))
}

/// Closed-form inverse `F⁻¹`, rejecting the singular ancilla `ν = I/d`.
pub fn sud_frame_operator_inverse(nu: &DensityMatrix) -> Result<FrameOperator> {
    let d = nu.dim();
    let df = d as f64;
    let p = ancilla_purity(nu);
    check_invertible_purity(d, p)?;
    let rest = (df * df - 1.0) / (df * p - 1.0);
    Ok(FrameOperator::from_matrix(identity_projector_combination(
        d, 1.0, rest,
    )))
}

/// The single operator generating a covariant dual family
/// `Θ_α = U_α ξ U_α†`. Restricted to the self-adjoint case, which is what
/// Hermitian-observable processing uses.
#[derive(Debug, Clone)]
pub struct CovariantXi {
    matrix: CMatrix,
}

impl CovariantXi {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        let defect = matrix.hermitian_defect();
        if defect > HERMITIAN_TOL {
            return Err(Error::NotHermitian {
                defect,
                tol: HERMITIAN_TOL,
            });
        }
        Ok(Self {
            matrix: matrix.symmetrize(),
        })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    /// `Tr[ξ²]`, the quantity the covariant-dual noise coefficient depends on.
    pub fn purity_trace(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }
}

/// The canonical (and optimal) covariant dual generator
/// `ξ = a ν^τ + b I`, which satisfies `Tr[ξ] = 1` and `Tr[ν^τ ξ] = d`.
pub fn sud_canonical_dual_xi(nu: &DensityMatrix) -> Result<CovariantXi> {
    let params = sud_params(nu)?;
    let xi = nu.transposed().scale(params.a) + CMatrix::identity(nu.dim()).scale(params.b);
    CovariantXi::new(xi)
}

/// Whether `Θ_α = U_α ξ U_α†` is a dual of the covariant frame for `ν`:
/// both trace constraints `Tr[ξ] = 1` and `Tr[ν^τ ξ] = d` must hold.
pub fn covariant_dual_check(xi: &CovariantXi, nu: &DensityMatrix) -> bool {
    if xi.dim() != nu.dim() {
        return false;
    }
    let tr = xi.matrix().trace().re;
    let pairing = (nu.transposed() * xi.matrix()).trace().re;
    (tr - 1.0).abs() <= TRACE_TOL && (pairing - nu.dim() as f64).abs() <= TRACE_TOL
}

/// Covariant processing value `f_U(ν, O) = Tr[(U ξ U†)† O]`.
pub fn sud_processing_value(xi: &CovariantXi, u: &CMatrix, o: &Observable) -> Result<Complex64> {
    if u.shape() != (xi.dim(), xi.dim()) || o.dim() != xi.dim() {
        return Err(Error::ShapeMismatch(format!(
            "ξ is {}x{}, U is {:?}, O is {}x{}",
            xi.dim(),
            xi.dim(),
            u.shape(),
            o.dim(),
            o.dim()
        )));
    }
    let theta = u * xi.matrix() * u.adjoint();
    hs_inner(&theta, o.matrix())
}

/// Projects a Hermitian matrix onto the tangent space of the covariant dual
/// constraints: the result has zero trace and zero pairing with `ν^τ`, so
/// `ξ_opt + t·(projection)` stays a valid covariant dual for every `t`.
pub fn constraint_tangent_projection(g: &CMatrix, nu: &DensityMatrix) -> CMatrix {
    let d = nu.dim();
    let id = CMatrix::identity(d);
    let nt = nu.transposed();
    // Gram-Schmidt the pair {I, ν^τ} in the HS inner product
    let e1 = id.scale(1.0 / (d as f64).sqrt());
    let overlap = hs_inner(&e1, &nt).expect("same shape");
    let nt_perp = &nt - &(&e1 * overlap);
    let nt_norm = nt_perp.frobenius_norm();
    let mut out = g.clone();
    let c1 = hs_inner(&e1, &out).expect("same shape");
    out = &out - &(&e1 * c1);
    if nt_norm > 1e-14 {
        let e2 = nt_perp.scale(1.0 / nt_norm);
        let c2 = hs_inner(&e2, &out).expect("same shape");
        out = &out - &(&e2 * c2);
    }
    out.symmetrize()
}

/// Materializes the continuous SU(d) frame `Ξ_U = U ν^τ U†` as a finite
/// weighted frame of `n` Haar samples, with quadrature weight `d/n` folded
/// into each element so that its frame operator estimates the closed form.
pub fn sampled_sud_frame(nu: &DensityMatrix, n: usize, seed: u64) -> Result<OperatorFrame> {
    if n == 0 {
        return Err(Error::Empty("need at least one Haar sample".into()));
    }
    let d = nu.dim();
    let nu_t = nu.transposed();
    let mut sampler = HaarSampler::new(d, seed);
    let elements: Vec<CMatrix> = (0..n)
        .map(|_| {
            let u = sampler.next_unitary();
            (&u * &nu_t * u.adjoint()).symmetrize()
        })
        .collect();
    let weights = vec![d as f64 / n as f64; n];
    OperatorFrame::weighted(elements, &weights)
}
