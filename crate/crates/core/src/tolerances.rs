//! Numerical tolerances used across the crate.
//!
//! Everything runs in f64 at desk scale (dimensions up to ~32), so the
//! thresholds below are generous relative to machine precision while still
//! catching genuine structural failures.

/// Frobenius-norm tolerance on `A - A†` before an input is accepted as
/// Hermitian (and then symmetrized). Absorbs rounding drift from upstream
/// products without letting genuinely non-Hermitian operators through.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Eigenvalues of a nominally PSD matrix may dip this far below zero before
/// the matrix is rejected; anything in `[-PSD_EIG_TOL, 0)` is clipped to 0.
pub const PSD_EIG_TOL: f64 = 1e-10;

/// Relative rank-revealing threshold: eigenvalues below
/// `RANK_REL_TOL × max eigenvalue` are treated as zero when diagonalizing
/// POVM elements or inverting PSD operators.
pub const RANK_REL_TOL: f64 = 1e-12;

/// Default relative condition threshold for the frame property: a set is a
/// frame when `min eig(F) > FRAME_COND_TOL × max eig(F)`.
pub const FRAME_COND_TOL: f64 = 1e-10;

/// Frobenius tolerance on the completeness relation `Σ|Ξ⟩⟩⟨⟨Θ| = I` for a
/// frame/dual pair, and on `ΣΠ_i = I` for POVMs.
pub const COMPLETENESS_TOL: f64 = 1e-8;

/// Largest negative Born probability that is silently clipped to zero;
/// anything worse indicates a real bug upstream and is an error.
pub const PROB_CLIP_TOL: f64 = 1e-8;

/// Tolerance on trace constraints for density matrices (`Tr ρ = 1`) and
/// covariant duals (`Tr ξ = 1`, `Tr[ν^τ ξ] = d`).
pub const TRACE_TOL: f64 = 1e-8;

/// Smallest `|Tr[U_β ν*]|` accepted in the group-covariant dual; below this
/// the dual coefficients blow up and the ancilla is rejected.
pub const OVERLAP_TOL: f64 = 1e-12;
