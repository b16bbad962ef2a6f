//! Operator frames, informationally complete POVMs, and universal quantum
//! detectors.
//!
//! A universal detector measures one fixed joint observable on a system plus
//! a fixed ancilla state and recovers the expectation of *any* system
//! operator by reprocessing the outcome statistics with operator-dependent
//! coefficients. This crate provides the machinery end to end:
//!
//! - [`matrix`] / [`hs`]: dense complex matrices, Hermitian eigendecomposition,
//!   and the Hilbert-Schmidt double-ket vectorization with its partial-trace
//!   identities;
//! - [`frames`]: operator frames, frame operators and bounds, canonical and
//!   alternate dual frames, expansion/reconstruction;
//! - [`povm`]: POVM validation, spectral decomposition of elements, the
//!   system frame induced by an ancilla state, universality and
//!   informational-completeness checks;
//! - [`covariant`]: discrete Weyl-Heisenberg systems, Bell POVMs, the
//!   group-covariant ancilla and its unique dual, and closed-form SU(d)
//!   frame operators, duals, and optimal processing;
//! - [`estimation`]: Born-rule sampling, Haar-random unitaries, Monte Carlo
//!   expectation estimates, and analytic vs. empirical variance figures;
//! - [`cli`]: the `uframe` experiment runner.
//!
//! All values are immutable after construction and every operation is a pure
//! function, so everything here is safe to share across threads.

pub mod cli;
pub mod covariant;
pub mod error;
pub mod estimation;
pub mod frames;
pub mod hs;
pub mod io;
pub mod matrix;
pub mod povm;
pub mod tolerances;

pub use error::{Error, Result};
pub use hs::DoubleKet;
pub use matrix::{CMatrix, HermitianEig};
