//! Monte Carlo estimation: Born-rule outcome sampling, Haar-random
//! unitaries, expectation estimates with standard errors, and the analytic
//! and empirical noise figures of covariant detectors.
//!
//! Statistical conventions: the Haar measure is always the normalized one
//! (integrals are averages). The continuous covariant POVM has outcome
//! density `d·Tr[ρ U ν^τ U†]` with respect to it, which is what the
//! importance weights below implement. For Hermitian observables only the
//! real part of the processing function is processed; its imaginary part
//! averages to zero and is discarded.
//!
//! Sampling parallelizes over fixed-size chunks with one ChaCha substream
//! per chunk, so results are bit-identical for a given seed regardless of
//! the worker count. `UFRAME_THREADS` caps the sampling thread pool.

use std::ops::Range;
use std::sync::OnceLock;

use num_complex::Complex64;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::covariant::{covariant_dual_check, CovariantXi};
use crate::error::{Error, Result};
use crate::matrix::CMatrix;
use crate::povm::{DensityMatrix, Observable, Povm, ProcessingFunction};

// ---------------------------------------------------------------------------
// Haar sampling
// ---------------------------------------------------------------------------

/// Seeded stream of Haar-distributed unitaries of a fixed dimension.
#[derive(Debug, Clone)]
pub struct HaarSampler {
    dim: usize,
    rng: ChaCha8Rng,
}

impl HaarSampler {
    pub fn new(dim: usize, seed: u64) -> Self {
        Self {
            dim,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn next_unitary(&mut self) -> CMatrix {
        haar_unitary(self.dim, &mut self.rng)
    }

    /// A Haar-random pure state, taken as the first column of a Haar
    /// unitary applied to the fixed reference `|0⟩`.
    pub fn next_state(&mut self) -> Vec<Complex64> {
        let u = self.next_unitary();
        (0..self.dim).map(|r| u.get(r, 0)).collect()
    }
}

/// Haar-random unitary via QR of a complex Ginibre matrix with the
/// R-diagonal phase correction.
pub fn haar_unitary(d: usize, rng: &mut impl Rng) -> CMatrix {
    let scale = 1.0 / 2f64.sqrt();
    let g = nalgebra::DMatrix::<Complex64>::from_fn(d, d, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re * scale, im * scale)
    });
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..d {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 0.0 {
            rjj / rjj.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        for i in 0..d {
            q[(i, j)] *= phase;
        }
    }
    CMatrix::from_fn(d, d, |i, j| q[(i, j)])
}

// ---------------------------------------------------------------------------
// Deterministic chunked parallelism
// ---------------------------------------------------------------------------

const CHUNK: usize = 4096;

fn thread_pool() -> Option<&'static rayon::ThreadPool> {
    static POOL: OnceLock<Option<rayon::ThreadPool>> = OnceLock::new();
    POOL.get_or_init(|| {
        std::env::var("UFRAME_THREADS")
            .ok()
            .and_then(|s| s.parse::<usize>().ok())
            .filter(|&n| n >= 1)
            .map(|n| {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build()
                    .expect("failed to build sampling thread pool")
            })
    })
    .as_ref()
}

/// Maps fixed-size index chunks through `f`, each chunk on its own ChaCha
/// substream `(seed, phase, chunk index)`. Chunk boundaries do not depend on
/// the thread count, and results come back in chunk order, so the output is
/// reproducible for a given seed alone.
fn map_chunks<T, F>(total: usize, seed: u64, phase: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng, Range<usize>) -> T + Sync,
{
    let ranges: Vec<(u64, Range<usize>)> = (0..total)
        .step_by(CHUNK)
        .enumerate()
        .map(|(idx, start)| (idx as u64, start..(start + CHUNK).min(total)))
        .collect();
    let work = |(idx, range): (u64, Range<usize>)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream((phase << 32) | idx);
        f(&mut rng, range)
    };
    match thread_pool() {
        Some(pool) => pool.install(|| ranges.into_par_iter().map(work).collect()),
        None => ranges.into_par_iter().map(work).collect(),
    }
}

/// Streaming mean/variance accumulator (Welford), mergeable across chunks.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(self, other: Self) -> Self {
        if self.n == 0 {
            return other;
        }
        if other.n == 0 {
            return self;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        let nf = n as f64;
        Self {
            n,
            mean: self.mean + delta * other.n as f64 / nf,
            m2: self.m2 + other.m2 + delta * delta * self.n as f64 * other.n as f64 / nf,
        }
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub fn std_error(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            (self.variance() / self.n as f64).sqrt()
        }
    }
}

/// A Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub samples: u64,
}

impl McEstimate {
    fn from_moments(m: Moments) -> Self {
        Self {
            estimate: m.mean(),
            std_error: m.std_error(),
            samples: m.count(),
        }
    }

    pub fn from_samples(samples: &[f64]) -> Self {
        let mut m = Moments::default();
        for &x in samples {
            m.push(x);
        }
        Self::from_moments(m)
    }

    /// `|estimate − reference| / std_error`, infinite when the error is zero
    /// but the deviation is not.
    pub fn z_score(&self, reference: f64) -> f64 {
        let dev = (self.estimate - reference).abs();
        if dev == 0.0 {
            0.0
        } else if self.std_error == 0.0 {
            f64::INFINITY
        } else {
            dev / self.std_error
        }
    }
}

// ---------------------------------------------------------------------------
// Born-rule sampling and processing
// ---------------------------------------------------------------------------

/// One sampled detector outcome (a flat POVM index).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShotRecord {
    pub outcome: usize,
}

/// Draws `n` i.i.d. outcomes from the Born distribution of `(ρ⊗ν, POVM)`;
/// `nu = None` measures a single-system POVM on `ρ` alone.
pub fn sample_outcomes(
    rho: &DensityMatrix,
    nu: Option<&DensityMatrix>,
    povm: &Povm,
    n: usize,
    seed: u64,
) -> Result<Vec<ShotRecord>> {
    if n == 0 {
        return Err(Error::Empty("need at least one shot".into()));
    }
    let probs = povm.outcome_probabilities(rho, nu)?;
    let dist =
        WeightedIndex::new(&probs).map_err(|e| Error::InvalidProbabilities(e.to_string()))?;
    let chunks = map_chunks(n, seed, 1, |rng, range| {
        range
            .map(|_| ShotRecord {
                outcome: dist.sample(rng),
            })
            .collect::<Vec<_>>()
    });
    Ok(chunks.into_iter().flatten().collect())
}

/// Frequency table of sampled outcomes.
pub fn tally(records: &[ShotRecord], outcomes: usize) -> Vec<u64> {
    let mut counts = vec![0u64; outcomes];
    for r in records {
        counts[r.outcome] += 1;
    }
    counts
}

/// Sample mean and standard error of the processed outcomes
/// `Re f_{outcome}`.
pub fn mc_estimate(records: &[ShotRecord], f: &ProcessingFunction) -> Result<McEstimate> {
    if records.is_empty() {
        return Err(Error::Empty("no shot records".into()));
    }
    let values = f.real_values();
    let mut m = Moments::default();
    for r in records {
        let v = values.get(r.outcome).ok_or_else(|| {
            Error::ShapeMismatch(format!(
                "outcome {} outside the {}-value processing function",
                r.outcome,
                values.len()
            ))
        })?;
        m.push(*v);
    }
    Ok(McEstimate::from_moments(m))
}

/// A Haar-proposed group element with its importance weight.
#[derive(Debug, Clone)]
pub struct WeightedUnitary {
    pub unitary: CMatrix,
    pub weight: f64,
}

/// Importance-samples the continuous covariant POVM: Haar proposals `U`
/// carry weight `d · Tr[ρ U ν^τ U†]` (nonnegative, self-normalized
/// downstream; identically 1 when `ρ = I/d`).
pub fn covariant_sample(
    rho: &DensityMatrix,
    nu: &DensityMatrix,
    n: usize,
    seed: u64,
) -> Result<Vec<WeightedUnitary>> {
    if n == 0 {
        return Err(Error::Empty("need at least one sample".into()));
    }
    if rho.dim() != nu.dim() {
        return Err(Error::ShapeMismatch(format!(
            "system dimension {} does not match ancilla {}",
            rho.dim(),
            nu.dim()
        )));
    }
    let d = rho.dim();
    let nu_t = nu.transposed();
    let chunks = map_chunks(n, seed, 2, |rng, range| {
        range
            .map(|_| {
                let u = haar_unitary(d, rng);
                let xi = &u * &nu_t * u.adjoint();
                let weight = (d as f64 * (rho.matrix() * &xi).trace().re).max(0.0);
                WeightedUnitary { unitary: u, weight }
            })
            .collect::<Vec<_>>()
    });
    Ok(chunks.into_iter().flatten().collect())
}

/// Self-normalized importance-sampling estimate of the mean of `f` under
/// the weighted samples, with the usual ratio-estimator standard error.
pub fn mc_estimate_weighted(
    samples: &[WeightedUnitary],
    f: impl Fn(&CMatrix) -> f64,
) -> Result<McEstimate> {
    if samples.is_empty() {
        return Err(Error::Empty("no weighted samples".into()));
    }
    let mut wsum = 0.0;
    let mut wfsum = 0.0;
    let values: Vec<(f64, f64)> = samples
        .iter()
        .map(|s| {
            let v = f(&s.unitary);
            wsum += s.weight;
            wfsum += s.weight * v;
            (s.weight, v)
        })
        .collect();
    if wsum <= 0.0 {
        return Err(Error::InvalidProbabilities(
            "all importance weights vanish".into(),
        ));
    }
    let estimate = wfsum / wsum;
    let mut var_acc = 0.0;
    for (w, v) in &values {
        var_acc += (w * (v - estimate)).powi(2);
    }
    Ok(McEstimate {
        estimate,
        std_error: var_acc.sqrt() / wsum,
        samples: samples.len() as u64,
    })
}

// ---------------------------------------------------------------------------
// Covariance of the processing function
// ---------------------------------------------------------------------------

/// Covariance matrix of `(Re f, Im f)` under an outcome distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Covariance2x2 {
    pub var_re: f64,
    pub var_im: f64,
    pub cov: f64,
}

impl Covariance2x2 {
    pub fn eigenvalues(&self) -> (f64, f64) {
        let tr = self.var_re + self.var_im;
        let det = self.var_re * self.var_im - self.cov * self.cov;
        let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
        (tr / 2.0 - disc, tr / 2.0 + disc)
    }

    pub fn is_psd(&self, tol: f64) -> bool {
        self.eigenvalues().0 >= -tol
    }
}

/// Probability-weighted covariance of the processing values: means
/// `ḡ = Σ_i g_i p_i` over the outcome distribution, not sample moments.
pub fn covariance_matrix(f_values: &[Complex64], probs: &[f64]) -> Result<Covariance2x2> {
    if f_values.len() != probs.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} processing values but {} probabilities",
            f_values.len(),
            probs.len()
        )));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > 1e-6 {
        return Err(Error::InvalidProbabilities(format!(
            "probabilities sum to {total}"
        )));
    }
    let mut mean_re = 0.0;
    let mut mean_im = 0.0;
    for (f, &p) in f_values.iter().zip(probs) {
        mean_re += f.re * p;
        mean_im += f.im * p;
    }
    let mut var_re = 0.0;
    let mut var_im = 0.0;
    let mut cov = 0.0;
    for (f, &p) in f_values.iter().zip(probs) {
        let dr = f.re - mean_re;
        let di = f.im - mean_im;
        var_re += dr * dr * p;
        var_im += di * di * p;
        cov += dr * di * p;
    }
    Ok(Covariance2x2 {
        var_re,
        var_im,
        cov,
    })
}

// ---------------------------------------------------------------------------
// Analytic noise figures
// ---------------------------------------------------------------------------

/// Haar-averaged variance of the ideal measurement of a Hermitian `O`:
/// `Δ_obs O² = (Tr[O²] − Tr[O]²/d) / (d+1)`.
pub fn delta_obs_analytic(o: &Observable) -> Result<f64> {
    if !o.is_hermitian() {
        return Err(Error::InvalidArgument(
            "Δ_obs needs a Hermitian observable".into(),
        ));
    }
    let d = o.dim() as f64;
    let t1 = o.matrix().trace().re;
    let t2 = (o.matrix() * o.matrix()).trace().re;
    Ok((t2 - t1 * t1 / d) / (d + 1.0))
}

/// Haar-averaged variance of the covariant-dual estimator:
/// `Δ_ξ O² = ((Tr[ξ²] − 1)/(d − 1)) · Δ_obs O²`.
pub fn delta_xi_analytic(xi: &CovariantXi, o: &Observable) -> Result<f64> {
    if xi.dim() != o.dim() {
        return Err(Error::ShapeMismatch(format!(
            "ξ is {}-dimensional but O is {}-dimensional",
            xi.dim(),
            o.dim()
        )));
    }
    let d = xi.dim() as f64;
    let coeff = (xi.purity_trace() - 1.0) / (d - 1.0);
    Ok(coeff * delta_obs_analytic(o)?)
}

/// Noise coefficient of the optimal covariant dual for ancilla purity `p`:
/// `(d² + d − 1 − p)/(dp − 1)`, strictly decreasing in `p`, equal to `d + 2`
/// at `p = 1`.
pub fn delta_opt_analytic(p: f64, d: usize) -> Result<f64> {
    let df = d as f64;
    if !(p > 1.0 / df && p <= 1.0 + 1e-12) {
        return Err(Error::InvalidArgument(format!(
            "purity {p} outside (1/{d}, 1]"
        )));
    }
    Ok((df * df + df - 1.0 - p) / (df * p - 1.0))
}

// ---------------------------------------------------------------------------
// Monte Carlo noise figures
// ---------------------------------------------------------------------------

/// Monte Carlo version of `Δ_obs`: the mean over Haar-random pure states of
/// the per-state variance `⟨O²⟩ − ⟨O⟩²`.
pub fn delta_obs_mc(o: &Observable, n: usize, seed: u64) -> Result<McEstimate> {
    if !o.is_hermitian() {
        return Err(Error::InvalidArgument(
            "Δ_obs needs a Hermitian observable".into(),
        ));
    }
    if n == 0 {
        return Err(Error::Empty("need at least one sample".into()));
    }
    let d = o.dim();
    let o2 = o.matrix() * o.matrix();
    let partials = map_chunks(n, seed, 3, |rng, range| {
        let mut m = Moments::default();
        for _ in range {
            let psi = haar_state(d, rng);
            let mean_o = state_expectation(o.matrix(), &psi);
            let mean_o2 = state_expectation(&o2, &psi);
            m.push(mean_o2 - mean_o * mean_o);
        }
        m
    });
    let total = partials
        .into_iter()
        .fold(Moments::default(), Moments::merge);
    Ok(McEstimate::from_moments(total))
}

/// Monte Carlo version of `Δ_ξ`: outer average over Haar-random pure states
/// of (second moment of `f` under the covariant outcome density, estimated
/// with `n_group` importance samples) minus the squared ideal mean.
pub fn delta_xi_mc(
    xi: &CovariantXi,
    nu: &DensityMatrix,
    o: &Observable,
    n_states: usize,
    n_group: usize,
    seed: u64,
) -> Result<McEstimate> {
    let samples = delta_xi_state_samples(xi, nu, o, n_states, n_group, seed)?;
    let mut m = Moments::default();
    for v in samples {
        m.push(v);
    }
    Ok(McEstimate::from_moments(m))
}

/// The per-state variance samples behind [`delta_xi_mc`], one value per
/// Haar-random outer state, in sampling order.
pub fn delta_xi_state_samples(
    xi: &CovariantXi,
    nu: &DensityMatrix,
    o: &Observable,
    n_states: usize,
    n_group: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if !covariant_dual_check(xi, nu) {
        return Err(Error::InvalidArgument(
            "ξ does not satisfy the covariant dual constraints for this ancilla".into(),
        ));
    }
    if !o.is_hermitian() {
        return Err(Error::InvalidArgument(
            "Δ_ξ needs a Hermitian observable".into(),
        ));
    }
    if o.dim() != xi.dim() {
        return Err(Error::ShapeMismatch(
            "observable dimension differs from ξ".into(),
        ));
    }
    if n_states == 0 || n_group == 0 {
        return Err(Error::Empty(
            "need at least one outer state and one group sample".into(),
        ));
    }
    let d = xi.dim();
    let nu_t = nu.transposed();
    let xi_m = xi.matrix().clone();
    let o_m = o.matrix().clone();
    let chunks = map_chunks(n_states, seed, 4, |rng, range| {
        range
            .map(|_| {
                let psi = haar_state(d, rng);
                let ideal = state_expectation(&o_m, &psi);
                let mut second = 0.0;
                for _ in 0..n_group {
                    let u = haar_unitary(d, rng);
                    let xi_u = &u * &nu_t * u.adjoint();
                    let weight = d as f64 * state_expectation(&xi_u, &psi);
                    let theta = &u * &xi_m * u.adjoint();
                    let f = state_processing(&theta, &o_m);
                    second += weight * f * f;
                }
                second / n_group as f64 - ideal * ideal
            })
            .collect::<Vec<_>>()
    });
    Ok(chunks.into_iter().flatten().collect())
}

fn haar_state(d: usize, rng: &mut impl Rng) -> Vec<Complex64> {
    let u = haar_unitary(d, rng);
    (0..d).map(|r| u.get(r, 0)).collect()
}

fn state_expectation(m: &CMatrix, psi: &[Complex64]) -> f64 {
    let d = psi.len();
    let mut acc = Complex64::new(0.0, 0.0);
    for r in 0..d {
        for c in 0..d {
            acc += psi[r].conj() * m.get(r, c) * psi[c];
        }
    }
    acc.re
}

/// `Re Tr[Θ† O] = Re Σ_{rc} conj(Θ_{rc}) O_{rc}`.
fn state_processing(theta: &CMatrix, o: &CMatrix) -> f64 {
    let mut out = 0.0;
    for r in 0..theta.rows() {
        for c in 0..theta.cols() {
            out += (theta.get(r, c).conj() * o.get(r, c)).re;
        }
    }
    out
}

/// Analytic and empirical noise figures for one covariant detector setup.
#[derive(Debug, Clone)]
pub struct VarianceReport {
    /// Haar-averaged variance of the ideal measurement of `O`.
    pub delta_obs: f64,
    /// Analytic variance of the covariant-dual estimator.
    pub delta_xi: f64,
    /// `delta_xi / delta_obs`; NaN when `O` has no dispersion at all.
    pub ratio: f64,
    /// Monte Carlo estimate of `delta_xi` with its standard error.
    pub empirical: McEstimate,
    /// Outer-state sample budget of the empirical run.
    pub shots: u64,
    /// Ancilla purity `Tr[(ν^τ)²]`.
    pub p: f64,
}

/// Runs the full analytic-versus-Monte-Carlo variance comparison for a
/// covariant dual. Also returns the per-state variance samples for
/// diagnostics and CSV export.
pub fn variance_report(
    xi: &CovariantXi,
    nu: &DensityMatrix,
    o: &Observable,
    n_states: usize,
    n_group: usize,
    seed: u64,
) -> Result<(VarianceReport, Vec<f64>)> {
    let delta_obs = delta_obs_analytic(o)?;
    let delta_xi = delta_xi_analytic(xi, o)?;
    let samples = delta_xi_state_samples(xi, nu, o, n_states, n_group, seed)?;
    let empirical = McEstimate::from_samples(&samples);
    let report = VarianceReport {
        delta_obs,
        delta_xi,
        ratio: if delta_obs > 0.0 {
            delta_xi / delta_obs
        } else {
            f64::NAN
        },
        empirical,
        shots: n_states as u64,
        p: nu.purity(),
    };
    Ok((report, samples))
}

// ---------------------------------------------------------------------------
// Haar identity diagnostics
// ---------------------------------------------------------------------------

/// Diagnostics from [`haar_identity_check`].
#[derive(Debug, Clone)]
pub struct HaarIdentityReport {
    pub d: usize,
    pub samples: usize,
    /// `|Tr[E B⊗B] − Tr[B²]|` for a deterministic test operator; exact.
    pub swap_identity_defect: f64,
    /// Largest per-entry z-score of the sampled mean of `U A U†` against
    /// `(Tr[A]/d)·I` (normalized Haar average).
    pub first_moment_max_z: f64,
    /// Largest per-entry z-score of the sampled two-fold twirl against the
    /// symmetric/antisymmetric projector combination.
    pub second_moment_max_z: f64,
    /// Deviation of the sampled two-fold twirl of the identity, which every
    /// sample fixes exactly.
    pub second_moment_identity_defect: f64,
}

impl HaarIdentityReport {
    pub fn passes(&self, z_limit: f64) -> bool {
        self.swap_identity_defect < 1e-10
            && self.second_moment_identity_defect < 1e-10
            && self.first_moment_max_z <= z_limit
            && self.second_moment_max_z <= z_limit
    }
}

/// Swap operator `E` on `H ⊗ H`: `E|φ⟩⊗|ψ⟩ = |ψ⟩⊗|φ⟩`.
pub fn swap_operator(d: usize) -> CMatrix {
    CMatrix::from_fn(d * d, d * d, |row, col| {
        let (i, j) = (row / d, row % d);
        let (k, l) = (col / d, col % d);
        if i == l && j == k {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    })
}

/// Verifies the swap identity exactly and both Haar moment identities by
/// Monte Carlo at `n` samples.
pub fn haar_identity_check(d: usize, n: usize, seed: u64) -> Result<HaarIdentityReport> {
    if n == 0 {
        return Err(Error::Empty("need at least one sample".into()));
    }
    let mut setup_rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let a = CMatrix::from_fn(d, d, |_, _| {
        Complex64::new(
            setup_rng.random::<f64>() - 0.5,
            setup_rng.random::<f64>() - 0.5,
        )
    })
    .symmetrize();

    // (iii) Tr[E B⊗B] = Tr[B²], exact arithmetic
    let e = swap_operator(d);
    let swap_defect = {
        let lhs = (&e * &a.kron(&a)).trace().re;
        let rhs = (&a * &a).trace().re;
        (lhs - rhs).abs()
    };

    // (i) mean of U A U† vs (Tr[A]/d) I
    let first_expected = CMatrix::identity(d).scale(a.trace().re / d as f64);
    let first = EntryMoments::collect(d, n, seed, 5, |rng| {
        let u = haar_unitary(d, rng);
        &u * &a * u.adjoint()
    });
    let first_moment_max_z = first.max_z(&first_expected);

    // (ii) mean of U⊗² A₂ (U⊗²)† vs the projector combination
    let a2 = a.kron(&a);
    let p_s = (CMatrix::identity(d * d) + &e).scale(0.5);
    let p_a = (CMatrix::identity(d * d) - &e).scale(0.5);
    let dim_s = d as f64 * (d as f64 + 1.0) / 2.0;
    let dim_a = d as f64 * (d as f64 - 1.0) / 2.0;
    let tr_s = (&p_s * &a2).trace().re;
    let tr_a = (&p_a * &a2).trace().re;
    let mut second_expected = p_s.scale(tr_s / dim_s);
    if d > 1 {
        second_expected = second_expected + p_a.scale(tr_a / dim_a);
    }
    let second = EntryMoments::collect(d * d, n, seed, 6, |rng| {
        let u = haar_unitary(d, rng);
        let u2 = u.kron(&u);
        &u2 * &a2 * u2.adjoint()
    });
    let second_moment_max_z = second.max_z(&second_expected);

    // the identity is a fixed point of the two-fold twirl sample by sample
    let mut id_rng = ChaCha8Rng::seed_from_u64(seed ^ 0xf1f1);
    let mut id_defect: f64 = 0.0;
    for _ in 0..16.min(n) {
        let u = haar_unitary(d, &mut id_rng);
        let u2 = u.kron(&u);
        let twirled = &u2 * &CMatrix::identity(d * d) * u2.adjoint();
        id_defect = id_defect.max((twirled - CMatrix::identity(d * d)).frobenius_norm());
    }

    Ok(HaarIdentityReport {
        d,
        samples: n,
        swap_identity_defect: swap_defect,
        first_moment_max_z,
        second_moment_max_z,
        second_moment_identity_defect: id_defect,
    })
}

/// Per-entry mean/variance accumulation for matrix-valued Monte Carlo.
struct EntryMoments {
    re: Vec<Moments>,
    im: Vec<Moments>,
    side: usize,
}

impl EntryMoments {
    fn collect(
        side: usize,
        n: usize,
        seed: u64,
        phase: u64,
        sample: impl Fn(&mut ChaCha8Rng) -> CMatrix + Sync,
    ) -> Self {
        let partials = map_chunks(n, seed, phase, |rng, range| {
            let mut re = vec![Moments::default(); side * side];
            let mut im = vec![Moments::default(); side * side];
            for _ in range {
                let m = sample(rng);
                for r in 0..side {
                    for c in 0..side {
                        let z = m.get(r, c);
                        re[r * side + c].push(z.re);
                        im[r * side + c].push(z.im);
                    }
                }
            }
            (re, im)
        });
        let mut re = vec![Moments::default(); side * side];
        let mut im = vec![Moments::default(); side * side];
        for (pre, pim) in partials {
            for i in 0..side * side {
                re[i] = re[i].merge(pre[i]);
                im[i] = im[i].merge(pim[i]);
            }
        }
        Self { re, im, side }
    }

    fn max_z(&self, expected: &CMatrix) -> f64 {
        let mut worst: f64 = 0.0;
        for r in 0..self.side {
            for c in 0..self.side {
                let i = r * self.side + c;
                let want = expected.get(r, c);
                worst = worst.max(z_of(self.re[i], want.re));
                worst = worst.max(z_of(self.im[i], want.im));
            }
        }
        worst
    }
}

fn z_of(m: Moments, expected: f64) -> f64 {
    let dev = (m.mean() - expected).abs();
    let se = m.std_error();
    if dev < 1e-12 {
        0.0
    } else if se == 0.0 {
        f64::INFINITY
    } else {
        dev / se
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covariant::{sud_canonical_dual_xi, sud_processing_value, BellPovm, WeylSystem};
    use crate::frames::completeness_defect;
    use crate::matrix::pauli;
    use crate::povm::processing_function;

    fn random_density(d: usize, seed: u64) -> DensityMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = CMatrix::from_fn(d, d, |_, _| {
            Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        let h = &g * &g.adjoint() + CMatrix::identity(d).scale(0.05);
        let tr = h.trace().re;
        DensityMatrix::new(h.scale(1.0 / tr)).unwrap()
    }

    fn random_observable(d: usize, seed: u64) -> Observable {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Observable::hermitian(
            CMatrix::from_fn(d, d, |_, _| {
                Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
            })
            .symmetrize(),
        )
        .unwrap()
    }

    #[test]
    fn haar_unitaries_are_unitary() {
        let mut sampler = HaarSampler::new(4, 1);
        for _ in 0..20 {
            let u = sampler.next_unitary();
            assert!(u.unitarity_defect() < 1e-12);
        }
    }

    #[test]
    fn haar_mean_conjugation_contracts_to_trace() {
        // E[U A U†] = Tr[A]/d · I under the normalized measure
        let d = 2;
        let a = DensityMatrix::pure_basis(d, 0).matrix().clone();
        let report = haar_identity_check(d, 20_000, 7).unwrap();
        assert!(
            report.first_moment_max_z < 4.0,
            "z = {}",
            report.first_moment_max_z
        );
        // direct small check against I/2 for A = |0⟩⟨0|
        let em = EntryMoments::collect(d, 20_000, 8, 9, |rng| {
            let u = haar_unitary(d, rng);
            &u * &a * u.adjoint()
        });
        let z = em.max_z(&CMatrix::identity(d).scale(0.5));
        assert!(z < 4.0, "z = {z}");
    }

    #[test]
    fn haar_left_invariance_statistically() {
        // multiplying by a fixed unitary must not move the first moment
        let d = 2;
        let v = haar_unitary(d, &mut ChaCha8Rng::seed_from_u64(3));
        let a = random_observable(d, 4).matrix().clone();
        let expected = CMatrix::identity(d).scale(a.trace().re / d as f64);
        let em = EntryMoments::collect(d, 20_000, 10, 11, |rng| {
            let u = &v * &haar_unitary(d, rng);
            &u * &a * u.adjoint()
        });
        assert!(em.max_z(&expected) < 4.0);
    }

    #[test]
    fn haar_eigenangles_are_uniform() {
        // pooled eigenvalue angles of Haar U(2) are marginally uniform;
        // Kolmogorov-Smirnov against the uniform CDF
        let d = 2;
        let n = 10_000;
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let mut angles = Vec::with_capacity(n * d);
        for _ in 0..n {
            let u = haar_unitary(d, &mut rng);
            // eigenvalues of a 2x2 unitary from trace and determinant
            let tr = u.trace();
            let det = u.get(0, 0) * u.get(1, 1) - u.get(0, 1) * u.get(1, 0);
            let disc = (tr * tr - det * 4.0).sqrt();
            for ev in [(tr + disc) * 0.5, (tr - disc) * 0.5] {
                let mut t = ev.arg() / (2.0 * std::f64::consts::PI) + 0.5;
                t = t.clamp(0.0, 1.0);
                angles.push(t);
            }
        }
        angles.sort_by(f64::total_cmp);
        let m = angles.len();
        let mut ks: f64 = 0.0;
        for (i, &x) in angles.iter().enumerate() {
            let lo = i as f64 / m as f64;
            let hi = (i + 1) as f64 / m as f64;
            ks = ks.max((x - lo).abs()).max((x - hi).abs());
        }
        // asymptotic Kolmogorov p-value
        let lambda = (m as f64).sqrt() * ks;
        let mut p = 0.0;
        for k in 1..100 {
            let kf = k as f64;
            p += 2.0 * (-1.0f64).powi(k - 1) * (-2.0 * kf * kf * lambda * lambda).exp();
        }
        assert!(p > 0.001, "KS statistic {ks}, p ≈ {p}");
    }

    #[test]
    fn swap_identity_is_exact() {
        let e = swap_operator(2);
        let x = pauli::x();
        let lhs = (&e * &x.kron(&x)).trace().re;
        assert!((lhs - 2.0).abs() < 1e-14); // Tr[X²] = 2
    }

    #[test]
    fn identity_suite_passes_at_moderate_sample_counts() {
        for d in [2usize, 3] {
            let report = haar_identity_check(d, 20_000, 21).unwrap();
            assert!(report.passes(4.0), "d = {d}: {report:?}");
        }
    }

    #[test]
    fn single_outcome_povm_always_returns_zero() {
        let povm = Povm::new(vec![CMatrix::identity(2)], None).unwrap();
        let rho = random_density(2, 31);
        let shots = sample_outcomes(&rho, None, &povm, 100, 1).unwrap();
        assert!(shots.iter().all(|s| s.outcome == 0));
    }

    #[test]
    fn projective_sampling_is_deterministic_on_eigenstates() {
        let povm = Povm::new(
            vec![
                DensityMatrix::pure_basis(2, 0).matrix().clone(),
                DensityMatrix::pure_basis(2, 1).matrix().clone(),
            ],
            None,
        )
        .unwrap();
        let rho = DensityMatrix::pure_basis(2, 0);
        let shots = sample_outcomes(&rho, None, &povm, 1_000, 2).unwrap();
        assert!(shots.iter().all(|s| s.outcome == 0));
    }

    #[test]
    fn bell_sampling_matches_multinomial_frequencies() {
        let w = WeylSystem::new(2).unwrap();
        let povm = BellPovm::from_weyl(&w).unwrap().into_povm();
        let rho = DensityMatrix::maximally_mixed(2);
        let nu = DensityMatrix::maximally_mixed(2);
        // all Bell outcomes are equally likely on I/2 ⊗ I/2
        let probs = povm.outcome_probabilities(&rho, Some(&nu)).unwrap();
        for &p in &probs {
            assert!((p - 0.25).abs() < 1e-12);
        }
        let n = 100_000;
        let shots = sample_outcomes(&rho, Some(&nu), &povm, n, 3).unwrap();
        let counts = tally(&shots, 4);
        let sigma = (n as f64 * 0.25 * 0.75).sqrt();
        for &c in &counts {
            assert!((c as f64 - n as f64 * 0.25).abs() < 4.0 * sigma);
        }
    }

    #[test]
    fn sampling_is_reproducible_and_thread_count_independent() {
        let povm = Povm::new(
            vec![
                DensityMatrix::pure_basis(2, 0).matrix().clone(),
                DensityMatrix::pure_basis(2, 1).matrix().clone(),
            ],
            None,
        )
        .unwrap();
        let rho = random_density(2, 41);
        let a = sample_outcomes(&rho, None, &povm, 10_000, 5).unwrap();
        let b = sample_outcomes(&rho, None, &povm, 10_000, 5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn mc_estimate_of_constant_processing_has_zero_error() {
        let povm = Povm::new(vec![CMatrix::identity(2)], None).unwrap();
        let rho = random_density(2, 51);
        let shots = sample_outcomes(&rho, None, &povm, 500, 6).unwrap();
        let f = ProcessingFunction::new(vec![Complex64::new(2.5, 0.0)]);
        let est = mc_estimate(&shots, &f).unwrap();
        assert_eq!(est.estimate, 2.5);
        assert_eq!(est.std_error, 0.0);
    }

    #[test]
    fn weyl_detector_estimates_pauli_z_on_basis_state() {
        let w = WeylSystem::new(2).unwrap();
        let povm = BellPovm::from_weyl(&w).unwrap().into_povm();
        let nu = random_density(2, 61);
        let frame = w.xi_frame(&nu).unwrap();
        let dual = crate::covariant::abelian_dual(&w, &nu).unwrap();
        assert!(completeness_defect(&frame, &dual).unwrap() < 1e-8);

        let o = Observable::hermitian(pauli::z()).unwrap();
        let f = processing_function(&dual, &o).unwrap();
        let rho = DensityMatrix::pure_basis(2, 0);
        let exact = crate::povm::estimate_expectation_exact(&rho, &nu, &povm, &f).unwrap();
        assert!((exact.re - 1.0).abs() < 1e-10 && exact.im.abs() < 1e-10);

        let shots = sample_outcomes(&rho, Some(&nu), &povm, 100_000, 7).unwrap();
        let est = mc_estimate(&shots, &f).unwrap();
        assert!(
            est.z_score(1.0) < 4.0,
            "estimate {} ± {}",
            est.estimate,
            est.std_error
        );
    }

    #[test]
    fn covariant_weights_are_uniform_on_maximally_mixed_states() {
        let rho = DensityMatrix::maximally_mixed(2);
        let nu = random_density(2, 71);
        let samples = covariant_sample(&rho, &nu, 200, 8).unwrap();
        for s in &samples {
            assert!((s.weight - 1.0).abs() < 1e-10);
            assert!(s.weight >= 0.0);
        }
    }

    #[test]
    fn covariant_estimator_is_consistent() {
        // weighted mean of f_U(ν, O) reproduces Tr[ρO]
        let d = 2;
        let rho = DensityMatrix::pure_basis(d, 0);
        let nu = DensityMatrix::pure_basis(d, 0);
        let xi = sud_canonical_dual_xi(&nu).unwrap();
        let o = random_observable(d, 81);
        let samples = covariant_sample(&rho, &nu, 100_000, 9).unwrap();
        let est = mc_estimate_weighted(&samples, |u| sud_processing_value(&xi, u, &o).unwrap().re)
            .unwrap();
        let exact = (rho.matrix() * o.matrix()).trace().re;
        assert!(
            est.z_score(exact) < 4.0,
            "estimate {} ± {} vs {exact}",
            est.estimate,
            est.std_error
        );
    }

    #[test]
    fn covariance_matrix_moment_oracle() {
        let f = vec![
            Complex64::new(1.0, 2.0),
            Complex64::new(-0.5, 0.25),
            Complex64::new(0.75, -1.0),
        ];
        let p = vec![0.2, 0.5, 0.3];
        let c = covariance_matrix(&f, &p).unwrap();
        // two-pass oracle
        let mr: f64 = f.iter().zip(&p).map(|(z, &q)| z.re * q).sum();
        let mi: f64 = f.iter().zip(&p).map(|(z, &q)| z.im * q).sum();
        let vr: f64 = f
            .iter()
            .zip(&p)
            .map(|(z, &q)| (z.re - mr).powi(2) * q)
            .sum();
        let vi: f64 = f
            .iter()
            .zip(&p)
            .map(|(z, &q)| (z.im - mi).powi(2) * q)
            .sum();
        let cv: f64 = f
            .iter()
            .zip(&p)
            .map(|(z, &q)| (z.re - mr) * (z.im - mi) * q)
            .sum();
        assert!((c.var_re - vr).abs() < 1e-12);
        assert!((c.var_im - vi).abs() < 1e-12);
        assert!((c.cov - cv).abs() < 1e-12);
        assert!(c.is_psd(1e-12));
    }

    #[test]
    fn covariance_edge_cases() {
        // real-valued f: no imaginary variance, no cross term
        let f = vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)];
        let c = covariance_matrix(&f, &[0.5, 0.5]).unwrap();
        assert_eq!(c.var_im, 0.0);
        assert_eq!(c.cov, 0.0);
        assert!((c.var_re - 1.0).abs() < 1e-12);

        // constant f: zero matrix
        let f = vec![Complex64::new(0.3, 0.7); 4];
        let c = covariance_matrix(&f, &[0.25; 4]).unwrap();
        assert!(c.var_re.abs() < 1e-15 && c.var_im.abs() < 1e-15 && c.cov.abs() < 1e-15);
    }

    #[test]
    fn delta_obs_closed_form_values() {
        let z = Observable::hermitian(pauli::z()).unwrap();
        assert!((delta_obs_analytic(&z).unwrap() - 2.0 / 3.0).abs() < 1e-14);
        let id = Observable::hermitian(CMatrix::identity(3)).unwrap();
        assert!(delta_obs_analytic(&id).unwrap().abs() < 1e-14);
    }

    #[test]
    fn delta_obs_mc_matches_analytic() {
        let z = Observable::hermitian(pauli::z()).unwrap();
        let mc = delta_obs_mc(&z, 50_000, 13).unwrap();
        assert!(mc.z_score(2.0 / 3.0) < 3.0, "{mc:?}");

        let proj = Observable::hermitian(DensityMatrix::pure_basis(3, 0).matrix().clone()).unwrap();
        let analytic = delta_obs_analytic(&proj).unwrap();
        assert!((analytic - 1.0 / 6.0).abs() < 1e-14);
        let mc = delta_obs_mc(&proj, 50_000, 14).unwrap();
        assert!(mc.z_score(analytic) < 3.0, "{mc:?}");

        // O = I has no dispersion: every per-state sample vanishes to rounding
        let id = Observable::hermitian(CMatrix::identity(2)).unwrap();
        let mc = delta_obs_mc(&id, 100, 15).unwrap();
        assert!(mc.estimate.abs() < 1e-14);
        assert!(mc.std_error < 1e-14);
    }

    #[test]
    fn delta_xi_closed_forms() {
        // Tr[ξ²] = 1 collapses the coefficient
        let xi = CovariantXi::new(CMatrix::identity(2).scale(0.5)).unwrap();
        let o = random_observable(2, 91);
        // note: this ξ is not a dual of anything; the formula is algebraic
        let v = delta_xi_analytic(&xi, &o).unwrap();
        assert!((v - (0.5 - 1.0) / 1.0 * delta_obs_analytic(&o).unwrap()).abs() < 1e-14);

        // canonical ξ_opt for a pure ancilla: coefficient d + 2
        let nu = DensityMatrix::pure_basis(2, 0);
        let xi = sud_canonical_dual_xi(&nu).unwrap();
        assert!((xi.purity_trace() - 5.0).abs() < 1e-12);
        let coeff = (xi.purity_trace() - 1.0) / 1.0;
        assert!((coeff - 4.0).abs() < 1e-12);
        let v = delta_xi_analytic(&xi, &o).unwrap();
        assert!((v - 4.0 * delta_obs_analytic(&o).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn delta_opt_closed_forms_and_monotonicity() {
        assert!((delta_opt_analytic(1.0, 2).unwrap() - 4.0).abs() < 1e-14);
        assert!((delta_opt_analytic(1.0, 3).unwrap() - 5.0).abs() < 1e-14);
        assert!((delta_opt_analytic(0.75, 2).unwrap() - 8.5).abs() < 1e-14);
        assert!(delta_opt_analytic(0.4, 2).is_err()); // p ≤ 1/d
        assert!(delta_opt_analytic(1.1, 2).is_err());

        let mut prev = f64::INFINITY;
        for k in 0..20 {
            let p = 0.51 + 0.49 * k as f64 / 19.0;
            let v = delta_opt_analytic(p, 2).unwrap();
            assert!(v < prev, "not strictly decreasing at p = {p}");
            prev = v;
        }
    }

    #[test]
    fn delta_xi_mc_agrees_with_analytic_for_the_optimal_dual() {
        let nu = DensityMatrix::pure_basis(2, 0);
        let xi = sud_canonical_dual_xi(&nu).unwrap();
        let o = Observable::hermitian(pauli::z()).unwrap();
        let analytic = delta_xi_analytic(&xi, &o).unwrap();
        assert!((analytic - 8.0 / 3.0).abs() < 1e-12); // 4 × 2/3
        let mc = delta_xi_mc(&xi, &nu, &o, 4_000, 8, 17).unwrap();
        assert!(mc.z_score(analytic) < 3.0, "{mc:?} vs {analytic}");
    }

    #[test]
    fn delta_xi_mc_of_identity_observable_vanishes() {
        let nu = DensityMatrix::pure_basis(2, 0);
        let xi = sud_canonical_dual_xi(&nu).unwrap();
        let id = Observable::hermitian(CMatrix::identity(2)).unwrap();
        let mc = delta_xi_mc(&xi, &nu, &id, 500, 4, 18).unwrap();
        // f ≡ 1 and the ideal mean is 1, so every sample is w − 1 with mean 0
        assert!(mc.estimate.abs() < 4.0 * mc.std_error.max(1e-12), "{mc:?}");
    }

    #[test]
    fn suboptimal_duals_cost_variance() {
        let nu = DensityMatrix::pure_basis(2, 0);
        let base = sud_canonical_dual_xi(&nu).unwrap();
        // perturb within the constraint set to raise Tr[ξ²] by ≥ 0.5
        let g = pauli::x();
        let delta = crate::covariant::constraint_tangent_projection(&g, &nu);
        let norm2 = (&delta * &delta).trace().re;
        let t = (0.75 / norm2).sqrt();
        let xi2 = CovariantXi::new(base.matrix() + &delta.scale(t)).unwrap();
        assert!(covariant_dual_check(&xi2, &nu));
        assert!(xi2.purity_trace() > base.purity_trace() + 0.5);

        let o = Observable::hermitian(pauli::z()).unwrap();
        let lo = delta_xi_analytic(&base, &o).unwrap();
        let hi_analytic = delta_xi_analytic(&xi2, &o).unwrap();
        assert!(hi_analytic > lo);
        let hi_mc = delta_xi_mc(&xi2, &nu, &o, 4_000, 8, 19).unwrap();
        assert!(
            hi_mc.z_score(hi_analytic) < 3.0,
            "{hi_mc:?} vs {hi_analytic}"
        );
        assert!(hi_mc.estimate - 3.0 * hi_mc.std_error > lo);
    }

    #[test]
    fn delta_xi_mc_rejects_non_dual_xi() {
        let nu = DensityMatrix::pure_basis(2, 0);
        let xi = CovariantXi::new(CMatrix::identity(2).scale(0.5)).unwrap();
        let o = Observable::hermitian(pauli::z()).unwrap();
        assert!(delta_xi_mc(&xi, &nu, &o, 10, 2, 20).is_err());
    }

    #[test]
    fn moments_merge_matches_single_pass() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 37 % 101) as f64).sin()).collect();
        let mut whole = Moments::default();
        for &x in &xs {
            whole.push(x);
        }
        let mut a = Moments::default();
        let mut b = Moments::default();
        for &x in &xs[..337] {
            a.push(x);
        }
        for &x in &xs[337..] {
            b.push(x);
        }
        let merged = a.merge(b);
        assert!((whole.mean() - merged.mean()).abs() < 1e-12);
        assert!((whole.variance() - merged.variance()).abs() < 1e-12);
    }
}
