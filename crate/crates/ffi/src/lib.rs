//! C ABI for the uframe library.
//!
//! Conventions:
//! - Every constructor hands back an opaque handle through an out-pointer
//!   and returns a [`UfStatus`]; the handle must be released with the
//!   matching `*_free` function. `*_free` accepts null.
//! - Matrix data crosses the boundary as separate `re`/`im` double arrays in
//!   row-major order; buffer lengths are always `rows × cols` (or the
//!   documented element count) and are owned by the caller.
//! - On any status other than `UF_STATUS_OK`, a thread-local message is
//!   available from `uframe_last_error_message()` until the next failing
//!   call on the same thread. Returned strings are borrowed, never freed by
//!   the caller.
//!
//! Safety contract, shared by every `unsafe` function here: handle
//! arguments must be null or pointers previously returned by this library
//! and not yet freed; array arguments must satisfy the length stated in the
//! function's documentation. Null handles are reported as
//! `UF_STATUS_NULL_POINTER`, never dereferenced.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CString};

use uframe::covariant::{
    abelian_ancilla, abelian_dual, covariant_dual_check, sud_canonical_dual_xi, sud_params,
    BellPovm, CovariantXi, WeylSystem,
};
use uframe::estimation::{
    delta_obs_analytic, delta_obs_mc, delta_opt_analytic, delta_xi_analytic, delta_xi_mc,
    mc_estimate, sample_outcomes, HaarSampler, ShotRecord,
};
use uframe::frames::{completeness_defect, expand, DualFrame, OperatorFrame};
use uframe::matrix::CMatrix;
use uframe::povm::{
    estimate_expectation_exact, info_complete_from_positive, processing_function, DensityMatrix,
    Observable, Povm, ProcessingFunction,
};
use uframe::Error;

/// Status codes shared by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ShapeMismatch = 3,
    NotHermitian = 4,
    NotPsd = 5,
    Singular = 6,
    InvalidState = 7,
    InvalidPovm = 8,
    NotAFrame = 9,
    InvalidProbabilities = 10,
    VanishingOverlap = 11,
    Empty = 12,
    Io = 13,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(message: &str) {
    let owned = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = owned);
}

fn status_of(err: &Error) -> UfStatus {
    match err {
        Error::ShapeMismatch(_) => UfStatus::ShapeMismatch,
        Error::InvalidArgument(_) => UfStatus::InvalidArgument,
        Error::NotHermitian { .. } => UfStatus::NotHermitian,
        Error::NotPsd { .. } => UfStatus::NotPsd,
        Error::Singular(_) => UfStatus::Singular,
        Error::InvalidState(_) => UfStatus::InvalidState,
        Error::InvalidPovm(_) => UfStatus::InvalidPovm,
        Error::NotAFrame(_) => UfStatus::NotAFrame,
        Error::InvalidProbabilities(_) => UfStatus::InvalidProbabilities,
        Error::VanishingOverlap { .. } => UfStatus::VanishingOverlap,
        Error::Empty(_) => UfStatus::Empty,
        Error::Io(_) | Error::Json(_) => UfStatus::Io,
    }
}

fn fail(err: Error) -> UfStatus {
    let status = status_of(&err);
    set_error(&err.to_string());
    status
}

fn fail_null(what: &str) -> UfStatus {
    set_error(&format!("null pointer: {what}"));
    UfStatus::NullPointer
}

/// Message describing the most recent failure on this thread. Borrowed;
/// valid until the next failing uframe call on the same thread.
#[no_mangle]
pub extern "C" fn uframe_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn uframe_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

// ---------------------------------------------------------------------------
// Matrices
// ---------------------------------------------------------------------------

/// Dense complex matrix (opaque).
pub struct UfMatrix {
    inner: CMatrix,
}

unsafe fn slice_arg<'a, T>(ptr: *const T, len: usize) -> Option<&'a [T]> {
    if ptr.is_null() {
        None
    } else {
        Some(std::slice::from_raw_parts(ptr, len))
    }
}

macro_rules! out_handle {
    ($out:ident, $value:expr) => {{
        if $out.is_null() {
            return fail_null(stringify!($out));
        }
        unsafe { *$out = Box::into_raw(Box::new($value)) };
        UfStatus::Ok
    }};
}

macro_rules! deref {
    ($ptr:ident) => {{
        match unsafe { $ptr.as_ref() } {
            Some(r) => r,
            None => return fail_null(stringify!($ptr)),
        }
    }};
}

/// Creates a matrix from row-major re/im arrays of length `rows × cols`.
///
/// # Safety
/// `re` and `im` must point to `rows × cols` readable doubles.
#[no_mangle]
pub unsafe extern "C" fn uframe_matrix_new(
    rows: usize,
    cols: usize,
    re: *const f64,
    im: *const f64,
    out: *mut *mut UfMatrix,
) -> UfStatus {
    let (Some(re), Some(im)) = (slice_arg(re, rows * cols), slice_arg(im, rows * cols)) else {
        return fail_null("re/im");
    };
    let entries = re
        .iter()
        .zip(im)
        .map(|(&r, &i)| num_complex::Complex64::new(r, i))
        .collect();
    match CMatrix::from_row_major(rows, cols, entries) {
        Ok(m) => out_handle!(out, UfMatrix { inner: m }),
        Err(e) => fail(e),
    }
}

/// The n-by-n identity matrix.
#[no_mangle]
pub unsafe extern "C" fn uframe_matrix_identity(n: usize, out: *mut *mut UfMatrix) -> UfStatus {
    if n == 0 {
        set_error("identity dimension must be positive");
        return UfStatus::InvalidArgument;
    }
    out_handle!(
        out,
        UfMatrix {
            inner: CMatrix::identity(n)
        }
    )
}

#[no_mangle]
pub unsafe extern "C" fn uframe_matrix_free(m: *mut UfMatrix) {
    if !m.is_null() {
        drop(unsafe { Box::from_raw(m) });
    }
}

/// Number of rows; 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn uframe_matrix_rows(m: *const UfMatrix) -> usize {
    unsafe { m.as_ref() }.map_or(0, |m| m.inner.rows())
}

/// Number of columns; 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn uframe_matrix_cols(m: *const UfMatrix) -> usize {
    unsafe { m.as_ref() }.map_or(0, |m| m.inner.cols())
}

/// Copies the entries out in row-major order.
///
/// # Safety
/// `re` and `im` must point to `rows × cols` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn uframe_matrix_copy_data(
    m: *const UfMatrix,
    re: *mut f64,
    im: *mut f64,
) -> UfStatus {
    let m = deref!(m);
    if re.is_null() || im.is_null() {
        return fail_null("re/im");
    }
    let entries = m.inner.row_major_entries();
    let re = std::slice::from_raw_parts_mut(re, entries.len());
    let im = std::slice::from_raw_parts_mut(im, entries.len());
    for (k, z) in entries.iter().enumerate() {
        re[k] = z.re;
        im[k] = z.im;
    }
    UfStatus::Ok
}

/// A Haar-random unitary drawn from a fresh seeded stream.
#[no_mangle]
pub unsafe extern "C" fn uframe_haar_unitary(
    d: usize,
    seed: u64,
    out: *mut *mut UfMatrix,
) -> UfStatus {
    if d == 0 {
        set_error("dimension must be positive");
        return UfStatus::InvalidArgument;
    }
    let mut sampler = HaarSampler::new(d, seed);
    let u = sampler.next_unitary();
    out_handle!(out, UfMatrix { inner: u })
}

// ---------------------------------------------------------------------------
// States and observables
// ---------------------------------------------------------------------------

/// Density matrix (opaque).
pub struct UfDensity {
    inner: DensityMatrix,
}

/// Validates and wraps a density matrix given by row-major re/im arrays.
///
/// # Safety
/// `re` and `im` must point to `dim × dim` readable doubles.
#[no_mangle]
pub unsafe extern "C" fn uframe_density_new(
    dim: usize,
    re: *const f64,
    im: *const f64,
    out: *mut *mut UfDensity,
) -> UfStatus {
    let mut matrix = std::ptr::null_mut();
    let status = uframe_matrix_new(dim, dim, re, im, &mut matrix);
    if status != UfStatus::Ok {
        return status;
    }
    let m = Box::from_raw(matrix);
    match DensityMatrix::new(m.inner) {
        Ok(d) => out_handle!(out, UfDensity { inner: d }),
        Err(e) => fail(e),
    }
}

/// The pure basis state `|k⟩⟨k|`.
#[no_mangle]
pub unsafe extern "C" fn uframe_density_pure_basis(
    dim: usize,
    k: usize,
    out: *mut *mut UfDensity,
) -> UfStatus {
    if dim == 0 || k >= dim {
        set_error("basis index outside dimension");
        return UfStatus::InvalidArgument;
    }
    out_handle!(
        out,
        UfDensity {
            inner: DensityMatrix::pure_basis(dim, k)
        }
    )
}

/// The maximally mixed state `I/d`.
#[no_mangle]
pub unsafe extern "C" fn uframe_density_maximally_mixed(
    dim: usize,
    out: *mut *mut UfDensity,
) -> UfStatus {
    if dim == 0 {
        set_error("dimension must be positive");
        return UfStatus::InvalidArgument;
    }
    out_handle!(
        out,
        UfDensity {
            inner: DensityMatrix::maximally_mixed(dim)
        }
    )
}

/// A state of prescribed purity `Tr[ρ²] = p` with `1/d < p ≤ 1`.
#[no_mangle]
pub unsafe extern "C" fn uframe_density_with_purity(
    dim: usize,
    purity: f64,
    out: *mut *mut UfDensity,
) -> UfStatus {
    match DensityMatrix::with_purity(dim, purity) {
        Ok(d) => out_handle!(out, UfDensity { inner: d }),
        Err(e) => fail(e),
    }
}

#[no_mangle]
pub unsafe extern "C" fn uframe_density_free(d: *mut UfDensity) {
    if !d.is_null() {
        drop(unsafe { Box::from_raw(d) });
    }
}

/// `Tr[ρ²]`; NaN for a null handle.
#[no_mangle]
pub unsafe extern "C" fn uframe_density_purity(d: *const UfDensity) -> f64 {
    unsafe { d.as_ref() }.map_or(f64::NAN, |d| d.inner.purity())
}

/// Hermitian observable (opaque).
pub struct UfObservable {
    inner: Observable,
}

/// Validates and wraps a Hermitian observable.
///
/// # Safety
/// `re` and `im` must point to `dim × dim` readable doubles.
#[no_mangle]
pub unsafe extern "C" fn uframe_observable_hermitian(
    dim: usize,
    re: *const f64,
    im: *const f64,
    out: *mut *mut UfObservable,
) -> UfStatus {
    let mut matrix = std::ptr::null_mut();
    let status = uframe_matrix_new(dim, dim, re, im, &mut matrix);
    if status != UfStatus::Ok {
        return status;
    }
    let m = Box::from_raw(matrix);
    match Observable::hermitian(m.inner) {
        Ok(o) => out_handle!(out, UfObservable { inner: o }),
        Err(e) => fail(e),
    }
}

#[no_mangle]
pub unsafe extern "C" fn uframe_observable_free(o: *mut UfObservable) {
    if !o.is_null() {
        drop(unsafe { Box::from_raw(o) });
    }
}

// ---------------------------------------------------------------------------
// Weyl systems and covariant constructions
// ---------------------------------------------------------------------------

/// Discrete Weyl-Heisenberg system (opaque).
pub struct UfWeyl {
    inner: WeylSystem,
}

#[no_mangle]
pub unsafe extern "C" fn uframe_weyl_new(d: usize, out: *mut *mut UfWeyl) -> UfStatus {
    match WeylSystem::new(d) {
        Ok(w) => out_handle!(out, UfWeyl { inner: w }),
        Err(e) => fail(e),
    }
}

#[no_mangle]
pub unsafe extern "C" fn uframe_weyl_free(w: *mut UfWeyl) {
    if !w.is_null() {
        drop(unsafe { Box::from_raw(w) });
    }
}

/// Number of unitaries (`d²`); 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn uframe_weyl_len(w: *const UfWeyl) -> usize {
    unsafe { w.as_ref() }.map_or(0, |w| w.inner.len())
}

/// Copies out the unitary with flat index `alpha = a·d + b`.
#[no_mangle]
pub unsafe extern "C" fn uframe_weyl_unitary(
    w: *const UfWeyl,
    alpha: usize,
    out: *mut *mut UfMatrix,
) -> UfStatus {
    let w = deref!(w);
    if alpha >= w.inner.len() {
        set_error("group index out of range");
        return UfStatus::InvalidArgument;
    }
    out_handle!(
        out,
        UfMatrix {
            inner: w.inner.unitary(alpha).clone()
        }
    )
}

/// The commutation cocycle `c(alpha, beta)`.
#[no_mangle]
pub unsafe extern "C" fn uframe_weyl_cocycle(
    w: *const UfWeyl,
    alpha: usize,
    beta: usize,
    out: *mut f64,
) -> UfStatus {
    let w = deref!(w);
    if alpha >= w.inner.len() || beta >= w.inner.len() {
        set_error("group index out of range");
        return UfStatus::InvalidArgument;
    }
    if out.is_null() {
        return fail_null("out");
    }
    unsafe { *out = w.inner.cocycle(alpha, beta) };
    UfStatus::Ok
}

/// The orthogonal `d²`-outcome Bell POVM of the system.
#[no_mangle]
pub unsafe extern "C" fn uframe_weyl_bell_povm(
    w: *const UfWeyl,
    out: *mut *mut UfPovm,
) -> UfStatus {
    let w = deref!(w);
    match BellPovm::from_weyl(&w.inner) {
        Ok(b) => out_handle!(
            out,
            UfPovm {
                inner: b.into_povm()
            }
        ),
        Err(e) => fail(e),
    }
}

/// The Hermitized group-generated ancilla for dimension `d`.
#[no_mangle]
pub unsafe extern "C" fn uframe_abelian_ancilla(d: usize, out: *mut *mut UfDensity) -> UfStatus {
    match abelian_ancilla(d) {
        Ok(nu) => out_handle!(out, UfDensity { inner: nu }),
        Err(e) => fail(e),
    }
}

/// The unique closed-form dual of the Weyl frame for ancilla `nu`.
#[no_mangle]
pub unsafe extern "C" fn uframe_abelian_dual(
    w: *const UfWeyl,
    nu: *const UfDensity,
    out: *mut *mut UfDual,
) -> UfStatus {
    let w = deref!(w);
    let nu = deref!(nu);
    match abelian_dual(&w.inner, &nu.inner) {
        Ok(dual) => out_handle!(out, UfDual { inner: dual }),
        Err(e) => fail(e),
    }
}

/// The induced Weyl system frame `Ξ_α[ν] = (1/d) U_α ν^τ U_α†`.
#[no_mangle]
pub unsafe extern "C" fn uframe_weyl_xi_frame(
    w: *const UfWeyl,
    nu: *const UfDensity,
    out: *mut *mut UfFrame,
) -> UfStatus {
    let w = deref!(w);
    let nu = deref!(nu);
    match w.inner.xi_frame(&nu.inner) {
        Ok(f) => out_handle!(out, UfFrame { inner: f }),
        Err(e) => fail(e),
    }
}

/// SU(d) scalar parameters `(p, a, b)` for an ancilla.
#[no_mangle]
pub unsafe extern "C" fn uframe_sud_params(
    nu: *const UfDensity,
    out_p: *mut f64,
    out_a: *mut f64,
    out_b: *mut f64,
) -> UfStatus {
    let nu = deref!(nu);
    if out_p.is_null() || out_a.is_null() || out_b.is_null() {
        return fail_null("out_p/out_a/out_b");
    }
    match sud_params(&nu.inner) {
        Ok(params) => {
            unsafe {
                *out_p = params.p;
                *out_a = params.a;
                *out_b = params.b;
            }
            UfStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// The optimal covariant dual generator `ξ = a ν^τ + b I` as a matrix.
#[no_mangle]
pub unsafe extern "C" fn uframe_sud_canonical_dual_xi(
    nu: *const UfDensity,
    out: *mut *mut UfMatrix,
) -> UfStatus {
    let nu = deref!(nu);
    match sud_canonical_dual_xi(&nu.inner) {
        Ok(xi) => out_handle!(
            out,
            UfMatrix {
                inner: xi.matrix().clone()
            }
        ),
        Err(e) => fail(e),
    }
}

fn xi_from_matrix(xi: &UfMatrix) -> Result<CovariantXi, Error> {
    CovariantXi::new(xi.inner.clone())
}

/// Whether `ξ` generates a covariant dual for `ν` (both trace constraints).
#[no_mangle]
pub unsafe extern "C" fn uframe_covariant_dual_check(
    xi: *const UfMatrix,
    nu: *const UfDensity,
    out: *mut bool,
) -> UfStatus {
    let xi = deref!(xi);
    let nu = deref!(nu);
    if out.is_null() {
        return fail_null("out");
    }
    match xi_from_matrix(xi) {
        Ok(xi) => {
            unsafe { *out = covariant_dual_check(&xi, &nu.inner) };
            UfStatus::Ok
        }
        Err(e) => fail(e),
    }
}

// ---------------------------------------------------------------------------
// POVMs
// ---------------------------------------------------------------------------

/// Positive operator valued measure (opaque).
pub struct UfPovm {
    inner: Povm,
}

/// Builds and validates a POVM from `count` element matrices. Pass
/// `dim_h = dim_k = 0` for a single-system POVM, or a factorization
/// `dim_h × dim_k = dim` to record a bipartite split.
///
/// # Safety
/// `elements` must point to `count` readable non-null matrix handles.
#[no_mangle]
pub unsafe extern "C" fn uframe_povm_new(
    dim_h: usize,
    dim_k: usize,
    count: usize,
    elements: *const *const UfMatrix,
    out: *mut *mut UfPovm,
) -> UfStatus {
    let Some(handles) = slice_arg(elements, count) else {
        return fail_null("elements");
    };
    let mut mats = Vec::with_capacity(count);
    for &h in handles {
        match h.as_ref() {
            Some(m) => mats.push(m.inner.clone()),
            None => return fail_null("elements[i]"),
        }
    }
    let split = if dim_h == 0 && dim_k == 0 {
        None
    } else {
        Some((dim_h, dim_k))
    };
    match Povm::new(mats, split) {
        Ok(p) => out_handle!(out, UfPovm { inner: p }),
        Err(e) => fail(e),
    }
}

#[no_mangle]
pub unsafe extern "C" fn uframe_povm_free(p: *mut UfPovm) {
    if !p.is_null() {
        drop(unsafe { Box::from_raw(p) });
    }
}

/// Number of outcomes; 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn uframe_povm_len(p: *const UfPovm) -> usize {
    unsafe { p.as_ref() }.map_or(0, |p| p.inner.len())
}

/// Copies out one POVM element.
#[no_mangle]
pub unsafe extern "C" fn uframe_povm_element(
    p: *const UfPovm,
    index: usize,
    out: *mut *mut UfMatrix,
) -> UfStatus {
    let p = deref!(p);
    if index >= p.inner.len() {
        set_error("outcome index out of range");
        return UfStatus::InvalidArgument;
    }
    out_handle!(
        out,
        UfMatrix {
            inner: p.inner.element(index).clone()
        }
    )
}

/// Validation report: completeness defect and the smallest element
/// eigenvalue.
#[no_mangle]
pub unsafe extern "C" fn uframe_povm_validate(
    p: *const UfPovm,
    out_completeness_defect: *mut f64,
    out_min_eigenvalue: *mut f64,
) -> UfStatus {
    let p = deref!(p);
    if out_completeness_defect.is_null() || out_min_eigenvalue.is_null() {
        return fail_null("out");
    }
    match p.inner.validate() {
        Ok(report) => {
            unsafe {
                *out_completeness_defect = report.completeness_defect;
                *out_min_eigenvalue = report
                    .element_min_eigenvalues
                    .iter()
                    .cloned()
                    .fold(f64::INFINITY, f64::min);
            }
            UfStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Informational completeness of a single-system POVM.
#[no_mangle]
pub unsafe extern "C" fn uframe_povm_is_info_complete(
    p: *const UfPovm,
    tol: f64,
    out: *mut bool,
) -> UfStatus {
    let p = deref!(p);
    if out.is_null() {
        return fail_null("out");
    }
    unsafe { *out = p.inner.is_info_complete(tol) };
    UfStatus::Ok
}

/// Universality of a bipartite POVM for ancilla `nu`.
#[no_mangle]
pub unsafe extern "C" fn uframe_povm_is_universal(
    p: *const UfPovm,
    nu: *const UfDensity,
    tol: f64,
    out: *mut bool,
) -> UfStatus {
    let p = deref!(p);
    let nu = deref!(nu);
    if out.is_null() {
        return fail_null("out");
    }
    match p.inner.is_universal(&nu.inner, tol) {
        Ok(b) => {
            unsafe { *out = b };
            UfStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// The induced system frame `Ξ_i[ν]` of a bipartite POVM.
#[no_mangle]
pub unsafe extern "C" fn uframe_povm_xi_frame(
    p: *const UfPovm,
    nu: *const UfDensity,
    out: *mut *mut UfFrame,
) -> UfStatus {
    let p = deref!(p);
    let nu = deref!(nu);
    match p.inner.xi_frame(&nu.inner) {
        Ok(f) => out_handle!(out, UfFrame { inner: f }),
        Err(e) => fail(e),
    }
}

/// Normalizes a frame of positive operators into an info-complete POVM via
/// `S^{-1/2} K_i S^{-1/2}`.
///
/// # Safety
/// `elements` must point to `count` readable non-null matrix handles.
#[no_mangle]
pub unsafe extern "C" fn uframe_info_complete_from_positive(
    count: usize,
    elements: *const *const UfMatrix,
    out: *mut *mut UfPovm,
) -> UfStatus {
    let Some(handles) = slice_arg(elements, count) else {
        return fail_null("elements");
    };
    let mut mats = Vec::with_capacity(count);
    for &h in handles {
        match h.as_ref() {
            Some(m) => mats.push(m.inner.clone()),
            None => return fail_null("elements[i]"),
        }
    }
    match info_complete_from_positive(&mats) {
        Ok(p) => out_handle!(out, UfPovm { inner: p }),
        Err(e) => fail(e),
    }
}

// ---------------------------------------------------------------------------
// Frames and duals
// ---------------------------------------------------------------------------

/// Operator frame (opaque).
pub struct UfFrame {
    inner: OperatorFrame,
}

/// Dual frame (opaque).
pub struct UfDual {
    inner: DualFrame,
}

/// Builds a frame from `count` same-shape operator matrices.
///
/// # Safety
/// `elements` must point to `count` readable non-null matrix handles.
#[no_mangle]
pub unsafe extern "C" fn uframe_frame_new(
    count: usize,
    elements: *const *const UfMatrix,
    out: *mut *mut UfFrame,
) -> UfStatus {
    let Some(handles) = slice_arg(elements, count) else {
        return fail_null("elements");
    };
    let mut mats = Vec::with_capacity(count);
    for &h in handles {
        match h.as_ref() {
            Some(m) => mats.push(m.inner.clone()),
            None => return fail_null("elements[i]"),
        }
    }
    match OperatorFrame::new(mats) {
        Ok(f) => out_handle!(out, UfFrame { inner: f }),
        Err(e) => fail(e),
    }
}

#[no_mangle]
pub unsafe extern "C" fn uframe_frame_free(f: *mut UfFrame) {
    if !f.is_null() {
        drop(unsafe { Box::from_raw(f) });
    }
}

/// Number of frame elements; 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn uframe_frame_len(f: *const UfFrame) -> usize {
    unsafe { f.as_ref() }.map_or(0, |f| f.inner.len())
}

/// Frame bounds `(a, b)`: the extreme eigenvalues of the frame operator.
#[no_mangle]
pub unsafe extern "C" fn uframe_frame_bounds(
    f: *const UfFrame,
    out_lower: *mut f64,
    out_upper: *mut f64,
) -> UfStatus {
    let f = deref!(f);
    if out_lower.is_null() || out_upper.is_null() {
        return fail_null("out");
    }
    let (a, b) = f.inner.frame_bounds();
    unsafe {
        *out_lower = a;
        *out_upper = b;
    }
    UfStatus::Ok
}

/// Whether the set is a frame at relative condition tolerance `tol`.
#[no_mangle]
pub unsafe extern "C" fn uframe_frame_is_frame(
    f: *const UfFrame,
    tol: f64,
    out: *mut bool,
) -> UfStatus {
    let f = deref!(f);
    if out.is_null() {
        return fail_null("out");
    }
    unsafe { *out = f.inner.is_frame(tol) };
    UfStatus::Ok
}

/// The canonical dual `Θ_i = F⁻¹ Ξ_i`; fails on singular frame operators.
#[no_mangle]
pub unsafe extern "C" fn uframe_frame_canonical_dual(
    f: *const UfFrame,
    out: *mut *mut UfDual,
) -> UfStatus {
    let f = deref!(f);
    match f.inner.canonical_dual() {
        Ok(d) => out_handle!(out, UfDual { inner: d }),
        Err(e) => fail(e),
    }
}

#[no_mangle]
pub unsafe extern "C" fn uframe_dual_free(d: *mut UfDual) {
    if !d.is_null() {
        drop(unsafe { Box::from_raw(d) });
    }
}

/// Number of dual elements; 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn uframe_dual_len(d: *const UfDual) -> usize {
    unsafe { d.as_ref() }.map_or(0, |d| d.inner.len())
}

/// Copies out one dual element.
#[no_mangle]
pub unsafe extern "C" fn uframe_dual_element(
    d: *const UfDual,
    index: usize,
    out: *mut *mut UfMatrix,
) -> UfStatus {
    let d = deref!(d);
    if index >= d.inner.len() {
        set_error("dual index out of range");
        return UfStatus::InvalidArgument;
    }
    out_handle!(
        out,
        UfMatrix {
            inner: d.inner.element(index).clone()
        }
    )
}

/// Frobenius defect of the completeness relation for a frame/dual pair.
#[no_mangle]
pub unsafe extern "C" fn uframe_completeness_defect(
    f: *const UfFrame,
    d: *const UfDual,
    out: *mut f64,
) -> UfStatus {
    let f = deref!(f);
    let d = deref!(d);
    if out.is_null() {
        return fail_null("out");
    }
    match completeness_defect(&f.inner, &d.inner) {
        Ok(v) => {
            unsafe { *out = v };
            UfStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Expands `a` in the frame: writes the `frame_len` complex coefficients
/// `Tr[Θ_i† A]` into `coeff_re`/`coeff_im` and the reconstruction error
/// `‖Σ_i c_i Ξ_i − A‖_F` into `out_error`.
///
/// # Safety
/// `coeff_re` and `coeff_im` must point to `uframe_frame_len(f)` writable
/// doubles.
#[no_mangle]
pub unsafe extern "C" fn uframe_frame_expand(
    f: *const UfFrame,
    d: *const UfDual,
    a: *const UfMatrix,
    coeff_re: *mut f64,
    coeff_im: *mut f64,
    out_error: *mut f64,
) -> UfStatus {
    let f = deref!(f);
    let d = deref!(d);
    let a = deref!(a);
    if coeff_re.is_null() || coeff_im.is_null() || out_error.is_null() {
        return fail_null("coeff_re/coeff_im/out_error");
    }
    match expand(&a.inner, &f.inner, &d.inner) {
        Ok((coeffs, reconstruction)) => {
            let re = std::slice::from_raw_parts_mut(coeff_re, coeffs.len());
            let im = std::slice::from_raw_parts_mut(coeff_im, coeffs.len());
            for (k, c) in coeffs.iter().enumerate() {
                re[k] = c.re;
                im[k] = c.im;
            }
            *out_error = (reconstruction - &a.inner).frobenius_norm();
            UfStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Processing coefficients `f_i = Tr[Θ_i† O]` for every dual element.
///
/// # Safety
/// `out_re` and `out_im` must point to `uframe_dual_len(d)` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn uframe_processing_function(
    d: *const UfDual,
    o: *const UfObservable,
    out_re: *mut f64,
    out_im: *mut f64,
) -> UfStatus {
    let d = deref!(d);
    let o = deref!(o);
    if out_re.is_null() || out_im.is_null() {
        return fail_null("out_re/out_im");
    }
    match processing_function(&d.inner, &o.inner) {
        Ok(f) => {
            let re = std::slice::from_raw_parts_mut(out_re, f.len());
            let im = std::slice::from_raw_parts_mut(out_im, f.len());
            for (k, v) in f.values().iter().enumerate() {
                re[k] = v.re;
                im[k] = v.im;
            }
            UfStatus::Ok
        }
        Err(e) => fail(e),
    }
}

// ---------------------------------------------------------------------------
// Estimation
// ---------------------------------------------------------------------------

/// The exact detector estimate `Σ_i f_i Tr[(ρ⊗ν)Π_i]` for processing
/// coefficients given as re/im arrays of length `uframe_povm_len(p)`.
///
/// # Safety
/// `f_re` and `f_im` must point to `uframe_povm_len(p)` readable doubles.
#[no_mangle]
pub unsafe extern "C" fn uframe_estimate_expectation_exact(
    rho: *const UfDensity,
    nu: *const UfDensity,
    p: *const UfPovm,
    f_re: *const f64,
    f_im: *const f64,
    out_re: *mut f64,
    out_im: *mut f64,
) -> UfStatus {
    let rho = deref!(rho);
    let nu = deref!(nu);
    let p = deref!(p);
    let n = p.inner.len();
    let (Some(f_re), Some(f_im)) = (slice_arg(f_re, n), slice_arg(f_im, n)) else {
        return fail_null("f_re/f_im");
    };
    if out_re.is_null() || out_im.is_null() {
        return fail_null("out_re/out_im");
    }
    let f = ProcessingFunction::new(
        f_re.iter()
            .zip(f_im)
            .map(|(&r, &i)| num_complex::Complex64::new(r, i))
            .collect(),
    );
    match estimate_expectation_exact(&rho.inner, &nu.inner, &p.inner, &f) {
        Ok(v) => {
            *out_re = v.re;
            *out_im = v.im;
            UfStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Draws `n` seeded Born-rule outcomes into `out_outcomes`. Pass a null
/// `nu` to measure a single-system POVM on `rho` alone.
///
/// # Safety
/// `out_outcomes` must point to `n` writable uint64 values.
#[no_mangle]
pub unsafe extern "C" fn uframe_sample_outcomes(
    rho: *const UfDensity,
    nu: *const UfDensity,
    p: *const UfPovm,
    n: usize,
    seed: u64,
    out_outcomes: *mut u64,
) -> UfStatus {
    let rho = deref!(rho);
    let p = deref!(p);
    if out_outcomes.is_null() {
        return fail_null("out_outcomes");
    }
    let nu = nu.as_ref();
    match sample_outcomes(&rho.inner, nu.map(|h| &h.inner), &p.inner, n, seed) {
        Ok(records) => {
            let out = std::slice::from_raw_parts_mut(out_outcomes, n);
            for (slot, r) in out.iter_mut().zip(&records) {
                *slot = r.outcome as u64;
            }
            UfStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Sample mean and standard error of `Re f` over recorded outcomes.
///
/// # Safety
/// `outcomes` must point to `n` readable uint64 values and `f_re` to
/// `f_len` readable doubles.
#[no_mangle]
pub unsafe extern "C" fn uframe_mc_estimate(
    outcomes: *const u64,
    n: usize,
    f_re: *const f64,
    f_len: usize,
    out_estimate: *mut f64,
    out_std_error: *mut f64,
) -> UfStatus {
    let (Some(outcomes), Some(f_re)) = (slice_arg(outcomes, n), slice_arg(f_re, f_len)) else {
        return fail_null("outcomes/f_re");
    };
    if out_estimate.is_null() || out_std_error.is_null() {
        return fail_null("out");
    }
    let records: Vec<ShotRecord> = outcomes
        .iter()
        .map(|&o| ShotRecord {
            outcome: o as usize,
        })
        .collect();
    let f = ProcessingFunction::new(
        f_re.iter()
            .map(|&r| num_complex::Complex64::new(r, 0.0))
            .collect(),
    );
    match mc_estimate(&records, &f) {
        Ok(est) => {
            *out_estimate = est.estimate;
            *out_std_error = est.std_error;
            UfStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Closed-form Haar-averaged variance of the ideal measurement of `O`.
#[no_mangle]
pub unsafe extern "C" fn uframe_delta_obs_analytic(
    o: *const UfObservable,
    out: *mut f64,
) -> UfStatus {
    let o = deref!(o);
    if out.is_null() {
        return fail_null("out");
    }
    match delta_obs_analytic(&o.inner) {
        Ok(v) => {
            unsafe { *out = v };
            UfStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Closed-form covariant-dual variance for generator matrix `xi`.
#[no_mangle]
pub unsafe extern "C" fn uframe_delta_xi_analytic(
    xi: *const UfMatrix,
    o: *const UfObservable,
    out: *mut f64,
) -> UfStatus {
    let xi = deref!(xi);
    let o = deref!(o);
    if out.is_null() {
        return fail_null("out");
    }
    let xi = match xi_from_matrix(xi) {
        Ok(x) => x,
        Err(e) => return fail(e),
    };
    match delta_xi_analytic(&xi, &o.inner) {
        Ok(v) => {
            unsafe { *out = v };
            UfStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// The optimal-dual noise coefficient `(d²+d−1−p)/(dp−1)`.
#[no_mangle]
pub unsafe extern "C" fn uframe_delta_opt_analytic(p: f64, d: usize, out: *mut f64) -> UfStatus {
    if out.is_null() {
        return fail_null("out");
    }
    match delta_opt_analytic(p, d) {
        Ok(v) => {
            unsafe { *out = v };
            UfStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Monte Carlo estimate of the ideal-measurement variance.
#[no_mangle]
pub unsafe extern "C" fn uframe_delta_obs_mc(
    o: *const UfObservable,
    n: usize,
    seed: u64,
    out_estimate: *mut f64,
    out_std_error: *mut f64,
) -> UfStatus {
    let o = deref!(o);
    if out_estimate.is_null() || out_std_error.is_null() {
        return fail_null("out");
    }
    match delta_obs_mc(&o.inner, n, seed) {
        Ok(est) => {
            unsafe {
                *out_estimate = est.estimate;
                *out_std_error = est.std_error;
            }
            UfStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Monte Carlo estimate of the covariant-dual variance for generator `xi`.
#[no_mangle]
pub unsafe extern "C" fn uframe_delta_xi_mc(
    xi: *const UfMatrix,
    nu: *const UfDensity,
    o: *const UfObservable,
    n_states: usize,
    n_group: usize,
    seed: u64,
    out_estimate: *mut f64,
    out_std_error: *mut f64,
) -> UfStatus {
    let xi = deref!(xi);
    let nu = deref!(nu);
    let o = deref!(o);
    if out_estimate.is_null() || out_std_error.is_null() {
        return fail_null("out");
    }
    let xi = match xi_from_matrix(xi) {
        Ok(x) => x,
        Err(e) => return fail(e),
    };
    match delta_xi_mc(&xi, &nu.inner, &o.inner, n_states, n_group, seed) {
        Ok(est) => {
            unsafe {
                *out_estimate = est.estimate;
                *out_std_error = est.std_error;
            }
            UfStatus::Ok
        }
        Err(e) => fail(e),
    }
}
