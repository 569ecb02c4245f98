//! C ABI over the gaplab core.
//!
//! Every fallible call returns a [`GaplabStatus`] and writes its result
//! through an out-pointer. Objects cross the boundary as opaque handles that
//! the caller releases with the matching `*_free`. After a failure,
//! [`gaplab_last_error`] copies a message describing it.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use gaplab::certificate::{neumann_verdict, rate_schedule_log10};
use gaplab::hyperbolic::{lattice_point_set, LatticeQuery, SurfaceModel};
use gaplab::linalg::{CMatrix, LanczosOptions, C64};
use gaplab::operator_lab::{assemble, hermitize, regular_norm_lower};
use gaplab::parametrix::kernel::{remainder_kernel, resolvent_kernel};
use gaplab::{CoefficientMap, Error, Flavor, ReducedWord, RepresentationSample};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GaplabStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Domain = 3,
    Budget = 4,
    Convergence = 5,
    Numeric = 6,
    Parse = 7,
    Internal = 99,
}

/// Sampled representation of the free group.
pub struct GaplabRep(RepresentationSample);

/// Finitely supported matrix-valued coefficient map.
pub struct GaplabCoeffMap(CoefficientMap);

/// Fuchsian surface model.
pub struct GaplabModel(SurfaceModel);

/// Rate schedule at a given n.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct GaplabSchedule {
    pub t: f64,
    pub kappa: f64,
    pub s_min: f64,
    pub gap_bound: f64,
}

/// `flavor` argument: 0 for permutation (covers), 1 for unitary (bundles).
pub const GAPLAB_FLAVOR_PERMUTATION: u32 = 0;
pub const GAPLAB_FLAVOR_UNITARY: u32 = 1;

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> GaplabStatus {
    match e.root() {
        Error::InvalidLetter { .. } | Error::Dimension(_) | Error::Flavor(_) | Error::Shape(_) | Error::Symmetry { .. } => {
            GaplabStatus::InvalidArgument
        }
        Error::Budget { .. } => GaplabStatus::Budget,
        Error::Convergence { .. } => GaplabStatus::Convergence,
        Error::Numeric(_) | Error::Construction { .. } => GaplabStatus::Numeric,
        Error::Domain(_) | Error::Grid(_) => GaplabStatus::Domain,
        Error::Config(_) | Error::Json(_) | Error::Csv(_) => GaplabStatus::Parse,
        _ => GaplabStatus::Internal,
    }
}

/// Runs `f`, converting errors and panics into a status plus a stored message.
fn guard(f: impl FnOnce() -> Result<(), (GaplabStatus, String)>) -> GaplabStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => GaplabStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            GaplabStatus::Internal
        }
    }
}

fn core<T>(r: gaplab::Result<T>) -> Result<T, (GaplabStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (GaplabStatus, String) {
    (GaplabStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> (GaplabStatus, String) {
    (GaplabStatus::InvalidArgument, msg.into())
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, (GaplabStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn write<T>(out: *mut T, value: T, what: &str) -> Result<(), (GaplabStatus, String)> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

fn flavor(code: u32) -> Result<Flavor, (GaplabStatus, String)> {
    match code {
        GAPLAB_FLAVOR_PERMUTATION => Ok(Flavor::Permutation),
        GAPLAB_FLAVOR_UNITARY => Ok(Flavor::Unitary),
        _ => Err(invalid(format!("unknown flavor code {code}"))),
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn gaplab_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the calling thread's last error message into `buf` (truncated,
/// always NUL-terminated when `len > 0`). Returns the full message length
/// excluding the terminator, or 0 when no error is stored.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn gaplab_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else { return 0 };
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let k = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr(), buf.cast::<u8>(), k);
            *buf.add(k) = 0;
        }
        bytes.len()
    })
}

/// Samples a representation of F_d on ℂⁿ.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn gaplab_rep_sample(
    flavor_code: u32,
    n: usize,
    d: usize,
    seed: u64,
    out: *mut *mut GaplabRep,
) -> GaplabStatus {
    guard(|| {
        let rep = core(RepresentationSample::sample(flavor(flavor_code)?, n, d, seed))?;
        write(out, Box::into_raw(Box::new(GaplabRep(rep))), "out")
    })
}

/// # Safety
/// `rep` must be null or a handle from [`gaplab_rep_sample`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn gaplab_rep_free(rep: *mut GaplabRep) {
    if !rep.is_null() {
        drop(Box::from_raw(rep));
    }
}

/// Dimension n of the representation.
///
/// # Safety
/// `rep` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn gaplab_rep_dim(rep: *const GaplabRep, out: *mut usize) -> GaplabStatus {
    guard(|| write(out, deref(rep, "rep")?.0.n, "out"))
}

/// Whether a permutation representation acts transitively.
///
/// # Safety
/// `rep` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn gaplab_rep_is_transitive(rep: *const GaplabRep, out: *mut bool) -> GaplabStatus {
    guard(|| {
        let t = core(deref(rep, "rep")?.0.is_transitive())?;
        write(out, t, "out")
    })
}

/// Empty coefficient map with m×m coefficients.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn gaplab_coeff_new(m: usize, out: *mut *mut GaplabCoeffMap) -> GaplabStatus {
    guard(|| {
        if m == 0 {
            return Err(invalid("m must be positive"));
        }
        write(out, Box::into_raw(Box::new(GaplabCoeffMap(CoefficientMap::new(m)))), "out")
    })
}

/// ∑ (g_i + g_i⁻¹) with scalar coefficients.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn gaplab_coeff_generator_sum(d: usize, out: *mut *mut GaplabCoeffMap) -> GaplabStatus {
    guard(|| {
        if d == 0 {
            return Err(invalid("d must be positive"));
        }
        write(out, Box::into_raw(Box::new(GaplabCoeffMap(CoefficientMap::generator_sum(d)))), "out")
    })
}

/// Adds the m×m matrix (`re` + i·`im`, row-major) at the reduced form of the
/// word `letters[0..len]` over rank `rank`. Letters are ±1..=±rank.
///
/// # Safety
/// `map` must be valid; `letters` valid for `len` entries (or null when
/// `len == 0`); `re` and `im` valid for m² entries.
#[no_mangle]
pub unsafe extern "C" fn gaplab_coeff_insert(
    map: *mut GaplabCoeffMap,
    letters: *const i32,
    len: usize,
    rank: usize,
    re: *const f64,
    im: *const f64,
) -> GaplabStatus {
    guard(|| {
        let map = map.as_mut().ok_or_else(|| null("map"))?;
        let letters = if len == 0 {
            &[][..]
        } else if letters.is_null() {
            return Err(null("letters"));
        } else {
            std::slice::from_raw_parts(letters, len)
        };
        if re.is_null() || im.is_null() {
            return Err(null("coefficient"));
        }
        let m = map.0.m();
        let re = std::slice::from_raw_parts(re, m * m);
        let im = std::slice::from_raw_parts(im, m * m);
        let w = core(ReducedWord::reduce(letters, rank))?;
        let a = CMatrix::from_fn(m, m, |i, j| C64::new(re[i * m + j], im[i * m + j]));
        core(map.0.insert(w, a))
    })
}

/// Number of words in the support.
///
/// # Safety
/// `map` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn gaplab_coeff_len(map: *const GaplabCoeffMap, out: *mut usize) -> GaplabStatus {
    guard(|| write(out, deref(map, "map")?.0.len(), "out"))
}

/// New map (a + a*)/2 with a*_γ = (a_{γ⁻¹})*.
///
/// # Safety
/// `map` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn gaplab_coeff_hermitize(map: *const GaplabCoeffMap, out: *mut *mut GaplabCoeffMap) -> GaplabStatus {
    guard(|| {
        let h = hermitize(&deref(map, "map")?.0);
        write(out, Box::into_raw(Box::new(GaplabCoeffMap(h))), "out")
    })
}

/// # Safety
/// `map` must be null or a live coefficient-map handle.
#[no_mangle]
pub unsafe extern "C" fn gaplab_coeff_free(map: *mut GaplabCoeffMap) {
    if !map.is_null() {
        drop(Box::from_raw(map));
    }
}

/// Operator norm of ∑ a_γ ⊗ ρ(γ), on the zero-mean subspace when requested.
///
/// # Safety
/// `map`, `rep` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn gaplab_operator_norm(
    map: *const GaplabCoeffMap,
    rep: *const GaplabRep,
    zero_mean: bool,
    tol: f64,
    seed: u64,
    out: *mut f64,
) -> GaplabStatus {
    guard(|| {
        if tol.is_nan() || tol <= 0.0 {
            return Err(invalid("tol must be positive"));
        }
        let op = core(assemble(&deref(map, "map")?.0, &deref(rep, "rep")?.0, zero_mean))?;
        let est = core(op.norm(&LanczosOptions::default().with_tol(tol).with_seed(seed)))?;
        write(out, est.value, "out")
    })
}

/// Lower bound for the norm in the regular representation from the
/// compression to the ball of radius `radius`.
///
/// # Safety
/// `map` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn gaplab_regular_norm_lower(
    map: *const GaplabCoeffMap,
    radius: usize,
    tol: f64,
    out: *mut f64,
) -> GaplabStatus {
    guard(|| {
        let v = core(regular_norm_lower(&deref(map, "map")?.0, radius, tol))?;
        write(out, v, "out")
    })
}

/// The built-in punctured-torus model.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn gaplab_model_punctured_torus(out: *mut *mut GaplabModel) -> GaplabStatus {
    guard(|| write(out, Box::into_raw(Box::new(GaplabModel(SurfaceModel::punctured_torus()))), "out"))
}

/// Model from its JSON form.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn gaplab_model_from_json(json: *const c_char, out: *mut *mut GaplabModel) -> GaplabStatus {
    guard(|| {
        if json.is_null() {
            return Err(null("json"));
        }
        let s = CStr::from_ptr(json).to_str().map_err(|e| (GaplabStatus::Parse, e.to_string()))?;
        let m = core(SurfaceModel::from_json(s))?;
        write(out, Box::into_raw(Box::new(GaplabModel(m))), "out")
    })
}

/// # Safety
/// `model` must be null or a live model handle.
#[no_mangle]
pub unsafe extern "C" fn gaplab_model_free(model: *mut GaplabModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// |S(T)| for the model at the given κ and geometric constant.
///
/// # Safety
/// `model` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn gaplab_lattice_count(
    model: *const GaplabModel,
    t: f64,
    kappa: f64,
    c_geo: f64,
    out: *mut usize,
) -> GaplabStatus {
    guard(|| {
        let set = core(lattice_point_set(&deref(model, "model")?.0, &LatticeQuery::new(t, kappa, c_geo)))?;
        write(out, set.len(), "out")
    })
}

/// Resolvent kernel R(s; r) of the hyperbolic plane.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn gaplab_resolvent_kernel(s: f64, r: f64, out: *mut f64) -> GaplabStatus {
    guard(|| write(out, core(resolvent_kernel(s, r))?, "out"))
}

/// Remainder kernel at truncation time T, supported on [T, T+1].
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn gaplab_remainder_kernel(s: f64, t: f64, r: f64, out: *mut f64) -> GaplabStatus {
    guard(|| write(out, core(remainder_kernel(s, t, r))?, "out"))
}

/// Rate schedule at n = 10^`log10_n`.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn gaplab_rate_schedule(
    flavor_code: u32,
    log10_n: f64,
    d: usize,
    out: *mut GaplabSchedule,
) -> GaplabStatus {
    guard(|| {
        let r = core(rate_schedule_log10(flavor(flavor_code)?, log10_n, d))?;
        write(out, GaplabSchedule { t: r.t, kappa: r.kappa, s_min: r.s_min, gap_bound: r.gap_bound }, "out")
    })
}

/// Whether norm_int + norm_cusp < 1.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn gaplab_neumann_verdict(norm_int: f64, norm_cusp: f64, out: *mut bool) -> GaplabStatus {
    guard(|| write(out, core(neumann_verdict(norm_int, norm_cusp, None))?.verdict, "out"))
}
