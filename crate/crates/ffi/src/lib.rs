//! C ABI over `corrdetect`.
//!
//! Conventions:
//! * every fallible function returns a [`CdStatus`]; on failure
//!   [`cd_last_error_message`] describes the error on the calling thread;
//! * results go through out-pointers;
//! * index sets are 0-based `size_t` arrays;
//! * families and random streams are opaque handles released with their
//!   `_free` function (passing NULL is a no-op).

use corrdetect::bounds::{bayes_lower_bound, corollary_condition, nu};
use corrdetect::classes::{MgfMode, SetFamily};
use corrdetect::detectors::{dyadic_scan, gof_stat, gof_threshold, log_bayes_lr, scan};
use corrdetect::model::{self, CorrelationModel};
use corrdetect::rng::{self, Stream};
use corrdetect::Error;
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

/// Status codes returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CdStatus {
    Ok = 0,
    InvalidParameter = 1,
    InvalidSet = 2,
    DimensionMismatch = 3,
    NotPositiveDefinite = 4,
    EnumerationCap = 5,
    ExactUnavailable = 6,
    Unsupported = 7,
    Precondition = 8,
    Parse = 9,
    Io = 10,
    NullPointer = 11,
    Panic = 12,
}

/// Overlap-MGF evaluation mode for [`cd_bayes_lower_bound`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CdMgfMode {
    Exact = 0,
    CorollaryBound = 1,
    MonteCarlo = 2,
}

/// Opaque candidate-set family.
pub struct CdFamily(SetFamily);

/// Opaque random stream.
pub struct CdRng(Stream);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> CdStatus {
    match e {
        Error::InvalidParameter(_) => CdStatus::InvalidParameter,
        Error::InvalidSet(_) | Error::DuplicateMember(_) => CdStatus::InvalidSet,
        Error::DimensionMismatch { .. } => CdStatus::DimensionMismatch,
        Error::NotPositiveDefinite => CdStatus::NotPositiveDefinite,
        Error::EnumerationCap { .. } => CdStatus::EnumerationCap,
        Error::ExactUnavailable(_) => CdStatus::ExactUnavailable,
        Error::Unsupported(_) => CdStatus::Unsupported,
        Error::Precondition(_) => CdStatus::Precondition,
        Error::Parse(_) | Error::Json(_) | Error::Csv(_) => CdStatus::Parse,
        Error::Io(_) => CdStatus::Io,
    }
}

struct NullArg(&'static str);

enum Failure {
    Lib(Error),
    Null(NullArg),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<NullArg> for Failure {
    fn from(n: NullArg) -> Self {
        Failure::Null(n)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> CdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CdStatus::Ok,
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Ok(Err(Failure::Null(NullArg(name)))) => {
            set_error(format!("null pointer passed for {name}"));
            CdStatus::NullPointer
        }
        Err(_) => {
            set_error("internal panic".into());
            CdStatus::Panic
        }
    }
}

unsafe fn slice<'a, T>(p: *const T, len: usize, name: &'static str) -> Result<&'a [T], NullArg> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(NullArg(name));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a, T>(p: *mut T, len: usize, name: &'static str) -> Result<&'a mut [T], NullArg> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(NullArg(name));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn out<'a, T>(p: *mut T, name: &'static str) -> Result<&'a mut T, NullArg> {
    p.as_mut().ok_or(NullArg(name))
}

unsafe fn family<'a>(p: *const CdFamily) -> Result<&'a SetFamily, NullArg> {
    p.as_ref().map(|f| &f.0).ok_or(NullArg("family"))
}

fn store_family(out_family: *mut *mut CdFamily, f: SetFamily) -> Result<(), Failure> {
    let slot = unsafe { out(out_family, "out_family")? };
    *slot = Box::into_raw(Box::new(CdFamily(f)));
    Ok(())
}

/// Message for the last failed call on this thread. Valid until the next
/// failing call on the same thread; never NULL.
#[no_mangle]
pub extern "C" fn cd_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn cd_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Circular intervals `{i, ..., i+k-1} mod n`.
#[no_mangle]
pub extern "C" fn cd_family_intervals(n: usize, k: usize, out_family: *mut *mut CdFamily) -> CdStatus {
    guard(|| store_family(out_family, SetFamily::intervals(n, k)?))
}

/// All `k`-subsets of `n` coordinates.
#[no_mangle]
pub extern "C" fn cd_family_ksets(n: usize, k: usize, out_family: *mut *mut CdFamily) -> CdStatus {
    guard(|| store_family(out_family, SetFamily::k_sets(n, k)?))
}

/// Products of circular intervals on the torus `Z_m^d`.
///
/// # Safety
/// `sides` must point to `d` readable values.
#[no_mangle]
pub unsafe extern "C" fn cd_family_hypercubes(
    m: usize,
    sides: *const usize,
    d: usize,
    out_family: *mut *mut CdFamily,
) -> CdStatus {
    guard(|| {
        let s = slice(sides, d, "sides")?;
        store_family(out_family, SetFamily::hypercubes(m, s.to_vec())?)
    })
}

/// Perfect matchings of `K_{k,k}`, `n = k^2`.
#[no_mangle]
pub extern "C" fn cd_family_matchings(k: usize, out_family: *mut *mut CdFamily) -> CdStatus {
    guard(|| store_family(out_family, SetFamily::perfect_matchings(k)?))
}

/// Spanning trees of `K_{k+1}`, `n = k(k+1)/2`.
#[no_mangle]
pub extern "C" fn cd_family_trees(k: usize, out_family: *mut *mut CdFamily) -> CdStatus {
    guard(|| store_family(out_family, SetFamily::spanning_trees(k)?))
}

/// Explicit family from the text format (1-based indices, one member per
/// line). `n = 0` infers the dimension from the largest index.
///
/// # Safety
/// `text` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn cd_family_parse_explicit(text: *const c_char, n: usize, out_family: *mut *mut CdFamily) -> CdStatus {
    guard(|| {
        if text.is_null() {
            return Err(NullArg("text").into());
        }
        let s = CStr::from_ptr(text).to_str().map_err(|e| Error::Parse(e.to_string()))?;
        store_family(out_family, SetFamily::parse_explicit(s, (n > 0).then_some(n))?)
    })
}

/// Releases a family.
///
/// # Safety
/// `family` must come from a `cd_family_*` constructor and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cd_family_free(family: *mut CdFamily) {
    if !family.is_null() {
        drop(Box::from_raw(family));
    }
}

/// Ambient dimension `n`, or 0 for NULL.
///
/// # Safety
/// `family` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cd_family_n(family: *const CdFamily) -> usize {
    family.as_ref().map_or(0, |f| f.0.n())
}

/// Member size `k`, or 0 for NULL.
///
/// # Safety
/// `family` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cd_family_k(family: *const CdFamily) -> usize {
    family.as_ref().map_or(0, |f| f.0.k())
}

/// `ln N`, or NaN for NULL.
///
/// # Safety
/// `family` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cd_family_log_size(family: *const CdFamily) -> f64 {
    family.as_ref().map_or(f64::NAN, |f| f.0.log_size())
}

/// Draws a uniform member into `out_set` (`k` entries, sorted, 0-based).
///
/// # Safety
/// Handles must be live; `out_set` must have room for `k` values.
#[no_mangle]
pub unsafe extern "C" fn cd_family_sample_member(family: *const CdFamily, rng: *mut CdRng, out_set: *mut usize) -> CdStatus {
    guard(|| {
        let f = self::family(family)?;
        let r = out(rng, "rng")?;
        let dst = slice_mut(out_set, f.k(), "out_set")?;
        dst.copy_from_slice(&f.sample_member(&mut r.0));
        Ok(())
    })
}

/// Stream for trial `trial` of experiment `experiment` under `master_seed`.
#[no_mangle]
pub extern "C" fn cd_rng_new(master_seed: u64, experiment: u64, trial: u64) -> *mut CdRng {
    Box::into_raw(Box::new(CdRng(rng::stream(master_seed, experiment, trial))))
}

/// Releases a stream.
///
/// # Safety
/// `rng` must come from [`cd_rng_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn cd_rng_free(rng: *mut CdRng) {
    if !rng.is_null() {
        drop(Box::from_raw(rng));
    }
}

/// `n` i.i.d. standard normals into `out_x`.
///
/// # Safety
/// `rng` must be live; `out_x` must have room for `n` values.
#[no_mangle]
pub unsafe extern "C" fn cd_sample_null(rng: *mut CdRng, n: usize, out_x: *mut f64) -> CdStatus {
    guard(|| {
        let r = out(rng, "rng")?;
        let dst = slice_mut(out_x, n, "out_x")?;
        dst.copy_from_slice(model::sample_null(n, &mut r.0).values());
        Ok(())
    })
}

/// One draw from `N(0, A_S)` with equicorrelation `rho` on `set`.
///
/// # Safety
/// `set` has `k` entries; `out_x` has room for `n` values.
#[no_mangle]
pub unsafe extern "C" fn cd_sample_alternative(
    rng: *mut CdRng,
    n: usize,
    rho: f64,
    set: *const usize,
    k: usize,
    out_x: *mut f64,
) -> CdStatus {
    guard(|| {
        let r = out(rng, "rng")?;
        let s = slice(set, k, "set")?;
        let dst = slice_mut(out_x, n, "out_x")?;
        let m = CorrelationModel::new(n, k, rho)?;
        dst.copy_from_slice(model::sample_alternative(&m, s, &mut r.0)?.values());
        Ok(())
    })
}

/// `x^T (I - A_S^{-1}) x`.
///
/// # Safety
/// `x` has `n` entries, `set` has `k` entries.
#[no_mangle]
pub unsafe extern "C" fn cd_quad_form(x: *const f64, n: usize, set: *const usize, k: usize, rho: f64, out_value: *mut f64) -> CdStatus {
    guard(|| {
        let v = model::quad_form(slice(x, n, "x")?, slice(set, k, "set")?, rho)?;
        *out(out_value, "out_value")? = v;
        Ok(())
    })
}

/// `ln det A_S = (k-1) ln(1-ρ) + ln(1 + ρ(k-1))`.
#[no_mangle]
pub extern "C" fn cd_log_det_as(k: usize, rho: f64) -> f64 {
    model::log_det_as(k, rho)
}

/// `(Σ x_i)^2`.
///
/// # Safety
/// `x` has `n` entries.
#[no_mangle]
pub unsafe extern "C" fn cd_squared_sum_stat(x: *const f64, n: usize, out_value: *mut f64) -> CdStatus {
    guard(|| {
        let s: f64 = slice(x, n, "x")?.iter().sum();
        *out(out_value, "out_value")? = s * s;
        Ok(())
    })
}

/// GLRT scan `max_S x^T (I - A_S^{-1}) x` over the family.
///
/// # Safety
/// `x` has `n` entries, `family` is live.
#[no_mangle]
pub unsafe extern "C" fn cd_glrt_stat(x: *const f64, n: usize, family: *const CdFamily, rho: f64, out_value: *mut f64) -> CdStatus {
    guard(|| {
        *out(out_value, "out_value")? = scan::glrt_stat(slice(x, n, "x")?, self::family(family)?, rho)?;
        Ok(())
    })
}

/// `max_S (Σ_{i in S} x_i)^2` over the family.
///
/// # Safety
/// `x` has `n` entries, `family` is live.
#[no_mangle]
pub unsafe extern "C" fn cd_local_sq_stat(x: *const f64, n: usize, family: *const CdFamily, out_value: *mut f64) -> CdStatus {
    guard(|| {
        *out(out_value, "out_value")? = scan::local_sq_stat(slice(x, n, "x")?, self::family(family)?)?;
        Ok(())
    })
}

/// Dyadic multiscale scan; `out_start`/`out_len` (0-based) may be NULL.
///
/// # Safety
/// `x` has `n` entries.
#[no_mangle]
pub unsafe extern "C" fn cd_dyadic_scan_stat(
    x: *const f64,
    n: usize,
    out_value: *mut f64,
    out_start: *mut usize,
    out_len: *mut usize,
) -> CdStatus {
    guard(|| {
        let r = dyadic_scan(slice(x, n, "x")?);
        *out(out_value, "out_value")? = r.value;
        if let Some(s) = out_start.as_mut() {
            *s = r.start;
        }
        if let Some(l) = out_len.as_mut() {
            *l = r.len;
        }
        Ok(())
    })
}

/// Largest of `m` histogram bins of `Φ(x_i)`.
///
/// # Safety
/// `x` has `n` entries.
#[no_mangle]
pub unsafe extern "C" fn cd_gof_stat(x: *const f64, n: usize, m: usize, out_value: *mut f64) -> CdStatus {
    guard(|| {
        *out(out_value, "out_value")? = gof_stat(slice(x, n, "x")?, m)?;
        Ok(())
    })
}

/// `n/m + sqrt(3 n ln(m) / m)`.
#[no_mangle]
pub extern "C" fn cd_gof_threshold(n: usize, m: usize) -> f64 {
    gof_threshold(n, m)
}

/// `ln L(x)` for the uniform prior on an enumerable family.
///
/// # Safety
/// `x` has `n` entries, `family` is live.
#[no_mangle]
pub unsafe extern "C" fn cd_log_bayes_lr(x: *const f64, n: usize, family: *const CdFamily, rho: f64, out_value: *mut f64) -> CdStatus {
    guard(|| {
        let v = log_bayes_lr(slice(x, n, "x")?, self::family(family)?, rho, corrdetect::classes::DEFAULT_ENUMERATION_CAP)?;
        *out(out_value, "out_value")? = v;
        Ok(())
    })
}

/// `ρ a^2 / (1+ρ) - ½ ln(1 - ρ^2)`.
#[no_mangle]
pub extern "C" fn cd_nu(rho: f64, a: f64) -> f64 {
    nu(rho, a)
}

/// Clipped Bayes-risk lower bound. `pairs` and `seed` are used only in
/// Monte Carlo mode. `out_mgf` may be NULL.
///
/// # Safety
/// `family` is live.
#[no_mangle]
pub unsafe extern "C" fn cd_bayes_lower_bound(
    family: *const CdFamily,
    rho: f64,
    a: f64,
    mode: CdMgfMode,
    pairs: u64,
    seed: u64,
    out_bound: *mut f64,
    out_mgf: *mut f64,
) -> CdStatus {
    guard(|| {
        let mode = match mode {
            CdMgfMode::Exact => MgfMode::Exact,
            CdMgfMode::CorollaryBound => MgfMode::CorollaryBound,
            CdMgfMode::MonteCarlo => MgfMode::MonteCarlo { pairs, seed },
        };
        let r = bayes_lower_bound(self::family(family)?, rho, a, mode)?;
        *out(out_bound, "out_bound")? = r.lower_bound;
        if let Some(m) = out_mgf.as_mut() {
            *m = r.mgf_value;
        }
        Ok(())
    })
}

/// Printed sufficient condition of the family's corollary.
///
/// # Safety
/// `family` is live.
#[no_mangle]
pub unsafe extern "C" fn cd_corollary_condition(
    family: *const CdFamily,
    rho: f64,
    out_holds: *mut bool,
    out_guaranteed_bound: *mut f64,
) -> CdStatus {
    guard(|| {
        let c = corollary_condition(self::family(family)?, rho)?;
        *out(out_holds, "out_holds")? = c.condition_holds;
        *out(out_guaranteed_bound, "out_guaranteed_bound")? = c.guaranteed_bound;
        Ok(())
    })
}
