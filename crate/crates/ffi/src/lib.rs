//! C ABI over `msi-core`.
//!
//! Every fallible function returns an [`MsiStatus`] and writes its result
//! through an out-pointer. On failure a message is kept per thread and can
//! be read with [`msi_last_error`]. Models are opaque handles created by
//! `msi_model_new`/`msi_model_from_json` and released with `msi_model_free`;
//! strings returned by the library are released with `msi_string_free`.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::ffi::{CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use libc::{c_char, size_t};
use msi_core::estimate::{self, QvMode};
use msi_core::model::{Axis, Breakpoints, StripSeries};
use msi_core::predict::{self, LewisClass};
use msi_core::simulate::{self, CovarianceKernel, SfbsMode, SimulationPlan};
use msi_core::{io, Error};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MsiStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidModel = 3,
    Domain = 4,
    Numerical = 5,
    Parse = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MsiLewis {
    HighlyAccurate = 0,
    Good = 1,
    Reasonable = 2,
    Inaccurate = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MsiSfbsMode {
    Single = 0,
    PerRectangle = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MsiQvMode {
    Raw = 0,
    Increment = 1,
}

/// Opaque fitted model.
pub struct MsiModel {
    inner: msi_core::MsiModel,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(e: &Error) -> MsiStatus {
    match e {
        Error::InvalidHurstPrime { .. }
        | Error::InvalidScale { .. }
        | Error::InvalidHurst { .. }
        | Error::LengthMismatch { .. }
        | Error::InvalidField(_) => MsiStatus::InvalidModel,
        Error::OffLattice(..)
        | Error::NonLatticeScale(..)
        | Error::OutOfDomain(..)
        | Error::NegativeIndex(_)
        | Error::MissingRectangle(..)
        | Error::BackwardPrediction(..)
        | Error::OutOfExtent { .. } => MsiStatus::Domain,
        Error::FactorizationFailure { .. }
        | Error::NonRealResidue(_)
        | Error::ZeroVariance { .. }
        | Error::ZeroDenominator(_)
        | Error::ZeroActual(..)
        | Error::EmptySet => MsiStatus::Numerical,
        Error::Ragged { .. } | Error::NonNumeric { .. } | Error::Negative { .. } | Error::Json(_) => MsiStatus::Parse,
        _ => MsiStatus::InvalidArgument,
    }
}

enum Fail {
    Null(&'static str),
    Core(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Core(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> MsiStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MsiStatus::Ok,
        Ok(Err(Fail::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            MsiStatus::NullPointer
        }
        Ok(Err(Fail::Core(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            MsiStatus::Panic
        }
    }
}

unsafe fn slice_in<'a>(p: *const f64, n: size_t, what: &'static str) -> Result<&'a [f64], Fail> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    Ok(slice::from_raw_parts(p, n))
}

unsafe fn pair_in(p: *const f64, what: &'static str) -> Result<[f64; 2], Fail> {
    let s = slice_in(p, 2, what)?;
    Ok([s[0], s[1]])
}

unsafe fn write_out<T>(p: *mut T, v: T, what: &'static str) -> Result<(), Fail> {
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    p.write(v);
    Ok(())
}

unsafe fn model_ref<'a>(m: *const MsiModel) -> Result<&'a msi_core::MsiModel, Fail> {
    m.as_ref().map(|m| &m.inner).ok_or(Fail::Null("model"))
}

/// Message of the last failure on this thread, or NULL. The pointer stays
/// valid until the next library call on the same thread.
#[no_mangle]
pub extern "C" fn msi_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Builds a model from raw arrays. `lambda` and `hurst` hold two values;
/// the `H'` arrays need one entry per interval of the matching breakpoints.
/// `H'` outside (0, 1) is accepted; see `msi_model_is_simulatable`.
///
/// # Safety
/// Every array pointer must be valid for its stated length and `out` must
/// be writable.
#[no_mangle]
pub unsafe extern "C" fn msi_model_new(
    lambda: *const f64,
    hurst: *const f64,
    hprime1: *const f64,
    n_hprime1: size_t,
    hprime2: *const f64,
    n_hprime2: size_t,
    breakpoints_a: *const f64,
    n_breakpoints_a: size_t,
    breakpoints_b: *const f64,
    n_breakpoints_b: size_t,
    out: *mut *mut MsiModel,
) -> MsiStatus {
    guard(|| {
        let inner = msi_core::MsiModel {
            lambda: pair_in(lambda, "lambda")?,
            hurst: pair_in(hurst, "hurst")?,
            hprime1: slice_in(hprime1, n_hprime1, "hprime1")?.to_vec(),
            hprime2: slice_in(hprime2, n_hprime2, "hprime2")?.to_vec(),
            breakpoints_a: Breakpoints::new(slice_in(breakpoints_a, n_breakpoints_a, "breakpoints_a")?.to_vec())?,
            breakpoints_b: Breakpoints::new(slice_in(breakpoints_b, n_breakpoints_b, "breakpoints_b")?.to_vec())?,
        };
        inner.check_structure()?;
        write_out(out, Box::into_raw(Box::new(MsiModel { inner })), "out")
    })
}

/// Parses a JSON model document.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn msi_model_from_json(json: *const c_char, out: *mut *mut MsiModel) -> MsiStatus {
    guard(|| {
        if json.is_null() {
            return Err(Fail::Null("json"));
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|_| Error::InvalidArgument("model JSON is not UTF-8".into()))?;
        let inner = io::model_from_json(text)?;
        write_out(out, Box::into_raw(Box::new(MsiModel { inner })), "out")
    })
}

/// Serializes a model. Release the string with `msi_string_free`.
///
/// # Safety
/// `model` must come from this library and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn msi_model_to_json(model: *const MsiModel, out: *mut *mut c_char) -> MsiStatus {
    guard(|| {
        let text = io::model_to_json(model_ref(model)?)?;
        let c = CString::new(text).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        write_out(out, c.into_raw(), "out")
    })
}

/// # Safety
/// `model` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn msi_model_free(model: *mut MsiModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// # Safety
/// `s` must be NULL or a string returned by this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn msi_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `model` must come from this library and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn msi_model_is_simulatable(model: *const MsiModel, out: *mut bool) -> MsiStatus {
    guard(|| write_out(out, model_ref(model)?.simulatable(), "out"))
}

/// Multiplier taking rectangle `(k1, k2)` to `(l1, l2)`; 1-based keys.
///
/// # Safety
/// `model` must come from this library and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn msi_prediction_factor(
    model: *const MsiModel,
    k1: size_t,
    k2: size_t,
    l1: size_t,
    l2: size_t,
    out: *mut f64,
) -> MsiStatus {
    guard(|| {
        let f = predict::prediction_factor(model_ref(model)?, (k1, k2), (l1, l2))?;
        write_out(out, f, "out")
    })
}

/// MAPE over `n` pairs. `exclude` may be NULL; otherwise a nonzero entry
/// drops that position from the average.
///
/// # Safety
/// `actual`, `predicted` (and `exclude` when non-NULL) must hold `n` items.
#[no_mangle]
pub unsafe extern "C" fn msi_mape(
    actual: *const f64,
    predicted: *const f64,
    exclude: *const u8,
    n: size_t,
    out: *mut f64,
) -> MsiStatus {
    guard(|| {
        let a = slice_in(actual, n, "actual")?;
        let p = slice_in(predicted, n, "predicted")?;
        let skip: BTreeSet<(usize, usize)> = if exclude.is_null() || n == 0 {
            BTreeSet::new()
        } else {
            slice::from_raw_parts(exclude, n)
                .iter()
                .enumerate()
                .filter(|(_, &e)| e != 0)
                .map(|(i, _)| (1, i + 1))
                .collect()
        };
        let am: BTreeMap<_, _> = a.iter().enumerate().map(|(i, v)| ((1, i + 1), *v)).collect();
        let pm: BTreeMap<_, _> = p.iter().enumerate().map(|(i, v)| ((1, i + 1), *v)).collect();
        write_out(out, predict::mape(&am, &pm, &skip)?, "out")
    })
}

#[no_mangle]
pub extern "C" fn msi_lewis_class(gamma: f64) -> MsiLewis {
    match predict::lewis_class(gamma) {
        LewisClass::HighlyAccurate => MsiLewis::HighlyAccurate,
        LewisClass::Good => MsiLewis::Good,
        LewisClass::Reasonable => MsiLewis::Reasonable,
        LewisClass::Inaccurate => MsiLewis::Inaccurate,
    }
}

/// Ratios of consecutive interval lengths. `out` receives `n - 2` values.
///
/// # Safety
/// `points` must hold `n` values and `out` room for `n - 2`.
#[no_mangle]
pub unsafe extern "C" fn msi_scale_from_breakpoints(points: *const f64, n: size_t, out: *mut f64) -> MsiStatus {
    guard(|| {
        let b = Breakpoints::new(slice_in(points, n, "points")?.to_vec())?;
        let s = estimate::scale_from_breakpoints(&b)?;
        if out.is_null() {
            return Err(Fail::Null("out"));
        }
        ptr::copy_nonoverlapping(s.values().as_ptr(), out, s.values().len());
        Ok(())
    })
}

/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn msi_hurst_from_ratio(ratio: f64, lambda: f64, out: *mut f64) -> MsiStatus {
    guard(|| write_out(out, estimate::hurst_from_ratio(ratio, lambda)?, "out"))
}

/// Dyadic `H'` estimate for the 0-based `interval` of a strip-sum series.
///
/// # Safety
/// `series` must hold `n` values, `points` `n_points` values.
#[no_mangle]
pub unsafe extern "C" fn msi_hurst_prime_dyadic(
    series: *const f64,
    n: size_t,
    points: *const f64,
    n_points: size_t,
    interval: size_t,
    out: *mut f64,
) -> MsiStatus {
    guard(|| {
        let s = StripSeries::new(Axis::Vertical, slice_in(series, n, "series")?.to_vec())?;
        let b = Breakpoints::new(slice_in(points, n_points, "points")?.to_vec())?;
        write_out(out, estimate::hurst_prime_dyadic(&s, &b, interval)?, "out")
    })
}

/// Quadratic variation `SS` of one subinterval partition.
///
/// # Safety
/// `values` must hold `n` values and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn msi_quadratic_variation(
    values: *const f64,
    n: size_t,
    mode: MsiQvMode,
    out: *mut f64,
) -> MsiStatus {
    guard(|| {
        let mode = match mode {
            MsiQvMode::Raw => QvMode::Raw,
            MsiQvMode::Increment => QvMode::Increment,
        };
        write_out(out, estimate::quadratic_variation(slice_in(values, n, "values")?, n, mode)?, "out")
    })
}

fn sfbs_mode(m: MsiSfbsMode) -> SfbsMode {
    match m {
        MsiSfbsMode::Single => SfbsMode::Single,
        MsiSfbsMode::PerRectangle => SfbsMode::PerRectangle,
    }
}

/// Fractional Brownian sheet covariance; `t`, `s`, `hprime` hold two values.
///
/// # Safety
/// All pointers must be valid for two values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn msi_fbs_cov(t: *const f64, s: *const f64, hprime: *const f64, out: *mut f64) -> MsiStatus {
    guard(|| {
        let c = simulate::fbs_cov(pair_in(t, "t")?, pair_in(s, "s")?, pair_in(hprime, "hprime")?)?;
        write_out(out, c, "out")
    })
}

/// Simple fractional Brownian sheet covariance of a simulatable model.
///
/// # Safety
/// `model` must come from this library; `t` and `s` hold two values.
#[no_mangle]
pub unsafe extern "C" fn msi_sfbs_cov(
    model: *const MsiModel,
    t: *const f64,
    s: *const f64,
    mode: MsiSfbsMode,
    out: *mut f64,
) -> MsiStatus {
    guard(|| {
        let c = simulate::sfbs_cov(pair_in(t, "t")?, pair_in(s, "s")?, model_ref(model)?, sfbs_mode(mode))?;
        write_out(out, c, "out")
    })
}

unsafe fn simulate_into(kernel: &CovarianceKernel, points: *const f64, n: size_t, seed: u64, out: *mut f64) -> Result<(), Fail> {
    let raw = slice_in(points, 2 * n, "points")?;
    let pts: Vec<[f64; 2]> = raw.chunks(2).map(|c| [c[0], c[1]]).collect();
    let values = simulate::simulate_gaussian(kernel, &SimulationPlan::new(pts, seed))?;
    if n > 0 && out.is_null() {
        return Err(Fail::Null("out"));
    }
    ptr::copy_nonoverlapping(values.as_ptr(), out, n);
    Ok(())
}

/// One fractional Brownian sheet realization at `n` points given as
/// interleaved `(t1, t2)` pairs.
///
/// # Safety
/// `points` must hold `2n` values, `out` room for `n`.
#[no_mangle]
pub unsafe extern "C" fn msi_simulate_fbs(
    hprime: *const f64,
    points: *const f64,
    n: size_t,
    seed: u64,
    out: *mut f64,
) -> MsiStatus {
    guard(|| {
        let kernel = CovarianceKernel::fbs(pair_in(hprime, "hprime")?)?;
        simulate_into(&kernel, points, n, seed, out)
    })
}

/// One simple fractional Brownian sheet realization from a model.
///
/// # Safety
/// `model` must come from this library; `points` must hold `2n` values and
/// `out` room for `n`.
#[no_mangle]
pub unsafe extern "C" fn msi_simulate_sfbs(
    model: *const MsiModel,
    mode: MsiSfbsMode,
    points: *const f64,
    n: size_t,
    seed: u64,
    out: *mut f64,
) -> MsiStatus {
    guard(|| {
        let kernel = CovarianceKernel::sfbs(model_ref(model)?.clone(), sfbs_mode(mode))?;
        simulate_into(&kernel, points, n, seed, out)
    })
}
