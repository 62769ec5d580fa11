//! C interface to `slitwave-core`.
//!
//! Handles are opaque and owned by the caller once returned; release them with
//! the matching `_free`. Every fallible function returns a [`SlitwaveStatus`]
//! and, on failure, leaves a message for [`slitwave_last_error_message`] on the
//! calling thread. Output pointers are written only on success.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use slitwave_core::config::{parse_config, Assumption, ExperimentConfig};
use slitwave_core::density::peak_count;
use slitwave_core::experiment::{run_scenario, ScenarioResult};
use slitwave_core::output::write_profile_csv;
use slitwave_core::physics::de_broglie_wavelength;
use slitwave_core::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlitwaveStatus {
    Ok = 0,
    /// Bad configuration text, key or value.
    Config = 2,
    /// A numerical tolerance or budget could not be met.
    Numerical = 3,
    Io = 4,
    NullPointer = 5,
    /// Buffer length mismatch, non-UTF-8 string and similar.
    InvalidArgument = 6,
    /// A Rust panic was caught at the boundary.
    Panic = 7,
}

/// Parsed experiment configuration.
pub struct SlitwaveConfig {
    inner: ExperimentConfig,
}

/// Detector profiles of one scenario.
pub struct SlitwaveResult {
    inner: ScenarioResult,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn clear_last_error() {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
}

struct Failure(SlitwaveStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e.exit_code() {
            2 => SlitwaveStatus::Config,
            4 => SlitwaveStatus::Io,
            _ => SlitwaveStatus::Numerical,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(SlitwaveStatus::NullPointer, format!("null pointer: {what}"))
}

fn invalid(message: impl Into<String>) -> Failure {
    Failure(SlitwaveStatus::InvalidArgument, message.into())
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SlitwaveStatus {
    clear_last_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SlitwaveStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_last_error(message);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {msg}"));
            SlitwaveStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid(format!("{what} is not valid UTF-8")))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn config_ref<'a>(p: *const SlitwaveConfig) -> Result<&'a SlitwaveConfig, Failure> {
    p.as_ref().ok_or_else(|| null("config"))
}

unsafe fn result_ref<'a>(p: *const SlitwaveResult) -> Result<&'a ScenarioResult, Failure> {
    p.as_ref().map(|r| &r.inner).ok_or_else(|| null("result"))
}

unsafe fn copy_out(src: &[f64], out: *mut f64, len: usize) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("out"));
    }
    if len != src.len() {
        return Err(invalid(format!("buffer holds {len} values, result has {}", src.len())));
    }
    ptr::copy_nonoverlapping(src.as_ptr(), out, len);
    Ok(())
}

/// Message of the last failed call on this thread, or NULL. The pointer stays
/// valid until the next `slitwave_*` call on the same thread.
#[no_mangle]
pub extern "C" fn slitwave_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Configuration with every key at its default.
///
/// # Safety
/// `out` must be valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn slitwave_config_new_default(out: *mut *mut SlitwaveConfig) -> SlitwaveStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = Box::into_raw(Box::new(SlitwaveConfig { inner: ExperimentConfig::default() }));
        Ok(())
    })
}

/// Parse a TOML document. Missing keys take their defaults.
///
/// # Safety
/// `toml` must be a NUL-terminated string; `out` must be valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn slitwave_config_parse(toml: *const c_char, out: *mut *mut SlitwaveConfig) -> SlitwaveStatus {
    guard(|| {
        let text = str_arg(toml, "toml")?;
        let out = out_arg(out, "out")?;
        let inner = parse_config(text)?;
        *out = Box::into_raw(Box::new(SlitwaveConfig { inner }));
        Ok(())
    })
}

/// `"usual"`, `"classical"` or `"alternative"`.
///
/// # Safety
/// `config` must come from this library; `name` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn slitwave_config_set_assumption(config: *mut SlitwaveConfig, name: *const c_char) -> SlitwaveStatus {
    guard(|| {
        let config = config.as_mut().ok_or_else(|| null("config"))?;
        let assumption: Assumption = str_arg(name, "name")?.parse()?;
        config.inner = config.inner.with_assumption(assumption);
        Ok(())
    })
}

/// Worker threads for propagation; 0 uses every core. Results do not depend on it.
///
/// # Safety
/// `config` must come from this library.
#[no_mangle]
pub unsafe extern "C" fn slitwave_config_set_workers(config: *mut SlitwaveConfig, workers: usize) -> SlitwaveStatus {
    guard(|| {
        let config = config.as_mut().ok_or_else(|| null("config"))?;
        config.inner = config.inner.with_workers(workers);
        Ok(())
    })
}

/// # Safety
/// `config` must come from this library and not be used afterwards. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn slitwave_config_free(config: *mut SlitwaveConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// de Broglie wavelength in metres for the configured particle.
///
/// # Safety
/// `config` must come from this library; `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn slitwave_de_broglie_wavelength(config: *const SlitwaveConfig, out: *mut f64) -> SlitwaveStatus {
    guard(|| {
        let config = config_ref(config)?;
        *out_arg(out, "out")? = de_broglie_wavelength(&config.inner.setup);
        Ok(())
    })
}

/// Propagate to the detector and evaluate the configured assumption.
///
/// # Safety
/// `config` must come from this library; `out` must be valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn slitwave_run_scenario(config: *const SlitwaveConfig, out: *mut *mut SlitwaveResult) -> SlitwaveStatus {
    guard(|| {
        let config = config_ref(config)?;
        let out = out_arg(out, "out")?;
        let inner = run_scenario(&config.inner)?;
        *out = Box::into_raw(Box::new(SlitwaveResult { inner }));
        Ok(())
    })
}

/// Number of detector grid points.
///
/// # Safety
/// `result` must come from this library; `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn slitwave_result_len(result: *const SlitwaveResult, out: *mut usize) -> SlitwaveStatus {
    guard(|| {
        let r = result_ref(result)?;
        *out_arg(out, "out")? = r.detector_field.len();
        Ok(())
    })
}

/// Detector positions in metres. `len` must equal `slitwave_result_len`.
///
/// # Safety
/// `out` must be valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn slitwave_result_copy_grid(result: *const SlitwaveResult, out: *mut f64, len: usize) -> SlitwaveStatus {
    guard(|| copy_out(&result_ref(result)?.detector_field.grid, out, len))
}

/// `|psi|^2` on the grid.
///
/// # Safety
/// `out` must be valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn slitwave_result_copy_born(result: *const SlitwaveResult, out: *mut f64, len: usize) -> SlitwaveStatus {
    guard(|| copy_out(&result_ref(result)?.born_profile.values, out, len))
}

/// Density reported under the configured assumption.
///
/// # Safety
/// `out` must be valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn slitwave_result_copy_reported(result: *const SlitwaveResult, out: *mut f64, len: usize) -> SlitwaveStatus {
    guard(|| copy_out(&result_ref(result)?.reported_profile.values, out, len))
}

/// Field as interleaved `re, im` pairs; `len` is twice the grid length.
///
/// # Safety
/// `out` must be valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn slitwave_result_copy_field(result: *const SlitwaveResult, out: *mut f64, len: usize) -> SlitwaveStatus {
    guard(|| {
        let r = result_ref(result)?;
        let flat: Vec<f64> = r.detector_field.values.iter().flat_map(|z| [z.re, z.im]).collect();
        copy_out(&flat, out, len)
    })
}

/// Median of the born profile in metres. `has_median` is false, and `out`
/// untouched, unless the assumption is alternative.
///
/// # Safety
/// `out` and `has_median` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn slitwave_result_median(result: *const SlitwaveResult, out: *mut f64, has_median: *mut bool) -> SlitwaveStatus {
    guard(|| {
        let r = result_ref(result)?;
        let out = out_arg(out, "out")?;
        let has = out_arg(has_median, "has_median")?;
        *has = r.median_x.is_some();
        if let Some(x) = r.median_x {
            *out = x;
        }
        Ok(())
    })
}

/// Peaks of the reported profile whose prominence exceeds
/// `prominence_fraction` of its maximum.
///
/// # Safety
/// `out` must be valid for a write.
#[no_mangle]
pub unsafe extern "C" fn slitwave_result_peak_count(
    result: *const SlitwaveResult,
    prominence_fraction: f64,
    out: *mut usize,
) -> SlitwaveStatus {
    guard(|| {
        let r = result_ref(result)?;
        if !(prominence_fraction > 0.0 && prominence_fraction < 1.0) {
            return Err(invalid(format!("prominence_fraction {prominence_fraction} not in (0, 1)")));
        }
        *out_arg(out, "out")? = peak_count(&r.reported_profile, prominence_fraction);
        Ok(())
    })
}

/// Write the profile CSV with its provenance header.
///
/// # Safety
/// `path` must be a NUL-terminated UTF-8 string.
#[no_mangle]
pub unsafe extern "C" fn slitwave_result_write_csv(result: *const SlitwaveResult, path: *const c_char) -> SlitwaveStatus {
    guard(|| {
        let r = result_ref(result)?;
        let path = str_arg(path, "path")?;
        write_profile_csv(r, Path::new(path))?;
        Ok(())
    })
}

/// # Safety
/// `result` must come from this library and not be used afterwards. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn slitwave_result_free(result: *mut SlitwaveResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}
