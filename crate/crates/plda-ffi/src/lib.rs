//! C ABI for the plda library: opaque handles for series, configurations,
//! and detectors; status codes plus a thread-local last-error message.
//!
//! Conventions:
//! - Constructors return a status and write the handle through an out
//!   pointer; every handle has a matching `_free` that accepts null.
//! - All functions catch panics and report them as `PLDA_STATUS_PANIC`.
//! - `plda_last_error` returns the message for the most recent failure on
//!   the calling thread; the pointer is valid until the next failing call.

use plda::detector::{anomaly_scores, Detector};
use plda::evalgen::best_f1;
use plda::trainer::{baseline_run, run, RunConfig};
use plda::windows::TimeSeries;
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

/// Status code returned by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PldaStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// Invalid input: bad configuration, dimensions, or argument values.
    InvalidArgument = 2,
    /// File or parse error.
    IoError = 3,
    /// Numerical or other runtime failure.
    RuntimeError = 4,
    /// A panic was caught at the FFI boundary.
    Panic = 5,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(err: &plda::Error) -> PldaStatus {
    use plda::Error as E;
    match err {
        E::Config(_) | E::InvalidArgument(_) | E::DimensionMismatch { .. } => {
            PldaStatus::InvalidArgument
        }
        E::Io(_) | E::Csv(_) | E::Json(_) | E::Checkpoint(_) => PldaStatus::IoError,
        _ => PldaStatus::RuntimeError,
    }
}

/// Runs `f` with panic containment and error capture.
fn guarded(f: impl FnOnce() -> Result<(), (PldaStatus, String)>) -> PldaStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PldaStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("panic at FFI boundary");
            PldaStatus::Panic
        }
    }
}

fn fail(e: plda::Error) -> (PldaStatus, String) {
    (status_of(&e), e.to_string())
}

fn null_arg(name: &str) -> (PldaStatus, String) {
    (PldaStatus::NullArgument, format!("{name} is null"))
}

unsafe fn cstr<'a>(ptr: *const c_char, name: &str) -> Result<&'a str, (PldaStatus, String)> {
    if ptr.is_null() {
        return Err(null_arg(name));
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map_err(|e| (PldaStatus::InvalidArgument, format!("{name}: {e}")))
}

/// Message for the most recent failure on this thread; empty string if none.
///
/// # Safety
/// The returned pointer is only valid until the next failing call on this
/// thread.
#[no_mangle]
pub unsafe extern "C" fn plda_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// A time series handle (observations plus optional point labels).
pub struct PldaSeries {
    inner: TimeSeries,
}

/// A run-configuration handle.
pub struct PldaConfig {
    inner: RunConfig,
}

/// A trained detector handle.
pub struct PldaDetector {
    inner: Detector,
}

/// Loads a series from CSV (columns f0..f{d-1}, optional `label` column).
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn plda_series_load_csv(
    path: *const c_char,
    out: *mut *mut PldaSeries,
) -> PldaStatus {
    guarded(|| {
        if out.is_null() {
            return Err(null_arg("out"));
        }
        let path = cstr(path, "path")?;
        let inner = plda::io::read_series_csv(Path::new(path)).map_err(fail)?;
        *out = Box::into_raw(Box::new(PldaSeries { inner }));
        Ok(())
    })
}

/// Builds a series from a row-major buffer of `n` points with `d` features.
///
/// # Safety
/// `data` must point to `n * d` doubles; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn plda_series_from_data(
    data: *const f64,
    n: usize,
    d: usize,
    out: *mut *mut PldaSeries,
) -> PldaStatus {
    guarded(|| {
        if out.is_null() {
            return Err(null_arg("out"));
        }
        if data.is_null() {
            return Err(null_arg("data"));
        }
        let buf = std::slice::from_raw_parts(data, n * d).to_vec();
        let inner = TimeSeries::new("ffi", buf, d, None).map_err(fail)?;
        *out = Box::into_raw(Box::new(PldaSeries { inner }));
        Ok(())
    })
}

/// Number of points in the series; 0 for null.
///
/// # Safety
/// `series` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn plda_series_len(series: *const PldaSeries) -> usize {
    if series.is_null() {
        return 0;
    }
    unsafe { (*series).inner.len() }
}

/// Feature dimension of the series; 0 for null.
///
/// # Safety
/// `series` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn plda_series_dim(series: *const PldaSeries) -> usize {
    if series.is_null() {
        return 0;
    }
    unsafe { (*series).inner.dim() }
}

/// Frees a series handle; null is a no-op.
///
/// # Safety
/// `series` must be null or an unfreed handle from this library.
#[no_mangle]
pub unsafe extern "C" fn plda_series_free(series: *mut PldaSeries) {
    if !series.is_null() {
        drop(unsafe { Box::from_raw(series) });
    }
}

/// Creates a configuration with the library defaults.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn plda_config_default(out: *mut *mut PldaConfig) -> PldaStatus {
    guarded(|| {
        if out.is_null() {
            return Err(null_arg("out"));
        }
        *out = Box::into_raw(Box::new(PldaConfig {
            inner: RunConfig::default(),
        }));
        Ok(())
    })
}

/// Loads a configuration from TOML; unknown keys are errors.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn plda_config_load(
    path: *const c_char,
    out: *mut *mut PldaConfig,
) -> PldaStatus {
    guarded(|| {
        if out.is_null() {
            return Err(null_arg("out"));
        }
        let path = cstr(path, "path")?;
        let inner = plda::io::load_config(Path::new(path)).map_err(fail)?;
        *out = Box::into_raw(Box::new(PldaConfig { inner }));
        Ok(())
    })
}

/// Frees a configuration handle; null is a no-op.
///
/// # Safety
/// `config` must be null or an unfreed handle from this library.
#[no_mangle]
pub unsafe extern "C" fn plda_config_free(config: *mut PldaConfig) {
    if !config.is_null() {
        drop(unsafe { Box::from_raw(config) });
    }
}

/// Trains a detector on `series`. With `augment` true this runs the full
/// augmentation pipeline; false trains the plain baseline.
///
/// # Safety
/// All handles must be valid; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn plda_train(
    series: *const PldaSeries,
    config: *const PldaConfig,
    seed: u64,
    augment: bool,
    out: *mut *mut PldaDetector,
) -> PldaStatus {
    guarded(|| {
        if out.is_null() {
            return Err(null_arg("out"));
        }
        if series.is_null() {
            return Err(null_arg("series"));
        }
        if config.is_null() {
            return Err(null_arg("config"));
        }
        let series = &(*series).inner;
        let cfg = &(*config).inner;
        let (det, _) = if augment {
            run(series, cfg, seed, None).map_err(fail)?
        } else {
            baseline_run(series, cfg, seed).map_err(fail)?
        };
        *out = Box::into_raw(Box::new(PldaDetector { inner: det }));
        Ok(())
    })
}

/// Loads a detector checkpoint.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn plda_detector_load(
    path: *const c_char,
    out: *mut *mut PldaDetector,
) -> PldaStatus {
    guarded(|| {
        if out.is_null() {
            return Err(null_arg("out"));
        }
        let path = cstr(path, "path")?;
        let inner = Detector::load(Path::new(path)).map_err(fail)?;
        *out = Box::into_raw(Box::new(PldaDetector { inner }));
        Ok(())
    })
}

/// Saves a detector checkpoint.
///
/// # Safety
/// `detector` must be a valid handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn plda_detector_save(
    detector: *const PldaDetector,
    path: *const c_char,
) -> PldaStatus {
    guarded(|| {
        if detector.is_null() {
            return Err(null_arg("detector"));
        }
        let path = cstr(path, "path")?;
        (*detector).inner.save(Path::new(path)).map_err(fail)
    })
}

/// Window length the detector was trained with; 0 for null.
///
/// # Safety
/// `detector` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn plda_detector_window(detector: *const PldaDetector) -> usize {
    if detector.is_null() {
        return 0;
    }
    unsafe { (*detector).inner.config.w }
}

/// Frees a detector handle; null is a no-op.
///
/// # Safety
/// `detector` must be null or an unfreed handle from this library.
#[no_mangle]
pub unsafe extern "C" fn plda_detector_free(detector: *mut PldaDetector) {
    if !detector.is_null() {
        drop(unsafe { Box::from_raw(detector) });
    }
}

/// Per-point anomaly scores for `series`; `out_scores` must hold exactly
/// as many doubles as the series has points.
///
/// # Safety
/// Handles must be valid; `out_scores` must point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn plda_anomaly_scores(
    detector: *const PldaDetector,
    series: *const PldaSeries,
    out_scores: *mut f64,
    len: usize,
) -> PldaStatus {
    guarded(|| {
        if detector.is_null() {
            return Err(null_arg("detector"));
        }
        if series.is_null() {
            return Err(null_arg("series"));
        }
        if out_scores.is_null() {
            return Err(null_arg("out_scores"));
        }
        let det = &(*detector).inner;
        let series = &(*series).inner;
        if len != series.len() {
            return Err((
                PldaStatus::InvalidArgument,
                format!("out_scores length {len} != series length {}", series.len()),
            ));
        }
        let scores = anomaly_scores(det, series, det.config.w).map_err(fail)?;
        std::slice::from_raw_parts_mut(out_scores, len).copy_from_slice(&scores);
        Ok(())
    })
}

/// Best F1 over all thresholds, optionally point-adjusted. Labels are 0/1.
///
/// # Safety
/// `scores` and `labels` must each point to `n` elements; out pointers may
/// be null when a value is not wanted.
#[no_mangle]
pub unsafe extern "C" fn plda_best_f1(
    scores: *const f64,
    labels: *const u8,
    n: usize,
    adjust: bool,
    out_f1: *mut f64,
    out_threshold: *mut f64,
) -> PldaStatus {
    guarded(|| {
        if scores.is_null() {
            return Err(null_arg("scores"));
        }
        if labels.is_null() {
            return Err(null_arg("labels"));
        }
        let scores = std::slice::from_raw_parts(scores, n);
        let labels = std::slice::from_raw_parts(labels, n);
        let result = best_f1(scores, labels, adjust).map_err(fail)?;
        if !out_f1.is_null() {
            *out_f1 = result.best_f1;
        }
        if !out_threshold.is_null() {
            *out_threshold = result.best_threshold;
        }
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::ffi::CString;
    use std::ptr;

    fn c(s: &str) -> CString {
        CString::new(s).unwrap()
    }

    #[test]
    fn null_arguments_are_rejected_with_messages() {
        unsafe {
            let mut out = ptr::null_mut();
            assert_eq!(
                plda_series_load_csv(ptr::null(), &mut out),
                PldaStatus::NullArgument
            );
            let msg = CStr::from_ptr(plda_last_error()).to_str().unwrap();
            assert!(msg.contains("path"), "{msg}");
            assert_eq!(
                plda_series_load_csv(c("x.csv").as_ptr(), ptr::null_mut()),
                PldaStatus::NullArgument
            );
        }
        unsafe {
            plda_series_free(ptr::null_mut());
            plda_detector_free(ptr::null_mut());
            plda_config_free(ptr::null_mut());
        }
    }

    #[test]
    fn missing_file_reports_io_error() {
        unsafe {
            let mut out = ptr::null_mut();
            let status = plda_series_load_csv(c("/nonexistent/x.csv").as_ptr(), &mut out);
            assert_eq!(status, PldaStatus::IoError);
            assert!(out.is_null());
        }
    }

    #[test]
    fn series_from_data_and_accessors() {
        unsafe {
            let data = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
            let mut series = ptr::null_mut();
            assert_eq!(
                plda_series_from_data(data.as_ptr(), 3, 2, &mut series),
                PldaStatus::Ok
            );
            assert_eq!(plda_series_len(series), 3);
            assert_eq!(plda_series_dim(series), 2);
            plda_series_free(series);

            let mut bad = ptr::null_mut();
            assert_eq!(
                plda_series_from_data(data.as_ptr(), 0, 2, &mut bad),
                PldaStatus::InvalidArgument
            );
        }
    }

    #[test]
    fn train_score_save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let ckpt = c(dir.path().join("det.json").to_str().unwrap());
        let cfg_path = dir.path().join("cfg.toml");
        std::fs::write(
            &cfg_path,
            "w = 8\ne = 0\nk = 20\nmax_epochs = 2\ndet_hidden = [6]\nbottleneck = 3\n",
        )
        .unwrap();

        let n = 200;
        let data: Vec<f64> = (0..n).map(|t| (t as f64 * 0.3).sin()).collect();
        unsafe {
            let mut series = ptr::null_mut();
            assert_eq!(
                plda_series_from_data(data.as_ptr(), n, 1, &mut series),
                PldaStatus::Ok
            );
            let mut cfg = ptr::null_mut();
            assert_eq!(
                plda_config_load(c(cfg_path.to_str().unwrap()).as_ptr(), &mut cfg),
                PldaStatus::Ok
            );
            let mut det = ptr::null_mut();
            assert_eq!(plda_train(series, cfg, 3, false, &mut det), PldaStatus::Ok);
            assert_eq!(plda_detector_window(det), 8);

            let mut scores = vec![0.0; n];
            assert_eq!(
                plda_anomaly_scores(det, series, scores.as_mut_ptr(), n),
                PldaStatus::Ok
            );
            assert!(scores.iter().all(|s| s.is_finite()));
            assert_eq!(
                plda_anomaly_scores(det, series, scores.as_mut_ptr(), n - 1),
                PldaStatus::InvalidArgument
            );

            assert_eq!(plda_detector_save(det, ckpt.as_ptr()), PldaStatus::Ok);
            let mut reloaded = ptr::null_mut();
            assert_eq!(
                plda_detector_load(ckpt.as_ptr(), &mut reloaded),
                PldaStatus::Ok
            );
            let mut scores2 = vec![0.0; n];
            assert_eq!(
                plda_anomaly_scores(reloaded, series, scores2.as_mut_ptr(), n),
                PldaStatus::Ok
            );
            assert_eq!(scores, scores2);

            plda_detector_free(det);
            plda_detector_free(reloaded);
            plda_config_free(cfg);
            plda_series_free(series);
        }
    }

    #[test]
    fn best_f1_matches_library() {
        let scores = [0.9, 0.1, 0.8, 0.2];
        let labels = [1u8, 0, 1, 0];
        unsafe {
            let mut f1 = 0.0;
            let mut th = 0.0;
            assert_eq!(
                plda_best_f1(scores.as_ptr(), labels.as_ptr(), 4, false, &mut f1, &mut th),
                PldaStatus::Ok
            );
            assert_eq!(f1, 1.0);
            assert_eq!(th, 0.8);

            let all_zero = [0u8; 4];
            assert_eq!(
                plda_best_f1(
                    scores.as_ptr(),
                    all_zero.as_ptr(),
                    4,
                    false,
                    &mut f1,
                    &mut th
                ),
                PldaStatus::RuntimeError
            );
        }
    }
}
