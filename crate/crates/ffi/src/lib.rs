//! C ABI over `qtc-core`.
//!
//! Every fallible call returns a [`QtcStatus`]; on failure the message is
//! available from [`qtc_last_error_message`] on the same thread. Models
//! are opaque handles released with [`qtc_model_free`]; strings returned
//! to the caller are released with [`qtc_string_free`]. Panics never cross
//! the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use qtc_core::circuits::FeatureMapSpec;
use qtc_core::kernel::exact_kernel;
use qtc_core::metrics;
use qtc_core::model::TrainedModel;
use qtc_core::QtcError;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QtcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Validation = 3,
    Schema = 4,
    Versioning = 5,
    Parse = 6,
    Numerical = 7,
    Io = 8,
    Panic = 9,
}

impl From<&QtcError> for QtcStatus {
    fn from(e: &QtcError) -> Self {
        match e {
            QtcError::Schema(_) => QtcStatus::Schema,
            QtcError::Validation(_) => QtcStatus::Validation,
            QtcError::Versioning(_) => QtcStatus::Versioning,
            QtcError::Parse { .. } | QtcError::Json(_) | QtcError::Csv(_) => QtcStatus::Parse,
            QtcError::Numerical(_) => QtcStatus::Numerical,
            QtcError::Io { .. } => QtcStatus::Io,
        }
    }
}

/// Trained classifier loaded from `model.json`.
pub struct QtcModel {
    model: TrainedModel,
    class_names: Vec<CString>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).expect("nul bytes removed"));
}

struct Failure(QtcStatus, String);

impl From<QtcError> for Failure {
    fn from(e: QtcError) -> Self {
        Failure((&e).into(), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> QtcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            QtcStatus::Ok
        }
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic");
            QtcStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(QtcStatus::NullPointer, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(QtcStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

/// Message of the last failed call on this thread, or an empty string.
/// The pointer stays valid until the next `qtc_*` call on this thread.
#[no_mangle]
pub extern "C" fn qtc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Exact fidelity kernel of the linear ZZ feature map with `reps`
/// repetitions on `n_qubits` qubits; `x` and `y` hold `n_qubits` values.
///
/// # Safety
/// `x` and `y` must point to `n_qubits` doubles and `out` to one double.
#[no_mangle]
pub unsafe extern "C" fn qtc_exact_kernel(
    n_qubits: usize,
    reps: usize,
    x: *const f64,
    y: *const f64,
    out: *mut f64,
) -> QtcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let x = slice_arg(x, n_qubits, "x")?;
        let y = slice_arg(y, n_qubits, "y")?;
        *out = exact_kernel(&FeatureMapSpec::zz(n_qubits, reps), x, y)?;
        Ok(())
    })
}

fn wrap(model: TrainedModel) -> Box<QtcModel> {
    let class_names = model
        .classes
        .iter()
        .map(|c| CString::new(c.replace('\0', " ")).expect("nul bytes removed"))
        .collect();
    Box::new(QtcModel { model, class_names })
}

/// Loads a model file. On success `*out` owns a handle.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qtc_model_load(path: *const c_char, out: *mut *mut QtcModel) -> QtcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let path = str_arg(path, "path")?;
        *out = Box::into_raw(wrap(TrainedModel::load(path)?));
        Ok(())
    })
}

/// Parses a model from JSON text. On success `*out` owns a handle.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn qtc_model_from_json(
    json: *const c_char,
    out: *mut *mut QtcModel,
) -> QtcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let json = str_arg(json, "json")?;
        *out = Box::into_raw(wrap(TrainedModel::from_json(json)?));
        Ok(())
    })
}

/// Feature count the model expects per row; 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qtc_model_n_features(model: *const QtcModel) -> usize {
    model.as_ref().map_or(0, |m| m.model.n_features)
}

/// Class count; 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qtc_model_n_classes(model: *const QtcModel) -> usize {
    model.as_ref().map_or(0, |m| m.model.n_classes())
}

/// Name of class `index`, owned by the handle; null when out of range.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn qtc_model_class_name(
    model: *const QtcModel,
    index: usize,
) -> *const c_char {
    model
        .as_ref()
        .and_then(|m| m.class_names.get(index))
        .map_or(ptr::null(), |s| s.as_ptr())
}

/// Predicts class indices for `n_rows` row-major rows of `n_cols` values.
///
/// # Safety
/// `x` must hold `n_rows * n_cols` doubles and `out` room for `n_rows`
/// indices.
#[no_mangle]
pub unsafe extern "C" fn qtc_model_predict(
    model: *const QtcModel,
    x: *const f64,
    n_rows: usize,
    n_cols: usize,
    out: *mut usize,
) -> QtcStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        if n_cols != m.model.n_features {
            return Err(Failure(
                QtcStatus::Validation,
                format!(
                    "model expects {} features, got {n_cols}",
                    m.model.n_features
                ),
            ));
        }
        let len = n_rows
            .checked_mul(n_cols)
            .ok_or_else(|| Failure(QtcStatus::Validation, "input size overflows".into()))?;
        let flat = slice_arg(x, len, "x")?;
        if n_rows > 0 && out.is_null() {
            return Err(null("out"));
        }
        let rows: Vec<Vec<f64>> = flat
            .chunks(n_cols.max(1))
            .map(<[f64]>::to_vec)
            .take(n_rows)
            .collect();
        let pred = m.model.predict(&rows)?;
        if n_rows > 0 {
            std::slice::from_raw_parts_mut(out, n_rows).copy_from_slice(&pred);
        }
        Ok(())
    })
}

/// Releases a handle. Null is ignored.
///
/// # Safety
/// `model` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qtc_model_free(model: *mut QtcModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Classification report for `n` labelled predictions as JSON. On success
/// `*out` owns a string to release with `qtc_string_free`.
///
/// # Safety
/// `y_true` and `y_pred` must hold `n` indices, `class_names` must hold
/// `n_classes` NUL-terminated strings, and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn qtc_report_json(
    y_true: *const usize,
    y_pred: *const usize,
    n: usize,
    class_names: *const *const c_char,
    n_classes: usize,
    out: *mut *mut c_char,
) -> QtcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let t = slice_arg(y_true, n, "y_true")?;
        let p = slice_arg(y_pred, n, "y_pred")?;
        let names = slice_arg(class_names, n_classes, "class_names")?
            .iter()
            .map(|&s| str_arg(s, "class name").map(str::to_string))
            .collect::<Result<Vec<_>, _>>()?;
        let cm = metrics::confusion(t, p, n_classes)?;
        let report = metrics::report(&cm, &names)?;
        let json = serde_json::to_string(&report).map_err(QtcError::from)?;
        *out = CString::new(json)
            .expect("JSON has no nul bytes")
            .into_raw();
        Ok(())
    })
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must be null or a string from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn qtc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
