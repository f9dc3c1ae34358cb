//! C ABI for the coastcover pipeline.
//!
//! All heap objects cross the boundary as opaque handles; every fallible
//! call returns a `CcStatus` and leaves a message retrievable through
//! `cc_last_error`. Out-parameters are only written on `CC_STATUS_OK`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::path::Path;
use std::sync::Arc;

use coastcover::assess::{
    build_confusion, cohen_kappa, overall_accuracy, per_class_metrics, sample_points,
    ConfusionMatrix,
};
use coastcover::change::class_areas;
use coastcover::classify::majority_filter;
use coastcover::io;
use coastcover::raster::MaskRaster;
use coastcover::{ClassScheme, LabelRaster};

/// Result code for every fallible call.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum CcStatus {
    /// Success; out-parameters are valid.
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// The requested quantity is undefined for this input (e.g. kappa
    /// of a degenerate matrix); not an error.
    NotAvailable = 3,
    /// An index was outside the valid range.
    OutOfRange = 4,
    /// The operation itself failed; see cc_last_error().
    Failed = 5,
}

/// Per-class accuracy statistic selector.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum CcMetric {
    ProducersAccuracy = 0,
    UsersAccuracy = 1,
    RandAccuracy = 2,
}

/// Opaque class-scheme handle.
pub struct CcScheme {
    inner: Arc<ClassScheme>,
}

/// Opaque label-raster handle.
pub struct CcLabels {
    inner: LabelRaster,
}

/// Opaque confusion-matrix handle.
pub struct CcConfusion {
    inner: ConfusionMatrix,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl std::fmt::Display) {
    let text = msg.to_string().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).unwrap());
}

/// Message for the most recent failure on this thread. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn cc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

unsafe fn path_arg<'a>(ptr: *const c_char) -> Result<&'a Path, CcStatus> {
    if ptr.is_null() {
        set_error("null path argument");
        return Err(CcStatus::NullArgument);
    }
    match CStr::from_ptr(ptr).to_str() {
        Ok(s) => Ok(Path::new(s)),
        Err(_) => {
            set_error("path is not valid UTF-8");
            Err(CcStatus::InvalidUtf8)
        }
    }
}

macro_rules! nonnull {
    ($ptr:expr) => {
        match unsafe { $ptr.as_ref() } {
            Some(r) => r,
            None => {
                set_error(concat!("null argument: ", stringify!($ptr)));
                return CcStatus::NullArgument;
            }
        }
    };
}

// ---------------------------------------------------------------- scheme

/// New handle for the built-in six-class coastal scheme.
#[no_mangle]
pub extern "C" fn cc_scheme_default() -> *mut CcScheme {
    Box::into_raw(Box::new(CcScheme { inner: Arc::new(ClassScheme::default_coastal()) }))
}

/// Load a scheme from a config file; writes the handle to `out`.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cc_scheme_load(path: *const c_char, out: *mut *mut CcScheme) -> CcStatus {
    if out.is_null() {
        set_error("null out pointer");
        return CcStatus::NullArgument;
    }
    let path = match path_arg(path) {
        Ok(p) => p,
        Err(s) => return s,
    };
    match io::load_scheme(path) {
        Ok(s) => {
            *out = Box::into_raw(Box::new(CcScheme { inner: Arc::new(s) }));
            CcStatus::Ok
        }
        Err(e) => {
            set_error(e);
            CcStatus::Failed
        }
    }
}

/// Number of classes in the scheme (excluding the masked sentinel).
#[no_mangle]
pub extern "C" fn cc_scheme_class_count(scheme: *const CcScheme, out: *mut usize) -> CcStatus {
    let scheme = nonnull!(scheme);
    if out.is_null() {
        set_error("null out pointer");
        return CcStatus::NullArgument;
    }
    unsafe { *out = scheme.inner.len() };
    CcStatus::Ok
}

/// Copy the name of class `id` into `buf` (NUL-terminated, truncated to
/// `buf_len` bytes including the terminator).
#[no_mangle]
pub extern "C" fn cc_scheme_class_name(
    scheme: *const CcScheme,
    id: u8,
    buf: *mut c_char,
    buf_len: usize,
) -> CcStatus {
    let scheme = nonnull!(scheme);
    if buf.is_null() || buf_len == 0 {
        set_error("null or empty name buffer");
        return CcStatus::NullArgument;
    }
    let name = match scheme.inner.name_of(id) {
        Some(n) => n,
        None => {
            set_error(format!("no class with id {}", id));
            return CcStatus::OutOfRange;
        }
    };
    let bytes = name.as_bytes();
    let n = bytes.len().min(buf_len - 1);
    unsafe {
        std::ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
        *buf.add(n) = 0;
    }
    CcStatus::Ok
}

/// Release a scheme handle. Null is a no-op.
#[no_mangle]
pub extern "C" fn cc_scheme_free(scheme: *mut CcScheme) {
    if !scheme.is_null() {
        drop(unsafe { Box::from_raw(scheme) });
    }
}

// ---------------------------------------------------------------- labels

/// Load a label raster (gray = raw ids, color = nearest-color decode).
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cc_labels_load(
    path: *const c_char,
    scheme: *const CcScheme,
    out: *mut *mut CcLabels,
) -> CcStatus {
    let scheme = nonnull!(scheme);
    if out.is_null() {
        set_error("null out pointer");
        return CcStatus::NullArgument;
    }
    let path = match path_arg(path) {
        Ok(p) => p,
        Err(s) => return s,
    };
    match io::load_labels(path, &scheme.inner) {
        Ok(l) => {
            *out = Box::into_raw(Box::new(CcLabels { inner: l }));
            CcStatus::Ok
        }
        Err(e) => {
            set_error(e);
            CcStatus::Failed
        }
    }
}

/// Write a label raster as a single-channel id PNG with a world file.
///
/// # Safety
/// `path` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn cc_labels_save(labels: *const CcLabels, path: *const c_char) -> CcStatus {
    let labels = nonnull!(labels);
    let path = match path_arg(path) {
        Ok(p) => p,
        Err(s) => return s,
    };
    match io::save_labels(path, &labels.inner) {
        Ok(()) => CcStatus::Ok,
        Err(e) => {
            set_error(e);
            CcStatus::Failed
        }
    }
}

#[no_mangle]
pub extern "C" fn cc_labels_width(labels: *const CcLabels, out: *mut u32) -> CcStatus {
    let labels = nonnull!(labels);
    if out.is_null() {
        set_error("null out pointer");
        return CcStatus::NullArgument;
    }
    unsafe { *out = labels.inner.width() };
    CcStatus::Ok
}

#[no_mangle]
pub extern "C" fn cc_labels_height(labels: *const CcLabels, out: *mut u32) -> CcStatus {
    let labels = nonnull!(labels);
    if out.is_null() {
        set_error("null out pointer");
        return CcStatus::NullArgument;
    }
    unsafe { *out = labels.inner.height() };
    CcStatus::Ok
}

/// Class id at (col, row); the masked sentinel is 255.
#[no_mangle]
pub extern "C" fn cc_labels_at(
    labels: *const CcLabels,
    col: u32,
    row: u32,
    out: *mut u8,
) -> CcStatus {
    let labels = nonnull!(labels);
    if out.is_null() {
        set_error("null out pointer");
        return CcStatus::NullArgument;
    }
    if col >= labels.inner.width() || row >= labels.inner.height() {
        set_error(format!("pixel ({}, {}) outside raster", col, row));
        return CcStatus::OutOfRange;
    }
    unsafe { *out = labels.inner.label(col, row) };
    CcStatus::Ok
}

/// Majority-filtered copy; `radius` >= 1, `iterations` >= 1.
#[no_mangle]
pub extern "C" fn cc_labels_majority_filter(
    labels: *const CcLabels,
    radius: u32,
    iterations: u32,
    out: *mut *mut CcLabels,
) -> CcStatus {
    let labels = nonnull!(labels);
    if out.is_null() {
        set_error("null out pointer");
        return CcStatus::NullArgument;
    }
    if radius == 0 || iterations == 0 {
        set_error("radius and iterations must be >= 1");
        return CcStatus::OutOfRange;
    }
    let filtered = majority_filter(&labels.inner, radius, iterations);
    unsafe { *out = Box::into_raw(Box::new(CcLabels { inner: filtered })) };
    CcStatus::Ok
}

/// Per-class areas in hectares, indexed by class id. `areas_len` must be
/// at least the scheme's class count.
#[no_mangle]
pub extern "C" fn cc_labels_class_areas(
    labels: *const CcLabels,
    areas: *mut f64,
    areas_len: usize,
) -> CcStatus {
    let labels = nonnull!(labels);
    if areas.is_null() {
        set_error("null areas buffer");
        return CcStatus::NullArgument;
    }
    let scheme = labels.inner.scheme().clone();
    if areas_len < scheme.len() {
        set_error(format!("areas buffer holds {} values, need {}", areas_len, scheme.len()));
        return CcStatus::OutOfRange;
    }
    let table = match class_areas(&labels.inner, "epoch", None) {
        Ok(t) => t,
        Err(e) => {
            set_error(e);
            return CcStatus::Failed;
        }
    };
    let out = unsafe { std::slice::from_raw_parts_mut(areas, scheme.len()) };
    for (i, slot) in out.iter_mut().enumerate() {
        *slot = scheme
            .name_of(i as u8)
            .and_then(|n| table.area_of(n))
            .unwrap_or(0.0);
    }
    CcStatus::Ok
}

/// Release a labels handle. Null is a no-op.
#[no_mangle]
pub extern "C" fn cc_labels_free(labels: *mut CcLabels) {
    if !labels.is_null() {
        drop(unsafe { Box::from_raw(labels) });
    }
}

// ------------------------------------------------------------ assessment

/// Confusion matrix from `n` seeded random points over the non-masked
/// intersection of a reference and a predicted raster.
#[no_mangle]
pub extern "C" fn cc_confusion_build(
    reference: *const CcLabels,
    predicted: *const CcLabels,
    n: usize,
    seed: u64,
    out: *mut *mut CcConfusion,
) -> CcStatus {
    let reference = nonnull!(reference);
    let predicted = nonnull!(predicted);
    if out.is_null() {
        set_error("null out pointer");
        return CcStatus::NullArgument;
    }
    let mask = MaskRaster::all_valid(reference.inner.width(), reference.inner.height());
    let result = sample_points(&mask, n, seed)
        .and_then(|sample| build_confusion(&reference.inner, &predicted.inner, &sample));
    match result {
        Ok(cm) => {
            unsafe { *out = Box::into_raw(Box::new(CcConfusion { inner: cm })) };
            CcStatus::Ok
        }
        Err(e) => {
            set_error(e);
            CcStatus::Failed
        }
    }
}

#[no_mangle]
pub extern "C" fn cc_confusion_overall_accuracy(
    cm: *const CcConfusion,
    out: *mut f64,
) -> CcStatus {
    let cm = nonnull!(cm);
    if out.is_null() {
        set_error("null out pointer");
        return CcStatus::NullArgument;
    }
    match overall_accuracy(&cm.inner) {
        Ok(v) => {
            unsafe { *out = v };
            CcStatus::Ok
        }
        Err(e) => {
            set_error(e);
            CcStatus::Failed
        }
    }
}

/// Cohen's kappa; `CC_STATUS_NOT_AVAILABLE` when undefined.
#[no_mangle]
pub extern "C" fn cc_confusion_kappa(cm: *const CcConfusion, out: *mut f64) -> CcStatus {
    let cm = nonnull!(cm);
    if out.is_null() {
        set_error("null out pointer");
        return CcStatus::NullArgument;
    }
    match cohen_kappa(&cm.inner) {
        Ok(Some(v)) => {
            unsafe { *out = v };
            CcStatus::Ok
        }
        Ok(None) => CcStatus::NotAvailable,
        Err(e) => {
            set_error(e);
            CcStatus::Failed
        }
    }
}

/// One per-class statistic; `CC_STATUS_NOT_AVAILABLE` when the
/// denominator is zero.
#[no_mangle]
pub extern "C" fn cc_confusion_class_metric(
    cm: *const CcConfusion,
    class: usize,
    metric: CcMetric,
    out: *mut f64,
) -> CcStatus {
    let cm = nonnull!(cm);
    if out.is_null() {
        set_error("null out pointer");
        return CcStatus::NullArgument;
    }
    if class >= cm.inner.n_classes() {
        set_error(format!("class index {} out of range", class));
        return CcStatus::OutOfRange;
    }
    let metrics = match per_class_metrics(&cm.inner) {
        Ok(m) => m,
        Err(e) => {
            set_error(e);
            return CcStatus::Failed;
        }
    };
    let value = match metric {
        CcMetric::ProducersAccuracy => metrics[class].producers_accuracy,
        CcMetric::UsersAccuracy => metrics[class].users_accuracy,
        CcMetric::RandAccuracy => metrics[class].rand_accuracy,
    };
    match value {
        Some(v) => {
            unsafe { *out = v };
            CcStatus::Ok
        }
        None => CcStatus::NotAvailable,
    }
}

/// Release a confusion-matrix handle. Null is a no-op.
#[no_mangle]
pub extern "C" fn cc_confusion_free(cm: *mut CcConfusion) {
    if !cm.is_null() {
        drop(unsafe { Box::from_raw(cm) });
    }
}
