//! C ABI over `fuzzyseg`.
//!
//! Images and results are opaque heap handles released with their `_free`
//! function. Every fallible call returns an [`FsStatus`]; on failure the
//! message is available from [`fs_last_error_message`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use fuzzyseg::pipeline::{segment_image, Algorithm, Outcome, RunConfig};
use fuzzyseg::{evaluate, BinaryMask, Error, ErrorKind, GrayImage};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FsStatus {
    Ok = 0,
    InvalidArgument = 1,
    SolverError = 2,
    IoError = 3,
    NullPointer = 4,
    Panic = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FsAlgorithm {
    Fcm = 0,
    Mfcm = 1,
    Pcm = 2,
    Fpcm = 3,
}

/// Run parameters; start from `fs_params_default()` and override fields.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct FsParams {
    pub algorithm: FsAlgorithm,
    pub clusters: u32,
    pub m: f64,
    pub eta_exp: f64,
    pub epsilon: f64,
    pub max_iter: u32,
    pub seed: u64,
    pub lambda: f64,
    pub r_l: u32,
    pub r_s: u32,
    pub r_p: u32,
    pub h: f64,
    pub k: f64,
}

/// Percent indices plus the confusion counts.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct FsEvalReport {
    pub similarity: f64,
    pub false_positive_ratio: f64,
    pub false_negative_ratio: f64,
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
}

/// Grayscale image with intensities in `[0, 1]`.
pub struct FsImage {
    image: GrayImage,
}

/// Outcome of `fs_segment`.
pub struct FsResult {
    outcome: Outcome,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: &str) {
    let text = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(text));
}

fn status_of(err: &Error) -> FsStatus {
    match err.kind() {
        ErrorKind::Usage => FsStatus::InvalidArgument,
        ErrorKind::Solver => FsStatus::SolverError,
        ErrorKind::Io => FsStatus::IoError,
    }
}

/// Runs `f`, converting errors and panics into a status.
fn guard(f: impl FnOnce() -> Result<(), FsStatus>) -> FsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => FsStatus::Ok,
        Ok(Err(status)) => status,
        Err(_) => {
            set_error("internal panic");
            FsStatus::Panic
        }
    }
}

fn fail(err: Error) -> FsStatus {
    set_error(&err.to_string());
    status_of(&err)
}

fn null(what: &str) -> FsStatus {
    set_error(&format!("{what} is null"));
    FsStatus::NullPointer
}

impl FsParams {
    fn to_config(self) -> RunConfig {
        RunConfig {
            algorithm: match self.algorithm {
                FsAlgorithm::Fcm => Algorithm::Fcm,
                FsAlgorithm::Mfcm => Algorithm::Mfcm,
                FsAlgorithm::Pcm => Algorithm::Pcm,
                FsAlgorithm::Fpcm => Algorithm::Fpcm,
            },
            clusters: self.clusters as usize,
            m: self.m,
            eta_exp: self.eta_exp,
            epsilon: self.epsilon,
            max_iter: self.max_iter as usize,
            seed: self.seed,
            lambda: self.lambda,
            r_l: self.r_l as usize,
            r_s: self.r_s as usize,
            r_p: self.r_p as usize,
            h: self.h,
            k: self.k,
            ..RunConfig::default()
        }
    }
}

#[no_mangle]
pub extern "C" fn fs_params_default() -> FsParams {
    let d = RunConfig::default();
    FsParams {
        algorithm: FsAlgorithm::Fcm,
        clusters: d.clusters as u32,
        m: d.m,
        eta_exp: d.eta_exp,
        epsilon: d.epsilon,
        max_iter: d.max_iter as u32,
        seed: d.seed,
        lambda: d.lambda,
        r_l: d.r_l as u32,
        r_s: d.r_s as u32,
        r_p: d.r_p as u32,
        h: d.h,
        k: d.k,
    }
}

/// Message of the last failed call on this thread, or NULL. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn fs_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Copies `width * height` row-major intensities into a new image.
///
/// # Safety
/// `intensities` must point to `width * height` readable doubles and `out`
/// must be a valid pointer to write the handle to.
#[no_mangle]
pub unsafe extern "C" fn fs_image_new(
    width: usize,
    height: usize,
    intensities: *const f64,
    out: *mut *mut FsImage,
) -> FsStatus {
    guard(|| {
        if intensities.is_null() {
            return Err(null("intensities"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let len = width.checked_mul(height).ok_or_else(|| fail(Error::InvalidParameters("image too large".into())))?;
        let values = std::slice::from_raw_parts(intensities, len).to_vec();
        let image = GrayImage::new(width, height, values).map_err(fail)?;
        *out = Box::into_raw(Box::new(FsImage { image }));
        Ok(())
    })
}

/// Reads a P5 PGM or 8-bit grayscale PNG.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn fs_image_read(path: *const c_char, out: *mut *mut FsImage) -> FsStatus {
    guard(|| {
        if path.is_null() {
            return Err(null("path"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| fail(Error::InvalidParameters("path is not UTF-8".into())))?;
        let image = fuzzyseg::imageio::read_gray(path).map_err(fail)?;
        *out = Box::into_raw(Box::new(FsImage { image }));
        Ok(())
    })
}

/// # Safety
/// `image` must be NULL or a handle from `fs_image_new`/`fs_image_read` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fs_image_free(image: *mut FsImage) {
    if !image.is_null() {
        drop(Box::from_raw(image));
    }
}

/// # Safety
/// `image` must be a live image handle.
#[no_mangle]
pub unsafe extern "C" fn fs_image_width(image: *const FsImage) -> usize {
    image.as_ref().map_or(0, |i| i.image.width())
}

/// # Safety
/// `image` must be a live image handle.
#[no_mangle]
pub unsafe extern "C" fn fs_image_height(image: *const FsImage) -> usize {
    image.as_ref().map_or(0, |i| i.image.height())
}

/// Segments `image`; on success `*out` receives a result handle.
///
/// # Safety
/// `image` must be a live image handle, `params` a valid pointer, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn fs_segment(
    image: *const FsImage,
    params: *const FsParams,
    out: *mut *mut FsResult,
) -> FsStatus {
    guard(|| {
        let image = image.as_ref().ok_or_else(|| null("image"))?;
        let params = params.as_ref().ok_or_else(|| null("params"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let outcome = segment_image(&image.image, &params.to_config()).map_err(fail)?;
        *out = Box::into_raw(Box::new(FsResult { outcome }));
        Ok(())
    })
}

/// # Safety
/// `result` must be NULL or a handle from `fs_segment` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn fs_result_free(result: *mut FsResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// # Safety
/// `result` must be a live result handle.
#[no_mangle]
pub unsafe extern "C" fn fs_result_clusters(result: *const FsResult) -> usize {
    result.as_ref().map_or(0, |r| r.outcome.clusters)
}

/// # Safety
/// `result` must be a live result handle.
#[no_mangle]
pub unsafe extern "C" fn fs_result_points(result: *const FsResult) -> usize {
    result.as_ref().map_or(0, |r| r.outcome.labels.len())
}

/// # Safety
/// `result` must be a live result handle.
#[no_mangle]
pub unsafe extern "C" fn fs_result_iterations(result: *const FsResult) -> usize {
    result.as_ref().map_or(0, |r| r.outcome.iterations)
}

/// # Safety
/// `result` must be a live result handle.
#[no_mangle]
pub unsafe extern "C" fn fs_result_converged(result: *const FsResult) -> bool {
    result.as_ref().is_some_and(|r| r.outcome.converged)
}

/// Final objective value, NaN when unavailable.
///
/// # Safety
/// `result` must be a live result handle.
#[no_mangle]
pub unsafe extern "C" fn fs_result_objective(result: *const FsResult) -> f64 {
    result
        .as_ref()
        .and_then(|r| r.outcome.objective)
        .unwrap_or(f64::NAN)
}

/// Copies the per-pixel labels; `len` must equal `fs_result_points`.
///
/// # Safety
/// `result` must be a live result handle and `out` must hold `len` u32 values.
#[no_mangle]
pub unsafe extern "C" fn fs_result_labels(result: *const FsResult, out: *mut u32, len: usize) -> FsStatus {
    guard(|| {
        let result = result.as_ref().ok_or_else(|| null("result"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let labels = &result.outcome.labels;
        if len != labels.len() {
            return Err(fail(Error::DimensionMismatch {
                expected: labels.len(),
                found: len,
            }));
        }
        let dst = std::slice::from_raw_parts_mut(out, len);
        for (d, &l) in dst.iter_mut().zip(labels) {
            *d = l as u32;
        }
        Ok(())
    })
}

/// Copies the `clusters × points` membership matrix, row-major.
///
/// # Safety
/// `result` must be a live result handle and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn fs_result_membership(result: *const FsResult, out: *mut f64, len: usize) -> FsStatus {
    guard(|| {
        let result = result.as_ref().ok_or_else(|| null("result"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let values = result.outcome.membership.as_slice();
        if len != values.len() {
            return Err(fail(Error::DimensionMismatch {
                expected: values.len(),
                found: len,
            }));
        }
        std::slice::from_raw_parts_mut(out, len).copy_from_slice(values);
        Ok(())
    })
}

/// Scores a binary segmentation against a reference; nonzero bytes are object.
///
/// # Safety
/// `seg` and `gt` must each hold `width * height` bytes and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn fs_evaluate(
    seg: *const u8,
    gt: *const u8,
    width: usize,
    height: usize,
    out: *mut FsEvalReport,
) -> FsStatus {
    guard(|| {
        if seg.is_null() || gt.is_null() {
            return Err(null("mask"));
        }
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let len = width.checked_mul(height).ok_or_else(|| fail(Error::InvalidParameters("mask too large".into())))?;
        let mask = |p: *const u8| {
            let bits = std::slice::from_raw_parts(p, len).iter().map(|&b| b != 0).collect();
            BinaryMask::new(width, height, bits)
        };
        let report = evaluate(&mask(seg).map_err(fail)?, &mask(gt).map_err(fail)?).map_err(fail)?;
        *out = FsEvalReport {
            similarity: report.similarity,
            false_positive_ratio: report.false_positive_ratio,
            false_negative_ratio: report.false_negative_ratio,
            tp: report.tp as u64,
            fp: report.fp as u64,
            fn_: report.fn_ as u64,
            tn: report.tn as u64,
        };
        Ok(())
    })
}
