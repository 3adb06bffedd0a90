//! C interface to the nssfr toolkit.
//!
//! Every function returns an [`NssfrStatus`]; on failure a description of the
//! error is available from [`nssfr_last_error`] on the same thread. Objects
//! are opaque and owned by the caller once created, who releases them with
//! the matching `_free` function. An analyzer is immutable after creation and
//! may be shared between threads.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use nssfr::aggregate::{accumulate, Measurement};
use nssfr::ingest::Frame;
use nssfr::mask::RegionMask;
use nssfr::roi::{NsSfrParams, Orientation, Patch};
use nssfr::sfr::{measure_patch, GRID_STEP, MAX_FREQUENCY};
use nssfr::validate::{classify, Reason, Thresholds};
use nssfr::{analyze_frame, Error, Geometry};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NssfrStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidMask = 3,
    Dimensions = 4,
    MeasurementFailed = 5,
    OutOfRange = 6,
    BufferTooSmall = 7,
    Internal = 99,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NssfrOrientation {
    Horizontal = 0,
    Vertical = 1,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NssfrReason {
    None = 0,
    Overshoot = 1,
    NoiseFloor = 2,
    EdgeIncoherent = 3,
    PhaseCoverage = 4,
}

/// Detection, triage and segmentation settings.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NssfrParams {
    pub contrast_min: f64,
    pub contrast_max: f64,
    pub st: f64,
    pub esfw: u32,
    pub angle_exclusion_deg: f64,
    pub edge_fit_order: u32,
    pub overshoot_limit: f64,
    pub noise_min_limit: f64,
    pub segments: u32,
    /// Exclusion margin in pixels; negative selects `2 * esfw`.
    pub margin: i32,
}

/// One measured candidate. Coordinates are in frame pixels.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NssfrMeasurement {
    pub roi_index: u32,
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
    pub centroid_x: f64,
    pub centroid_y: f64,
    pub edge_angle_deg: f64,
    pub contrast: f64,
    pub orientation: NssfrOrientation,
    /// Radial segment, or -1 when the centroid lies beyond the outer radius.
    pub segment: i32,
    pub valid: bool,
    pub reason: NssfrReason,
    /// NaN when no curve could be computed.
    pub peak_value: f64,
    /// NaN when absent.
    pub mtf50: f64,
}

pub struct NssfrAnalyzer {
    geometry: Geometry,
    params: NsSfrParams,
    thresholds: Thresholds,
}

pub struct NssfrResult {
    measurements: Vec<Measurement>,
    n_segments: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

struct Failure(NssfrStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::InvalidMask(_) | Error::MaskTooSmall { .. } | Error::MaskSizeMismatch { .. } | Error::EmptyValidity => {
                NssfrStatus::InvalidMask
            }
            Error::FrameTooSmall { .. } | Error::BufferSize { .. } | Error::Dimensions(_) => NssfrStatus::Dimensions,
            Error::EdgeIncoherent { .. }
            | Error::PhaseCoverage { .. }
            | Error::EsfTooShort { .. }
            | Error::NoEdgeEnergy => NssfrStatus::MeasurementFailed,
            Error::InvalidParams(_) | Error::Config(_) | Error::Json(_) => NssfrStatus::InvalidArgument,
            _ => NssfrStatus::Internal,
        };
        Failure(status, e.to_string())
    }
}

fn fail(status: NssfrStatus, msg: impl Into<String>) -> Failure {
    Failure(status, msg.into())
}

/// Runs `f`, recording any error or panic for [`nssfr_last_error`].
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> NssfrStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => NssfrStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal error (panic)");
            NssfrStatus::Internal
        }
    }
}

fn non_null<T>(p: *const T, name: &str) -> Result<(), Failure> {
    if p.is_null() {
        Err(fail(NssfrStatus::NullPointer, format!("{name} is null")))
    } else {
        Ok(())
    }
}

unsafe fn c_str<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    non_null(p, name)?;
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(NssfrStatus::InvalidArgument, format!("{name} is not valid UTF-8")))
}

fn core_params(p: &NssfrParams) -> (NsSfrParams, Thresholds) {
    let params = NsSfrParams {
        contrast_min: p.contrast_min,
        contrast_max: p.contrast_max,
        st: p.st,
        esfw: p.esfw as usize,
        angle_exclusion_deg: p.angle_exclusion_deg,
        edge_fit_order: p.edge_fit_order as usize,
    };
    let thresholds = Thresholds {
        overshoot_limit: p.overshoot_limit,
        noise_min_limit: p.noise_min_limit,
    };
    (params, thresholds)
}

fn check_thresholds(t: &Thresholds) -> Result<(), Failure> {
    let cfg = nssfr::AnalyzeConfig {
        thresholds: *t,
        ..Default::default()
    };
    cfg.validate().map_err(Failure::from)
}

fn reason(r: Reason) -> NssfrReason {
    match r {
        Reason::None => NssfrReason::None,
        Reason::Overshoot => NssfrReason::Overshoot,
        Reason::NoiseFloor => NssfrReason::NoiseFloor,
        Reason::EdgeIncoherent => NssfrReason::EdgeIncoherent,
        Reason::PhaseCoverage => NssfrReason::PhaseCoverage,
    }
}

fn orientation(o: Orientation) -> NssfrOrientation {
    match o {
        Orientation::Horizontal => NssfrOrientation::Horizontal,
        Orientation::Vertical => NssfrOrientation::Vertical,
    }
}

/// Copies `values` into a caller buffer of `capacity` doubles. `len` always
/// receives the number of values, so a null buffer can be used to query it.
unsafe fn copy_out(values: &[f64], out: *mut f64, capacity: usize, len: *mut usize) -> Result<(), Failure> {
    if !len.is_null() {
        *len = values.len();
    }
    if out.is_null() {
        return Ok(());
    }
    if capacity < values.len() {
        return Err(fail(
            NssfrStatus::BufferTooSmall,
            format!("buffer holds {capacity} values, need {}", values.len()),
        ));
    }
    ptr::copy_nonoverlapping(values.as_ptr(), out, values.len());
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn nssfr_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the most recent failure on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn nssfr_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

#[no_mangle]
pub extern "C" fn nssfr_params_default() -> NssfrParams {
    let p = NsSfrParams::default();
    let t = Thresholds::default();
    NssfrParams {
        contrast_min: p.contrast_min,
        contrast_max: p.contrast_max,
        st: p.st,
        esfw: p.esfw as u32,
        angle_exclusion_deg: p.angle_exclusion_deg,
        edge_fit_order: p.edge_fit_order as u32,
        overshoot_limit: t.overshoot_limit,
        noise_min_limit: t.noise_min_limit,
        segments: nssfr::radial::DEFAULT_SEGMENTS as u32,
        margin: -1,
    }
}

/// Prepares an analyzer for frames of `width` x `height`. `mask_json` may be
/// null for a full-frame analysis.
///
/// # Safety
/// `params` must point to a valid `NssfrParams`, `mask_json` must be null or
/// a NUL-terminated string, and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nssfr_analyzer_new(
    params: *const NssfrParams,
    mask_json: *const c_char,
    width: u32,
    height: u32,
    out: *mut *mut NssfrAnalyzer,
) -> NssfrStatus {
    guard(|| {
        non_null(params, "params")?;
        non_null(out, "out")?;
        *out = ptr::null_mut();
        let p = &*params;
        let (core, thresholds) = core_params(p);
        core.validate()?;
        check_thresholds(&thresholds)?;
        if p.segments < 2 {
            return Err(fail(NssfrStatus::InvalidArgument, "need at least 2 segments"));
        }
        let mask = if mask_json.is_null() {
            None
        } else {
            Some(RegionMask::from_json(c_str(mask_json, "mask_json")?).map_err(|e| match e {
                Error::Json(j) => fail(NssfrStatus::InvalidMask, format!("invalid mask: {j}")),
                e => e.into(),
            })?)
        };
        let side = nssfr::ingest::MIN_FRAME_SIDE as u32;
        if width < side || height < side {
            return Err(fail(
                NssfrStatus::Dimensions,
                format!("frame {width}x{height} is below the {side}x{side} minimum"),
            ));
        }
        let margin = usize::try_from(p.margin).unwrap_or_else(|_| core.default_margin());
        let geometry = Geometry::new(width as usize, height as usize, mask.as_ref(), margin, p.segments as usize, None)?;
        *out = Box::into_raw(Box::new(NssfrAnalyzer {
            geometry,
            params: core,
            thresholds,
        }));
        Ok(())
    })
}

/// # Safety
/// `analyzer` must be null or come from [`nssfr_analyzer_new`], and must not
/// be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn nssfr_analyzer_free(analyzer: *mut NssfrAnalyzer) {
    if !analyzer.is_null() {
        drop(Box::from_raw(analyzer));
    }
}

/// Outer radius of each radial segment, in pixels.
///
/// # Safety
/// `analyzer` must be valid; `out` must be null or hold `capacity` doubles;
/// `len` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn nssfr_analyzer_boundaries(
    analyzer: *const NssfrAnalyzer,
    out: *mut f64,
    capacity: usize,
    len: *mut usize,
) -> NssfrStatus {
    guard(|| {
        non_null(analyzer, "analyzer")?;
        copy_out(&(*analyzer).geometry.segmentation.boundaries, out, capacity, len)
    })
}

/// Finds and measures every slanted edge in one frame. `luminance` holds
/// `width * height` row-major samples normalized to [0, 1].
///
/// # Safety
/// `analyzer` must be valid, `luminance` must hold `len` doubles, `frame_id`
/// must be null or NUL-terminated, and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn nssfr_analyzer_measure(
    analyzer: *const NssfrAnalyzer,
    luminance: *const f64,
    len: usize,
    frame_id: *const c_char,
    out: *mut *mut NssfrResult,
) -> NssfrStatus {
    guard(|| {
        non_null(analyzer, "analyzer")?;
        non_null(luminance, "luminance")?;
        non_null(out, "out")?;
        *out = ptr::null_mut();
        let a = &*analyzer;
        let id = if frame_id.is_null() { "frame" } else { c_str(frame_id, "frame_id")? };
        let (w, h) = (a.geometry.width, a.geometry.height);
        if len != w * h {
            return Err(fail(
                NssfrStatus::Dimensions,
                format!("buffer holds {len} samples, expected {w}x{h}"),
            ));
        }
        let data = std::slice::from_raw_parts(luminance, len).to_vec();
        let frame = Frame::new(id, w, h, data, 16)?;
        let r = analyze_frame(&frame, &a.geometry, &a.params, &a.thresholds)?;
        *out = Box::into_raw(Box::new(NssfrResult {
            measurements: r.measurements,
            n_segments: a.geometry.segmentation.n_segments(),
        }));
        Ok(())
    })
}

/// # Safety
/// `result` must be null or come from [`nssfr_analyzer_measure`], and must not
/// be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn nssfr_result_free(result: *mut NssfrResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// Number of candidates in a result; 0 for a null result.
///
/// # Safety
/// `result` must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn nssfr_result_count(result: *const NssfrResult) -> usize {
    result.as_ref().map_or(0, |r| r.measurements.len())
}

/// # Safety
/// `result` must be valid and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nssfr_result_get(
    result: *const NssfrResult,
    index: usize,
    out: *mut NssfrMeasurement,
) -> NssfrStatus {
    guard(|| {
        non_null(result, "result")?;
        non_null(out, "out")?;
        let ms = &(*result).measurements;
        let m = ms
            .get(index)
            .ok_or_else(|| fail(NssfrStatus::OutOfRange, format!("index {index} of {}", ms.len())))?;
        *out = NssfrMeasurement {
            roi_index: m.roi_index as u32,
            x: m.bbox.x as u32,
            y: m.bbox.y as u32,
            w: m.bbox.w as u32,
            h: m.bbox.h as u32,
            centroid_x: m.centroid.0,
            centroid_y: m.centroid.1,
            edge_angle_deg: m.edge_angle_deg,
            contrast: m.contrast,
            orientation: orientation(m.orientation),
            segment: m.segment.map_or(-1, |s| s as i32),
            valid: m.verdict.is_valid(),
            reason: reason(m.verdict.reason),
            peak_value: m.verdict.peak_value,
            mtf50: m.mtf50().unwrap_or(f64::NAN),
        };
        Ok(())
    })
}

/// SFR values of one candidate on the uniform grid from 0 to 1 cy/px in
/// steps of [`nssfr_grid_step`]. Candidates without a curve give 0 values.
///
/// # Safety
/// `result` must be valid; `out` must be null or hold `capacity` doubles;
/// `len` must be null or writable.
#[no_mangle]
pub unsafe extern "C" fn nssfr_result_curve(
    result: *const NssfrResult,
    index: usize,
    out: *mut f64,
    capacity: usize,
    len: *mut usize,
) -> NssfrStatus {
    guard(|| {
        non_null(result, "result")?;
        let ms = &(*result).measurements;
        let m = ms
            .get(index)
            .ok_or_else(|| fail(NssfrStatus::OutOfRange, format!("index {index} of {}", ms.len())))?;
        copy_out(m.curve.as_ref().map_or(&[][..], |c| &c.values), out, capacity, len)
    })
}

#[no_mangle]
pub extern "C" fn nssfr_grid_step() -> f64 {
    GRID_STEP
}

#[no_mangle]
pub extern "C" fn nssfr_max_frequency() -> f64 {
    MAX_FREQUENCY
}

/// Per-segment statistics of a result as a JSON array. The string is owned by
/// the caller and released with [`nssfr_string_free`].
///
/// # Safety
/// `result` must be valid and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nssfr_result_summary_json(result: *const NssfrResult, out: *mut *mut c_char) -> NssfrStatus {
    guard(|| {
        non_null(result, "result")?;
        non_null(out, "out")?;
        *out = ptr::null_mut();
        let r = &*result;
        let stats = accumulate(&r.measurements, r.n_segments);
        let json = serde_json::to_string(&stats).map_err(|e| fail(NssfrStatus::Internal, e.to_string()))?;
        *out = CString::new(json)
            .map_err(|e| fail(NssfrStatus::Internal, e.to_string()))?
            .into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must be null or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn nssfr_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Measures a single pre-cut edge patch. `mtf50` receives NaN when the curve
/// never drops to 0.5; `valid` and `reason` receive the triage verdict; the
/// curve is copied like [`nssfr_result_curve`]. Any output pointer may be null.
///
/// # Safety
/// `data` must hold `width * height` doubles, `params` must be valid, and
/// every non-null output pointer must be writable (`curve` for `capacity`
/// doubles).
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn nssfr_measure_patch(
    data: *const f64,
    width: u32,
    height: u32,
    orientation: NssfrOrientation,
    params: *const NssfrParams,
    mtf50: *mut f64,
    valid: *mut bool,
    reason_out: *mut NssfrReason,
    curve: *mut f64,
    capacity: usize,
    len: *mut usize,
) -> NssfrStatus {
    guard(|| {
        non_null(data, "data")?;
        non_null(params, "params")?;
        let (core, thresholds) = core_params(&*params);
        core.validate()?;
        check_thresholds(&thresholds)?;
        let (w, h) = (width as usize, height as usize);
        let patch = Patch::new(w, h, std::slice::from_raw_parts(data, w * h).to_vec())?;
        let o = match orientation {
            NssfrOrientation::Horizontal => Orientation::Horizontal,
            NssfrOrientation::Vertical => Orientation::Vertical,
        };
        let c = measure_patch(&patch, o, &core)?;
        let verdict = classify(&c, &thresholds);
        if !mtf50.is_null() {
            *mtf50 = c.mtf50.unwrap_or(f64::NAN);
        }
        if !valid.is_null() {
            *valid = verdict.is_valid();
        }
        if !reason_out.is_null() {
            *reason_out = reason(verdict.reason);
        }
        copy_out(&c.values, curve, capacity, len)
    })
}
