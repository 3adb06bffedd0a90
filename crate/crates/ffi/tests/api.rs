use std::ffi::{CStr, CString};
use std::ptr;

use nssfr::synth::{make_slanted_edge, SynthEdgeSpec};
use nssfr_ffi::*;

fn edge(spec: &SynthEdgeSpec) -> Vec<f64> {
    make_slanted_edge(spec).luminance().to_vec()
}

fn last_error() -> String {
    let p = nssfr_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn analyzer(mask: Option<&str>, w: u32, h: u32) -> Result<*mut NssfrAnalyzer, NssfrStatus> {
    let params = nssfr_params_default();
    let mask = mask.map(|m| CString::new(m).unwrap());
    let mut a = ptr::null_mut();
    let s = unsafe { nssfr_analyzer_new(&params, mask.as_ref().map_or(ptr::null(), |m| m.as_ptr()), w, h, &mut a) };
    if s == NssfrStatus::Ok {
        Ok(a)
    } else {
        assert!(a.is_null());
        Err(s)
    }
}

fn measure(a: *const NssfrAnalyzer, lum: &[f64]) -> *mut NssfrResult {
    let mut r = ptr::null_mut();
    let s = unsafe { nssfr_analyzer_measure(a, lum.as_ptr(), lum.len(), ptr::null(), &mut r) };
    assert_eq!(s, NssfrStatus::Ok, "{}", last_error());
    r
}

#[test]
fn defaults_match_the_library() {
    let p = nssfr_params_default();
    let core = nssfr::roi::NsSfrParams::default();
    assert_eq!(p.esfw as usize, core.esfw);
    assert_eq!(p.st, core.st);
    assert_eq!(p.margin, -1);
    let v = unsafe { CStr::from_ptr(nssfr_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn measures_a_synthetic_edge_like_the_library() {
    let spec = SynthEdgeSpec::default();
    let lum = edge(&spec);
    let a = analyzer(None, 128, 128).unwrap();
    let r = measure(a, &lum);
    assert_eq!(unsafe { nssfr_result_count(r) }, 1);
    let mut m = std::mem::MaybeUninit::<NssfrMeasurement>::uninit();
    assert_eq!(unsafe { nssfr_result_get(r, 0, m.as_mut_ptr()) }, NssfrStatus::Ok);
    let m = unsafe { m.assume_init() };

    let g = nssfr::Geometry::new(128, 128, None, 10, 3, None).unwrap();
    let expect = nssfr::analyze_frame(
        &make_slanted_edge(&spec),
        &g,
        &nssfr::roi::NsSfrParams::default(),
        &nssfr::validate::Thresholds::default(),
    )
    .unwrap();
    let e = &expect.measurements[0];
    assert_eq!(m.mtf50, e.mtf50().unwrap());
    assert_eq!((m.x as usize, m.y as usize, m.w as usize, m.h as usize), (e.bbox.x, e.bbox.y, e.bbox.w, e.bbox.h));
    assert!(m.valid);
    assert_eq!(m.reason, NssfrReason::None);
    assert_eq!(m.segment, 0);
    assert_eq!(m.orientation, NssfrOrientation::Vertical);

    let mut n = 0usize;
    assert_eq!(unsafe { nssfr_result_curve(r, 0, ptr::null_mut(), 0, &mut n) }, NssfrStatus::Ok);
    assert_eq!(n, (nssfr_max_frequency() / nssfr_grid_step()).round() as usize + 1);
    let mut small = vec![0.0; n - 1];
    assert_eq!(
        unsafe { nssfr_result_curve(r, 0, small.as_mut_ptr(), small.len(), &mut n) },
        NssfrStatus::BufferTooSmall
    );
    let mut values = vec![0.0; n];
    assert_eq!(unsafe { nssfr_result_curve(r, 0, values.as_mut_ptr(), n, &mut n) }, NssfrStatus::Ok);
    assert_eq!(values, e.curve.as_ref().unwrap().values);
    assert_eq!(unsafe { nssfr_result_get(r, 1, ptr::null_mut()) }, NssfrStatus::NullPointer);
    let mut m2 = std::mem::MaybeUninit::<NssfrMeasurement>::uninit();
    assert_eq!(unsafe { nssfr_result_get(r, 1, m2.as_mut_ptr()) }, NssfrStatus::OutOfRange);

    unsafe {
        nssfr_result_free(r);
        nssfr_analyzer_free(a);
    }
}

#[test]
fn summary_json_lists_every_segment() {
    let lum = edge(&SynthEdgeSpec::default());
    let a = analyzer(None, 128, 128).unwrap();
    let r = measure(a, &lum);
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { nssfr_result_summary_json(r, &mut s) }, NssfrStatus::Ok);
    let text = unsafe { CStr::from_ptr(s) }.to_str().unwrap().to_owned();
    unsafe { nssfr_string_free(s) };
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let groups = v.as_array().unwrap();
    assert_eq!(groups.len(), 6);
    let valid: u64 = groups.iter().map(|g| g["count_valid"].as_u64().unwrap()).sum();
    assert_eq!(valid, 1);
    unsafe {
        nssfr_result_free(r);
        nssfr_analyzer_free(a);
    }
}

#[test]
fn errors_are_reported_with_messages() {
    assert_eq!(analyzer(Some("{\"polygons\": 3}"), 128, 128).unwrap_err(), NssfrStatus::InvalidMask);
    assert!(last_error().contains("mask"));

    let mut p = nssfr_params_default();
    p.edge_fit_order = 2;
    let mut a = ptr::null_mut();
    assert_eq!(
        unsafe { nssfr_analyzer_new(&p, ptr::null(), 128, 128, &mut a) },
        NssfrStatus::InvalidArgument
    );
    assert_eq!(
        unsafe { nssfr_analyzer_new(ptr::null(), ptr::null(), 128, 128, &mut a) },
        NssfrStatus::NullPointer
    );

    let a = analyzer(None, 128, 128).unwrap();
    let short = vec![0.5; 100];
    let mut r = ptr::null_mut();
    assert_eq!(
        unsafe { nssfr_analyzer_measure(a, short.as_ptr(), short.len(), ptr::null(), &mut r) },
        NssfrStatus::Dimensions
    );
    assert!(r.is_null());
    assert!(last_error().contains("100"));
    unsafe { nssfr_analyzer_free(a) };

    assert_eq!(analyzer(None, 32, 32).unwrap_err(), NssfrStatus::Dimensions);
}

#[test]
fn masked_analyzer_exposes_segments() {
    let mask = nssfr::mask::RegionMask::circle(256, 256, (128.0, 128.0), 100.0, 256).to_json();
    let a = analyzer(Some(&mask), 256, 256).unwrap();
    let mut n = 0;
    let mut b = [0.0; 3];
    assert_eq!(unsafe { nssfr_analyzer_boundaries(a, b.as_mut_ptr(), 3, &mut n) }, NssfrStatus::Ok);
    assert_eq!(n, 3);
    assert!((b[2] - 100.0).abs() <= 1.0, "{b:?}");
    unsafe { nssfr_analyzer_free(a) };
}

#[test]
fn analyzer_can_be_shared_between_threads() {
    struct Shared(*mut NssfrAnalyzer);
    unsafe impl Sync for Shared {}
    let a = Shared(analyzer(None, 128, 128).unwrap());
    let results: Vec<f64> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..4)
            .map(|k| {
                let a = &a;
                s.spawn(move || {
                    let lum = edge(&SynthEdgeSpec {
                        angle_deg: 4.0 + k as f64,
                        ..SynthEdgeSpec::default()
                    });
                    let r = measure(a.0, &lum);
                    let mut m = std::mem::MaybeUninit::<NssfrMeasurement>::uninit();
                    assert_eq!(unsafe { nssfr_result_get(r, 0, m.as_mut_ptr()) }, NssfrStatus::Ok);
                    unsafe { nssfr_result_free(r) };
                    unsafe { m.assume_init() }.mtf50
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });
    assert!(results.iter().all(|m| (m - 0.18).abs() < 0.01), "{results:?}");
    unsafe { nssfr_analyzer_free(a.0) };
}

#[test]
fn measures_a_patch_directly() {
    let spec = SynthEdgeSpec {
        width: 40,
        height: 96,
        angle_deg: 6.0,
        ..SynthEdgeSpec::default()
    };
    let f = make_slanted_edge(&SynthEdgeSpec { width: 64, height: 96, ..spec.clone() });
    let patch: Vec<f64> = (0..96).flat_map(|y| (12..52).map(move |x| (x, y))).map(|(x, y)| f.get(x, y)).collect();
    let p = nssfr_params_default();
    let (mut mtf50, mut valid, mut reason, mut len) = (0.0, false, NssfrReason::Overshoot, 0usize);
    let s = unsafe {
        nssfr_measure_patch(
            patch.as_ptr(),
            40,
            96,
            NssfrOrientation::Vertical,
            &p,
            &mut mtf50,
            &mut valid,
            &mut reason,
            ptr::null_mut(),
            0,
            &mut len,
        )
    };
    assert_eq!(s, NssfrStatus::Ok, "{}", last_error());
    assert!(valid);
    assert_eq!(reason, NssfrReason::None);
    assert!((mtf50 - 0.18).abs() < 0.01, "{mtf50}");
    assert_eq!(len, 101);

    let flat = vec![0.5; 40 * 96];
    let s = unsafe {
        nssfr_measure_patch(flat.as_ptr(), 40, 96, NssfrOrientation::Vertical, &p, &mut mtf50, ptr::null_mut(), ptr::null_mut(), ptr::null_mut(), 0, ptr::null_mut())
    };
    assert_eq!(s, NssfrStatus::MeasurementFailed);
}
