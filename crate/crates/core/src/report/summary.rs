use serde::Serialize;

use crate::pipeline::Analysis;
use crate::roi::{NsSfrParams, Orientation};
use crate::validate::{Status, Thresholds};

#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub tool: &'static str,
    pub version: &'static str,
    pub input: InputSummary,
    pub mask: Option<String>,
    pub params: NsSfrParams,
    pub thresholds: Thresholds,
    pub margin: usize,
    pub orientation: &'static str,
    pub geometry: GeometrySummary,
    pub counts: Counts,
    pub segments: Vec<SegmentSummary>,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct InputSummary {
    pub glob: String,
    pub limit: Option<usize>,
    pub frames_processed: usize,
    pub frames_skipped: Vec<SkippedFrame>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SkippedFrame {
    pub id: String,
    pub reason: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct GeometrySummary {
    pub width: usize,
    pub height: usize,
    pub center: [f64; 2],
    pub r_e: f64,
    pub boundaries: Vec<f64>,
    pub segment_names: Vec<String>,
    pub valid_fraction: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Counts {
    pub candidates: usize,
    pub valid: usize,
    pub invalid: usize,
    /// Candidates whose SFR could not be computed.
    pub unmeasured: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct SegmentSummary {
    pub segment_index: usize,
    pub name: String,
    pub orientation: Orientation,
    pub inner_radius: f64,
    pub outer_radius: f64,
    pub count_valid: usize,
    pub count_invalid: usize,
    pub count_no_crossing: usize,
    pub mean_mtf50: Option<f64>,
    pub mtf50_stddev: Option<f64>,
    pub mean_curve_mtf50: Option<f64>,
    pub low_confidence: bool,
    pub frequencies: Vec<f64>,
    pub mean_curve: Option<Vec<f64>>,
}

pub fn build_summary(a: &Analysis) -> Summary {
    let seg = &a.geometry.segmentation;
    let cfg = &a.config;
    let valid = a.count_valid();
    let unmeasured = a.measurements.iter().filter(|m| m.curve.is_none()).count();
    let segments = a
        .stats
        .iter()
        .map(|s| SegmentSummary {
            segment_index: s.segment_index,
            name: seg.segment_name(s.segment_index),
            orientation: s.orientation,
            inner_radius: if s.segment_index == 0 { 0.0 } else { seg.boundaries[s.segment_index - 1] },
            outer_radius: seg.boundaries[s.segment_index],
            count_valid: s.count_valid,
            count_invalid: s.count_invalid,
            count_no_crossing: s.count_no_crossing,
            mean_mtf50: s.mean_mtf50,
            mtf50_stddev: s.mtf50_stddev,
            mean_curve_mtf50: s.mean_curve_mtf50,
            low_confidence: s.low_confidence,
            frequencies: s.frequencies.clone(),
            mean_curve: s.mean_curve.clone(),
        })
        .collect();
    Summary {
        tool: "nssfr",
        version: env!("CARGO_PKG_VERSION"),
        input: InputSummary {
            glob: cfg.glob.clone(),
            limit: cfg.limit,
            frames_processed: a.frames_processed(),
            frames_skipped: a
                .skipped
                .iter()
                .map(|s| SkippedFrame {
                    id: s.id.clone(),
                    reason: s.reason.clone(),
                })
                .collect(),
        },
        mask: cfg.mask.as_ref().map(|p| p.display().to_string()),
        params: cfg.params.clone(),
        thresholds: cfg.thresholds,
        margin: cfg.margin(),
        orientation: cfg.orientation.as_str(),
        geometry: GeometrySummary {
            width: a.geometry.width,
            height: a.geometry.height,
            center: [seg.center.0, seg.center.1],
            r_e: seg.r_e,
            boundaries: seg.boundaries.clone(),
            segment_names: (0..seg.n_segments()).map(|k| seg.segment_name(k)).collect(),
            valid_fraction: a.geometry.region.valid_fraction(),
        },
        counts: Counts {
            candidates: a.measurements.len(),
            valid,
            invalid: a.measurements.iter().filter(|m| m.verdict.status == Status::Invalid).count() - unmeasured,
            unmeasured,
        },
        segments,
        warnings: a.warnings.clone(),
    }
}
