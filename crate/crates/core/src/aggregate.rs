//! Per-segment statistics over valid measurements.

use serde::{Deserialize, Serialize};

use crate::roi::{Orientation, Rect, RoiCandidate};
use crate::sfr::{mtf50, SfrCurve};
use crate::validate::Verdict;

/// Segments need more than this many valid edges for a confident mean.
pub const MIN_VALID_EDGES: usize = 20;

/// Everything recorded about one candidate once it has been measured. The
/// pixel patch is dropped at this point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub frame_id: String,
    pub roi_index: usize,
    pub bbox: Rect,
    pub centroid: (f64, f64),
    pub edge_angle_deg: f64,
    pub contrast: f64,
    pub orientation: Orientation,
    pub segment: Option<usize>,
    pub curve: Option<SfrCurve>,
    pub verdict: Verdict,
}

impl Measurement {
    pub fn new(c: &RoiCandidate, segment: Option<usize>, curve: Option<SfrCurve>, verdict: Verdict) -> Self {
        Measurement {
            frame_id: c.frame_id.clone(),
            roi_index: c.roi_index,
            bbox: c.bbox,
            centroid: c.centroid,
            edge_angle_deg: c.edge_angle_deg,
            contrast: c.contrast,
            orientation: c.orientation,
            segment,
            curve,
            verdict,
        }
    }

    pub fn mtf50(&self) -> Option<f64> {
        self.curve.as_ref().and_then(|c| c.mtf50)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentStats {
    pub segment_index: usize,
    pub orientation: Orientation,
    pub count_valid: usize,
    pub count_invalid: usize,
    /// Valid edges whose curve never fell below 0.5.
    pub count_no_crossing: usize,
    pub frequencies: Vec<f64>,
    pub mean_curve: Option<Vec<f64>>,
    /// Mean of the per-edge MTF50 values.
    pub mean_mtf50: Option<f64>,
    pub mtf50_stddev: Option<f64>,
    /// MTF50 read off the mean curve.
    pub mean_curve_mtf50: Option<f64>,
    pub low_confidence: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SufficiencyWarning {
    pub segment_index: usize,
    pub orientation: Orientation,
    pub count_valid: usize,
    pub message: String,
}

/// Groups measurements by `(segment, orientation)` and reduces each group.
/// One entry is returned for every segment/orientation pair, populated or not,
/// ordered by segment then orientation.
pub fn accumulate(measurements: &[Measurement], n_segments: usize) -> Vec<SegmentStats> {
    let mut sorted: Vec<&Measurement> = measurements.iter().filter(|m| m.curve.is_some()).collect();
    sorted.sort_by(|a, b| (&a.frame_id, a.roi_index).cmp(&(&b.frame_id, b.roi_index)));

    let mut out = Vec::with_capacity(2 * n_segments);
    for segment_index in 0..n_segments {
        for orientation in [Orientation::Horizontal, Orientation::Vertical] {
            let group: Vec<&Measurement> = sorted
                .iter()
                .copied()
                .filter(|m| m.segment == Some(segment_index) && m.orientation == orientation)
                .collect();
            out.push(reduce(segment_index, orientation, &group));
        }
    }
    out
}

fn reduce(segment_index: usize, orientation: Orientation, group: &[&Measurement]) -> SegmentStats {
    let valid: Vec<&SfrCurve> = group
        .iter()
        .filter(|m| m.verdict.is_valid())
        .filter_map(|m| m.curve.as_ref())
        .collect();
    let count_valid = valid.len();
    let count_invalid = group.len() - count_valid;
    let frequencies = valid
        .first()
        .map(|c| c.frequencies.clone())
        .unwrap_or_else(|| crate::sfr::frequency_grid(crate::sfr::GRID_STEP));

    let mean_curve = (count_valid > 0).then(|| {
        let mut acc = vec![0.0; frequencies.len()];
        for c in &valid {
            for (a, v) in acc.iter_mut().zip(&c.values) {
                *a += v;
            }
        }
        let mut mean: Vec<f64> = acc.into_iter().map(|a| a / count_valid as f64).collect();
        mean[0] = 1.0;
        mean
    });
    let mean_curve_mtf50 = mean_curve.as_ref().and_then(|v| {
        mtf50(&SfrCurve {
            frequencies: frequencies.clone(),
            values: v.clone(),
            mtf50: None,
        })
    });

    let crossings: Vec<f64> = valid.iter().filter_map(|c| c.mtf50).collect();
    let count_no_crossing = count_valid - crossings.len();
    let (mean_mtf50, mtf50_stddev) = if crossings.is_empty() || mean_curve_mtf50.is_none() {
        (None, None)
    } else {
        let n = crossings.len() as f64;
        let mean = crossings.iter().sum::<f64>() / n;
        let var = crossings.iter().map(|m| (m - mean) * (m - mean)).sum::<f64>() / n;
        (Some(mean), Some(var.sqrt()))
    };

    SegmentStats {
        segment_index,
        orientation,
        count_valid,
        count_invalid,
        count_no_crossing,
        frequencies,
        mean_curve,
        mean_mtf50,
        mtf50_stddev,
        mean_curve_mtf50,
        low_confidence: count_valid <= MIN_VALID_EDGES,
    }
}

/// Warns when a group has too few valid edges for a reliable mean.
pub fn sufficiency_check(stats: &SegmentStats) -> Option<SufficiencyWarning> {
    (stats.count_valid <= MIN_VALID_EDGES).then(|| SufficiencyWarning {
        segment_index: stats.segment_index,
        orientation: stats.orientation,
        count_valid: stats.count_valid,
        message: format!(
            "segment {} ({}): only {} valid edges (more than {} needed); statistics are low-confidence",
            stats.segment_index, stats.orientation, stats.count_valid, MIN_VALID_EDGES
        ),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::validate::{classify, Reason, Thresholds};

    pub(crate) fn measurement(frame: &str, idx: usize, seg: usize, curve: SfrCurve) -> Measurement {
        let verdict = classify(&curve, &Thresholds::default());
        Measurement {
            frame_id: frame.into(),
            roi_index: idx,
            bbox: Rect { x: 0, y: 0, w: 20, h: 64 },
            centroid: (10.0, 32.0),
            edge_angle_deg: 95.0,
            contrast: 0.5,
            orientation: Orientation::Horizontal,
            segment: Some(seg),
            curve: Some(curve),
            verdict,
        }
    }

    fn linear(m50: f64) -> SfrCurve {
        // crosses 0.5 at m50
        SfrCurve::from_fn(|f| (1.0 - 0.5 * f / m50).max(0.0))
    }

    #[test]
    fn singleton_mean_equals_edge() {
        let c = linear(0.3);
        let stats = accumulate(&[measurement("a", 0, 1, c.clone())], 3);
        assert_eq!(stats.len(), 6);
        let s = stats.iter().find(|s| s.segment_index == 1 && s.orientation == Orientation::Horizontal).unwrap();
        assert_eq!(s.count_valid, 1);
        assert_eq!(s.mean_curve.as_ref().unwrap(), &c.values);
        assert!((s.mean_mtf50.unwrap() - c.mtf50.unwrap()).abs() < 1e-12);
        assert_eq!(s.mtf50_stddev, Some(0.0));
    }

    #[test]
    fn mean_of_two() {
        let ms = [measurement("a", 0, 0, linear(0.2)), measurement("b", 0, 0, linear(0.4))];
        let s = &accumulate(&ms, 3)[0];
        assert!((s.mean_mtf50.unwrap() - 0.3).abs() < 1e-9);
        assert_eq!(s.mean_curve.as_ref().unwrap()[0], 1.0);
    }

    #[test]
    fn invalid_and_failed_are_counted_separately() {
        let mut bad = measurement("a", 1, 0, SfrCurve::from_fn(|f| if f < 0.2 { 1.0 + 3.0 * f } else { 0.1 }));
        assert_eq!(bad.verdict.reason, Reason::Overshoot);
        let mut failed = measurement("a", 2, 0, linear(0.3));
        failed.curve = None;
        failed.verdict = Verdict::failed(Reason::EdgeIncoherent);
        bad.orientation = Orientation::Horizontal;
        let s = &accumulate(&[measurement("a", 0, 0, linear(0.3)), bad, failed], 3)[0];
        assert_eq!((s.count_valid, s.count_invalid), (1, 1));
    }

    #[test]
    fn non_crossing_edges_are_excluded_from_mean() {
        let flat = SfrCurve::from_fn(|f| 1.0 - 0.3 * f);
        let s = &accumulate(&[measurement("a", 0, 0, linear(0.25)), measurement("a", 1, 0, flat)], 3)[0];
        assert_eq!(s.count_valid, 2);
        assert_eq!(s.count_no_crossing, 1);
        assert!((s.mean_mtf50.unwrap() - 0.25).abs() < 1e-9);
    }

    #[test]
    fn sufficiency_boundary() {
        let mk = |n: usize| {
            let ms: Vec<_> = (0..n).map(|i| measurement("f", i, 0, linear(0.3))).collect();
            accumulate(&ms, 3)[0].clone()
        };
        assert!(sufficiency_check(&mk(21)).is_none());
        let w = sufficiency_check(&mk(20)).unwrap();
        assert_eq!(w.count_valid, 20);
        let empty = mk(0);
        assert!(sufficiency_check(&empty).is_some());
        assert!(empty.mean_mtf50.is_none() && empty.mean_curve.is_none());
    }
}
