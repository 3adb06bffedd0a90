//! Adaptive radial segmentation derived from the regional mask.
//!
//! The outer radius `r_e` is the largest distance from the reference center
//! to the periphery of the natural-scene region (the image corners when there
//! is no mask). It is split into `N` proportional annuli: center, middle and
//! edge for the default `N = 3`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mask::{RegionMask, ValidityMap};

pub const DEFAULT_SEGMENTS: usize = 3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialSegmentation {
    pub center: (f64, f64),
    pub r_e: f64,
    /// Outer radius of each annulus; strictly increasing, last equals `r_e`.
    pub boundaries: Vec<f64>,
}

impl RadialSegmentation {
    pub fn n_segments(&self) -> usize {
        self.boundaries.len()
    }

    /// Builds the segmentation for a frame: center, `r_e`, and either equal
    /// parts (`ratios = None`) or explicit cumulative ratios.
    pub fn build(
        vmap: &ValidityMap,
        mask: Option<&RegionMask>,
        segments: usize,
        ratios: Option<&[f64]>,
    ) -> Result<Self> {
        let center = reference_center(vmap, mask)?;
        let r_e = max_radius(center, vmap, mask);
        let boundaries = match ratios {
            Some(r) => segment_radii_with_ratios(r_e, r)?,
            None => segment_radii(r_e, segments)?,
        };
        Ok(RadialSegmentation {
            center,
            r_e,
            boundaries,
        })
    }

    pub fn distance(&self, point: (f64, f64)) -> f64 {
        (point.0 - self.center.0).hypot(point.1 - self.center.1)
    }

    pub fn segment_name(&self, index: usize) -> String {
        match (self.n_segments(), index) {
            (3, 0) => "center".into(),
            (3, 1) => "middle".into(),
            (3, 2) => "edge".into(),
            (_, k) => format!("segment {k}"),
        }
    }
}

/// Image center without a mask; area centroid of the valid region with one.
/// Pixel `(i, j)` contributes its center `(i + 0.5, j + 0.5)`.
pub fn reference_center(vmap: &ValidityMap, mask: Option<&RegionMask>) -> Result<(f64, f64)> {
    if mask.is_none() {
        return Ok((vmap.width() as f64 / 2.0, vmap.height() as f64 / 2.0));
    }
    let (mut sx, mut sy, mut n) = (0.0, 0.0, 0usize);
    for y in 0..vmap.height() {
        let mut row_sum = 0.0;
        let mut row_n = 0usize;
        for x in 0..vmap.width() {
            if vmap.is_valid(x, y) {
                row_sum += x as f64 + 0.5;
                row_n += 1;
            }
        }
        sx += row_sum;
        sy += row_n as f64 * (y as f64 + 0.5);
        n += row_n;
    }
    if n == 0 {
        return Err(Error::EmptyValidity);
    }
    Ok((sx / n as f64, sy / n as f64))
}

/// Distance from `center` to the farthest corner of pixel `(x, y)`.
#[inline]
pub fn far_corner_distance(center: (f64, f64), x: usize, y: usize) -> f64 {
    let dx = (x as f64 - center.0).abs().max((x as f64 + 1.0 - center.0).abs());
    let dy = (y as f64 - center.1).abs().max((y as f64 + 1.0 - center.1).abs());
    (dx * dx + dy * dy).sqrt()
}

/// Largest distance from `center` to the periphery of the valid region.
///
/// Without a mask this is the farthest image corner. With a mask it is the
/// farthest outer corner of any valid pixel; the maximum is always attained on
/// the region boundary, and within a row it is attained at the first or last
/// valid pixel, so only those are visited.
pub fn max_radius(center: (f64, f64), vmap: &ValidityMap, mask: Option<&RegionMask>) -> f64 {
    let (w, h) = (vmap.width() as f64, vmap.height() as f64);
    if mask.is_none() {
        return [(0.0, 0.0), (w, 0.0), (0.0, h), (w, h)]
            .iter()
            .map(|&(x, y)| (x - center.0).hypot(y - center.1))
            .fold(0.0, f64::max);
    }
    let mut best: f64 = 0.0;
    for y in 0..vmap.height() {
        let row = &vmap.as_slice()[y * vmap.width()..(y + 1) * vmap.width()];
        if let Some(first) = row.iter().position(|&v| v) {
            let last = row.iter().rposition(|&v| v).unwrap();
            best = best
                .max(far_corner_distance(center, first, y))
                .max(far_corner_distance(center, last, y));
        }
    }
    best
}

/// Equal proportional annuli: `boundaries[k] = r_e (k + 1) / n`.
pub fn segment_radii(r_e: f64, n: usize) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::InvalidParams(format!("need at least 2 segments (got {n})")));
    }
    if !(r_e > 0.0) {
        return Err(Error::InvalidParams(format!("r_e must be positive (got {r_e})")));
    }
    let mut b: Vec<f64> = (1..=n).map(|k| r_e * k as f64 / n as f64).collect();
    b[n - 1] = r_e;
    Ok(b)
}

/// Annuli from cumulative ratios in (0, 1], strictly increasing, ending at 1.
pub fn segment_radii_with_ratios(r_e: f64, ratios: &[f64]) -> Result<Vec<f64>> {
    if ratios.len() < 2 {
        return Err(Error::InvalidParams("need at least 2 segment ratios".into()));
    }
    if !(r_e > 0.0) {
        return Err(Error::InvalidParams(format!("r_e must be positive (got {r_e})")));
    }
    let increasing = ratios.windows(2).all(|w| w[1] > w[0]);
    let last = *ratios.last().unwrap();
    if !increasing || ratios[0] <= 0.0 || (last - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParams(format!(
            "segment ratios must increase strictly within (0, 1] and end at 1 (got {ratios:?})"
        )));
    }
    let mut b: Vec<f64> = ratios.iter().map(|r| r * r_e).collect();
    *b.last_mut().unwrap() = r_e;
    Ok(b)
}

/// Annulus index of a location: half-open `[boundaries[k-1], boundaries[k])`,
/// with `r_e` itself in the last segment.
pub fn classify_location(point: (f64, f64), seg: &RadialSegmentation) -> Result<usize> {
    let d = seg.distance(point);
    if d > seg.r_e {
        return Err(Error::OutsideSegmentation {
            distance: d,
            r_e: seg.r_e,
        });
    }
    let last = seg.boundaries.len() - 1;
    Ok(seg.boundaries.partition_point(|&b| b <= d).min(last))
}
