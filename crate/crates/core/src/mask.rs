//! Regional masks: polygon files, rasterization to a validity map, exclusion
//! margins and cropping.
//!
//! Masks are stored as JSON:
//!
//! ```json
//! { "reference_size": [1280, 966], "polygons": [[[x, y], [x, y], ...], ...] }
//! ```
//!
//! Coordinates are continuous pixel coordinates: pixel `(i, j)` covers
//! `[i, i+1) x [j, j+1)` and its center is `(i + 0.5, j + 0.5)`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::Frame;

/// Minimum interior fraction of a rasterized mask.
pub const MIN_MASK_FRACTION: f64 = 0.01;

/// Relative tolerance when deciding whether two sizes are proportional.
const SCALE_TOLERANCE: f64 = 0.01;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionMask {
    pub reference_size: (u32, u32),
    pub polygons: Vec<Vec<[f64; 2]>>,
}

impl RegionMask {
    pub fn new(reference_size: (u32, u32), polygons: Vec<Vec<[f64; 2]>>) -> Result<Self> {
        let m = RegionMask {
            reference_size,
            polygons,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: RegionMask = serde_json::from_str(text)?;
        m.validate()?;
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Json(j) => Error::Config(format!("{}: {j}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("mask serializes")
    }

    /// Rectangle covering the whole reference frame.
    pub fn full_frame(width: u32, height: u32) -> Self {
        let (w, h) = (width as f64, height as f64);
        RegionMask {
            reference_size: (width, height),
            polygons: vec![vec![[0.0, 0.0], [w, 0.0], [w, h], [0.0, h]]],
        }
    }

    /// Regular polygon approximating a circle (`segments` vertices).
    pub fn circle(width: u32, height: u32, center: (f64, f64), radius: f64, segments: usize) -> Self {
        let poly = (0..segments)
            .map(|k| {
                let t = 2.0 * std::f64::consts::PI * k as f64 / segments as f64;
                [
                    (center.0 + radius * t.cos()).clamp(0.0, width as f64),
                    (center.1 + radius * t.sin()).clamp(0.0, height as f64),
                ]
            })
            .collect();
        RegionMask {
            reference_size: (width, height),
            polygons: vec![poly],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (w, h) = (self.reference_size.0 as f64, self.reference_size.1 as f64);
        if w <= 0.0 || h <= 0.0 {
            return Err(Error::InvalidMask("reference_size must be positive".into()));
        }
        if self.polygons.is_empty() {
            return Err(Error::InvalidMask("no polygons".into()));
        }
        for (i, poly) in self.polygons.iter().enumerate() {
            if poly.len() < 3 {
                return Err(Error::InvalidMask(format!(
                    "polygon {i} has {} vertices (need at least 3)",
                    poly.len()
                )));
            }
            for v in poly {
                if !(v[0].is_finite() && v[1].is_finite())
                    || v[0] < 0.0
                    || v[1] < 0.0
                    || v[0] > w
                    || v[1] > h
                {
                    return Err(Error::InvalidMask(format!(
                        "polygon {i} vertex ({}, {}) outside [0,{w}]x[0,{h}]",
                        v[0], v[1]
                    )));
                }
            }
            if polygon_area(poly).abs() < 1e-9 {
                return Err(Error::InvalidMask(format!("polygon {i} has zero area")));
            }
        }
        Ok(())
    }

    /// Polygons scaled to a `width`×`height` frame.
    pub fn scaled_to(&self, width: usize, height: usize) -> Result<Vec<Vec<[f64; 2]>>> {
        let (rw, rh) = (self.reference_size.0 as f64, self.reference_size.1 as f64);
        let sx = width as f64 / rw;
        let sy = height as f64 / rh;
        if ((sx - sy) / sx.max(sy)).abs() > SCALE_TOLERANCE {
            return Err(Error::MaskSizeMismatch {
                reference: self.reference_size,
                actual: (width, height),
            });
        }
        if sx == 1.0 && sy == 1.0 {
            return Ok(self.polygons.clone());
        }
        Ok(self
            .polygons
            .iter()
            .map(|p| p.iter().map(|v| [v[0] * sx, v[1] * sy]).collect())
            .collect())
    }
}

/// Signed shoelace area.
pub fn polygon_area(poly: &[[f64; 2]]) -> f64 {
    let n = poly.len();
    let mut acc = 0.0;
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        acc += a[0] * b[1] - b[0] * a[1];
    }
    0.5 * acc
}

/// Per-pixel validity, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValidityMap {
    width: usize,
    height: usize,
    valid: Vec<bool>,
    margin: usize,
}

impl ValidityMap {
    /// Every pixel valid (no mask).
    pub fn full(width: usize, height: usize) -> Self {
        ValidityMap {
            width,
            height,
            valid: vec![true; width * height],
            margin: 0,
        }
    }

    pub fn from_vec(width: usize, height: usize, valid: Vec<bool>) -> Result<Self> {
        if valid.len() != width * height {
            return Err(Error::Dimensions(format!(
                "validity buffer {} for {width}x{height}",
                valid.len()
            )));
        }
        Ok(ValidityMap {
            width,
            height,
            valid,
            margin: 0,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn margin(&self) -> usize {
        self.margin
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.valid
    }

    #[inline]
    pub fn is_valid(&self, x: usize, y: usize) -> bool {
        self.valid[y * self.width + x]
    }

    pub fn count_valid(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }

    pub fn valid_fraction(&self) -> f64 {
        self.count_valid() as f64 / (self.width * self.height) as f64
    }

    /// True when every pixel of the `w`×`h` rectangle at `(x, y)` is valid.
    pub fn rect_valid(&self, x: usize, y: usize, w: usize, h: usize) -> bool {
        if x + w > self.width || y + h > self.height {
            return false;
        }
        (y..y + h).all(|row| self.valid[row * self.width + x..row * self.width + x + w].iter().all(|&v| v))
    }

    /// Axis-aligned bounding box `(x, y, w, h)` of the valid pixels.
    pub fn bounding_box(&self) -> Option<(usize, usize, usize, usize)> {
        let mut x0 = usize::MAX;
        let mut y0 = usize::MAX;
        let mut x1 = 0;
        let mut y1 = 0;
        for y in 0..self.height {
            let row = &self.valid[y * self.width..(y + 1) * self.width];
            if let Some(first) = row.iter().position(|&v| v) {
                let last = row.iter().rposition(|&v| v).unwrap();
                x0 = x0.min(first);
                x1 = x1.max(last + 1);
                y0 = y0.min(y);
                y1 = y + 1;
            }
        }
        (x0 != usize::MAX).then(|| (x0, y0, x1 - x0, y1 - y0))
    }

    /// Sub-map of the `w`×`h` rectangle at `(x, y)`.
    pub fn crop(&self, x: usize, y: usize, w: usize, h: usize) -> ValidityMap {
        let mut valid = Vec::with_capacity(w * h);
        for row in y..y + h {
            valid.extend_from_slice(&self.valid[row * self.width + x..row * self.width + x + w]);
        }
        ValidityMap {
            width: w,
            height: h,
            valid,
            margin: self.margin,
        }
    }

    /// Pixel-wise AND.
    pub fn intersect(&self, other: &ValidityMap) -> Result<ValidityMap> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::Dimensions("validity maps differ in size".into()));
        }
        Ok(ValidityMap {
            width: self.width,
            height: self.height,
            valid: self.valid.iter().zip(&other.valid).map(|(a, b)| *a && *b).collect(),
            margin: self.margin.max(other.margin),
        })
    }
}

/// Even-odd scanline fill sampled at pixel centers.
pub fn rasterize(mask: &RegionMask, width: usize, height: usize) -> Result<ValidityMap> {
    mask.validate()?;
    let polys = mask.scaled_to(width, height)?;
    let mut valid = vec![false; width * height];
    let mut crossings: Vec<f64> = Vec::new();
    for row in 0..height {
        let yc = row as f64 + 0.5;
        crossings.clear();
        for poly in &polys {
            let n = poly.len();
            for i in 0..n {
                let a = poly[i];
                let b = poly[(i + n - 1) % n];
                if (a[1] > yc) != (b[1] > yc) {
                    crossings.push((b[0] - a[0]) * (yc - a[1]) / (b[1] - a[1]) + a[0]);
                }
            }
        }
        crossings.sort_by(f64::total_cmp);
        for pair in crossings.chunks_exact(2) {
            // centers x + 0.5 in [pair[0], pair[1])
            let start = (pair[0] - 0.5).ceil().max(0.0);
            let end = (pair[1] - 0.5).ceil().min(width as f64);
            if end <= start {
                continue;
            }
            let base = row * width;
            for v in &mut valid[base + start as usize..base + end as usize] {
                *v = true;
            }
        }
    }
    let map = ValidityMap {
        width,
        height,
        valid,
        margin: 0,
    };
    let fraction = map.valid_fraction();
    if fraction < MIN_MASK_FRACTION {
        return Err(Error::MaskTooSmall { fraction });
    }
    Ok(map)
}

/// Grows the invalid region by `margin` pixels (Chebyshev distance). The image
/// border is not treated as invalid.
pub fn dilate_exclusion(vmap: &ValidityMap, margin: usize) -> ValidityMap {
    if margin == 0 {
        return vmap.clone();
    }
    let (w, h) = (vmap.width, vmap.height);
    let invalid: Vec<bool> = vmap.valid.iter().map(|v| !v).collect();
    let horiz = dilate_1d(&invalid, w, h, margin, true);
    let both = dilate_1d(&horiz, w, h, margin, false);
    ValidityMap {
        width: w,
        height: h,
        valid: both.into_iter().map(|inv| !inv).collect(),
        margin: vmap.margin + margin,
    }
}

/// Running-count dilation along rows (`along_rows`) or columns.
fn dilate_1d(src: &[bool], w: usize, h: usize, r: usize, along_rows: bool) -> Vec<bool> {
    let mut out = vec![false; w * h];
    let (lines, len) = if along_rows { (h, w) } else { (w, h) };
    let idx = |line: usize, k: usize| if along_rows { line * w + k } else { k * w + line };
    let mut prefix = vec![0usize; len + 1];
    for line in 0..lines {
        for k in 0..len {
            prefix[k + 1] = prefix[k] + src[idx(line, k)] as usize;
        }
        for k in 0..len {
            let lo = k.saturating_sub(r);
            let hi = (k + r + 1).min(len);
            out[idx(line, k)] = prefix[hi] > prefix[lo];
        }
    }
    out
}

/// Crops `frame` to the bounding box of valid pixels. The returned offset maps
/// cropped coordinates back to the original frame.
pub fn crop_to_mask(frame: &Frame, vmap: &ValidityMap) -> Result<(Frame, (usize, usize))> {
    if frame.width() != vmap.width || frame.height() != vmap.height {
        return Err(Error::Dimensions(format!(
            "frame {}x{} vs validity map {}x{}",
            frame.width(),
            frame.height(),
            vmap.width,
            vmap.height
        )));
    }
    let (x, y, w, h) = vmap.bounding_box().ok_or(Error::EmptyValidity)?;
    if (x, y, w, h) == (0, 0, frame.width(), frame.height()) {
        return Ok((frame.clone(), (0, 0)));
    }
    let cropped = Frame::new(frame.id(), w, h, frame.window(x, y, w, h), frame.bit_depth())?;
    Ok((cropped, (x, y)))
}
