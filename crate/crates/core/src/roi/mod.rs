//! Slanted-edge ROI discovery in natural scenes.

mod candidates;
pub(crate) mod canny;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use candidates::{extract_candidates, extract_candidates_with, Extraction, Rejections};
pub use canny::{detect_edges, detect_edges_with, EdgeMap, Gradients};

/// Edge selection parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NsSfrParams {
    pub contrast_min: f64,
    pub contrast_max: f64,
    /// Step-edge noise floor: bound on the standard deviation of the flat
    /// regions either side of the edge, in normalized luminance.
    pub st: f64,
    /// ESF width in pixels: minimum clearance to other edges; the ROI spans
    /// `2 * esfw` pixels either side of the edge.
    pub esfw: usize,
    pub angle_exclusion_deg: f64,
    pub edge_fit_order: usize,
}

impl Default for NsSfrParams {
    fn default() -> Self {
        NsSfrParams {
            contrast_min: 0.1,
            contrast_max: 0.9,
            st: 0.02,
            esfw: 5,
            angle_exclusion_deg: 2.0,
            edge_fit_order: 5,
        }
    }
}

impl NsSfrParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParams(m));
        if !(0.0 < self.contrast_min && self.contrast_min < self.contrast_max && self.contrast_max < 1.0) {
            return bad(format!(
                "contrast range must satisfy 0 < min < max < 1 (got {}..{})",
                self.contrast_min, self.contrast_max
            ));
        }
        if !(self.st > 0.0) {
            return bad(format!("st must be positive (got {})", self.st));
        }
        if self.esfw < 3 {
            return bad(format!("esfw must be at least 3 (got {})", self.esfw));
        }
        if !(0.0..22.5).contains(&self.angle_exclusion_deg) {
            return bad(format!(
                "angle exclusion must lie in [0, 22.5) (got {})",
                self.angle_exclusion_deg
            ));
        }
        if ![1, 3, 5].contains(&self.edge_fit_order) {
            return bad(format!("edge fit order must be 1, 3 or 5 (got {})", self.edge_fit_order));
        }
        Ok(())
    }

    /// Half-width of the ROI across the edge, pixels.
    pub fn half_width(&self) -> usize {
        2 * self.esfw
    }

    /// Hamming window half-width used for the LSF, pixels.
    pub fn window_half_width(&self) -> f64 {
        4.0 * self.esfw as f64
    }

    /// Default exclusion margin around invalid pixels.
    pub fn default_margin(&self) -> usize {
        2 * self.esfw
    }

    /// `st` expressed in code values for a given bit depth.
    pub fn st_in_dn(&self, bit_depth: u8) -> f64 {
        self.st * ((1u64 << bit_depth) - 1) as f64
    }
}

/// Orientation of the edge line. An edge whose normal points mostly along y
/// (normal angle mod 180 in (45, 135)) is horizontal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Horizontal,
    Vertical,
}

impl Orientation {
    pub fn of_angle(edge_angle_deg: f64) -> Self {
        let a = edge_angle_deg.rem_euclid(180.0);
        if a > 45.0 && a < 135.0 {
            Orientation::Horizontal
        } else {
            Orientation::Vertical
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Orientation::Horizontal => "horizontal",
            Orientation::Vertical => "vertical",
        }
    }
}

impl std::fmt::Display for Orientation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Orientation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "horizontal" => Ok(Orientation::Horizontal),
            "vertical" => Ok(Orientation::Vertical),
            other => Err(Error::InvalidParams(format!("unknown orientation `{other}`"))),
        }
    }
}

/// Distance (degrees) from `angle` to the nearest multiple of 45°.
pub fn distance_to_octant(angle_deg: f64) -> f64 {
    let a = angle_deg.rem_euclid(45.0);
    a.min(45.0 - a)
}

pub fn angle_excluded(angle_deg: f64, exclusion_deg: f64) -> bool {
    distance_to_octant(angle_deg) < exclusion_deg
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rect {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
}

impl Rect {
    pub fn intersects(&self, other: &Rect) -> bool {
        self.x < other.x + other.w && other.x < self.x + self.w && self.y < other.y + other.h && other.y < self.y + self.h
    }
}

/// A luminance patch cut from a frame.
#[derive(Clone, Debug, PartialEq)]
pub struct Patch {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

impl Patch {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::Dimensions(format!(
                "patch buffer {} for {width}x{height}",
                data.len()
            )));
        }
        Ok(Patch { width, height, data })
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }
}

/// One slanted-edge region found in a frame. Locations are in original
/// (uncropped) frame coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct RoiCandidate {
    pub frame_id: String,
    pub roi_index: usize,
    pub bbox: Rect,
    pub centroid: (f64, f64),
    /// Direction of the dark-to-light normal, degrees in [0, 360), image
    /// coordinates (x right, y down).
    pub edge_angle_deg: f64,
    pub contrast: f64,
    pub orientation: Orientation,
    pub patch: Patch,
}
