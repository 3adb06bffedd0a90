//! Synthetic slanted edges with analytically known MTF, and composite scenes
//! built from them.
//!
//! An edge with Gaussian blur `sigma` rendered with a unit pixel aperture has
//! `MTF(f) = exp(-2 pi^2 sigma^2 f^2) |sinc(f)|` (before any sharpening).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::Frame;
use crate::mask::{rasterize, RegionMask};
use crate::roi::canny::blur;
use crate::roi::Rect;
use crate::sfr::sinc;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthEdgeSpec {
    pub width: usize,
    pub height: usize,
    /// Direction of the dark-to-light normal, degrees, image coordinates.
    pub angle_deg: f64,
    pub contrast: f64,
    pub blur_sigma: f64,
    pub noise_sigma: f64,
    pub sharpen_gain: f64,
    /// Gaussian radius of the unsharp mask, pixels.
    pub sharpen_sigma: f64,
    pub seed: u64,
    /// Area samples per pixel side.
    pub supersampling: usize,
}

impl Default for SynthEdgeSpec {
    fn default() -> Self {
        SynthEdgeSpec {
            width: 128,
            height: 128,
            angle_deg: 5.0,
            contrast: 0.5,
            blur_sigma: 1.0,
            noise_sigma: 0.0,
            sharpen_gain: 0.0,
            sharpen_sigma: 1.0,
            seed: 0,
            supersampling: 8,
        }
    }
}

impl SynthEdgeSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.contrast > 0.0 && self.contrast < 1.0) {
            return Err(Error::InvalidParams(format!("contrast {} outside (0, 1)", self.contrast)));
        }
        if !(self.blur_sigma >= 0.0) || !(self.noise_sigma >= 0.0) || !(self.sharpen_gain >= 0.0) {
            return Err(Error::InvalidParams("blur, noise and sharpen gain must be non-negative".into()));
        }
        if self.supersampling == 0 {
            return Err(Error::InvalidParams("supersampling must be at least 1".into()));
        }
        Ok(())
    }
}

fn phi(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Ground-truth MTF of a Gaussian edge including the pixel aperture.
pub fn gaussian_mtf(sigma: f64, f: f64) -> f64 {
    (-2.0 * std::f64::consts::PI.powi(2) * sigma * sigma * f * f).exp() * sinc(f).abs()
}

/// Frequency where [`gaussian_mtf`] equals 0.5.
pub fn analytic_mtf50(sigma: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if gaussian_mtf(sigma, mid) > 0.5 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Renders the edge luminance, without noise or sharpening, into a buffer.
fn render_edge(spec: &SynthEdgeSpec) -> Vec<f64> {
    let (w, h) = (spec.width, spec.height);
    let (nx, ny) = (spec.angle_deg.to_radians().cos(), spec.angle_deg.to_radians().sin());
    let (cx, cy) = (w as f64 / 2.0, h as f64 / 2.0);
    let offset = 0.5 - spec.contrast / 2.0;
    let sigma = spec.blur_sigma;
    let profile = |d: f64| {
        let s = if sigma == 0.0 {
            if d >= 0.0 {
                1.0
            } else {
                0.0
            }
        } else {
            phi(d / sigma)
        };
        offset + spec.contrast * s
    };
    let ss = spec.supersampling;
    let reach = 8.0 * sigma + 1.0;
    let mut out = vec![0.0; w * h];
    for j in 0..h {
        for i in 0..w {
            let dc = (i as f64 + 0.5 - cx) * nx + (j as f64 + 0.5 - cy) * ny;
            out[j * w + i] = if dc.abs() > reach {
                profile(dc)
            } else {
                let mut acc = 0.0;
                for sj in 0..ss {
                    let y = j as f64 + (sj as f64 + 0.5) / ss as f64 - cy;
                    for si in 0..ss {
                        let x = i as f64 + (si as f64 + 0.5) / ss as f64 - cx;
                        acc += profile(x * nx + y * ny);
                    }
                }
                acc / (ss * ss) as f64
            };
        }
    }
    out
}

fn add_noise(buf: &mut [f64], sigma: f64, seed: u64) {
    if sigma <= 0.0 {
        return;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sigma).expect("finite sigma");
    for v in buf.iter_mut() {
        *v += normal.sample(&mut rng);
    }
}

fn unsharp(buf: &mut [f64], w: usize, h: usize, gain: f64, sigma: f64) {
    if gain <= 0.0 {
        return;
    }
    let blurred = blur(buf, w, h, sigma);
    for (v, b) in buf.iter_mut().zip(blurred) {
        *v += gain * (*v - b);
    }
}

/// One slanted edge through the frame center.
pub fn make_slanted_edge(spec: &SynthEdgeSpec) -> Frame {
    let mut buf = render_edge(spec);
    add_noise(&mut buf, spec.noise_sigma, spec.seed);
    unsharp(&mut buf, spec.width, spec.height, spec.sharpen_gain, spec.sharpen_sigma);
    Frame::new("synthetic", spec.width, spec.height, buf, 16).expect("synthetic frames are at least 64x64")
}

/// Edge patch placed with its center at `(x, y)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlacedEdge {
    pub x: f64,
    pub y: f64,
    pub edge: SynthEdgeSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneSpec {
    pub width: usize,
    pub height: usize,
    pub background: f64,
    /// Background level outside the mask (the edge patches are kept).
    pub outside_level: f64,
    /// Required clear gap between patches, pixels.
    pub min_separation: usize,
    /// Width of the blend from patch to background, pixels.
    pub feather: usize,
    pub noise_sigma: f64,
    pub seed: u64,
    pub edges: Vec<PlacedEdge>,
}

impl Default for SceneSpec {
    fn default() -> Self {
        SceneSpec {
            width: 512,
            height: 512,
            background: 0.5,
            outside_level: 0.05,
            min_separation: 20,
            feather: 12,
            noise_sigma: 0.0,
            seed: 0,
            edges: Vec::new(),
        }
    }
}

impl SceneSpec {
    /// Pixel rectangle each patch occupies.
    pub fn patch_rects(&self) -> Result<Vec<Rect>> {
        self.edges
            .iter()
            .map(|p| {
                let x0 = (p.x - p.edge.width as f64 / 2.0).round();
                let y0 = (p.y - p.edge.height as f64 / 2.0).round();
                if x0 < 0.0
                    || y0 < 0.0
                    || x0 as usize + p.edge.width > self.width
                    || y0 as usize + p.edge.height > self.height
                {
                    return Err(Error::InvalidParams(format!(
                        "patch at ({}, {}) does not fit in {}x{}",
                        p.x, p.y, self.width, self.height
                    )));
                }
                Ok(Rect {
                    x: x0 as usize,
                    y: y0 as usize,
                    w: p.edge.width,
                    h: p.edge.height,
                })
            })
            .collect()
    }
}

fn smoothstep(u: f64) -> f64 {
    let u = u.clamp(0.0, 1.0);
    u * u * (3.0 - 2.0 * u)
}

/// Composites edge patches on a neutral background. With a mask, background
/// outside the mask is set to `outside_level` to mimic vignetting/occlusion.
pub fn make_scene(spec: &SceneSpec, mask: Option<&RegionMask>) -> Result<Frame> {
    let (w, h) = (spec.width, spec.height);
    let rects = spec.patch_rects()?;
    let gap = spec.min_separation / 2;
    for i in 0..rects.len() {
        for j in i + 1..rects.len() {
            let grow = |r: &Rect| Rect {
                x: r.x.saturating_sub(gap),
                y: r.y.saturating_sub(gap),
                w: r.w + 2 * gap,
                h: r.h + 2 * gap,
            };
            if grow(&rects[i]).intersects(&grow(&rects[j])) {
                return Err(Error::PatchOverlap { first: i, second: j });
            }
        }
    }
    let mut buf = vec![spec.background; w * h];
    if let Some(m) = mask {
        let vmap = rasterize(m, w, h)?;
        for (v, ok) in buf.iter_mut().zip(vmap.as_slice()) {
            if !ok {
                *v = spec.outside_level;
            }
        }
    }
    for (p, r) in spec.edges.iter().zip(&rects) {
        p.edge.validate()?;
        let patch = make_slanted_edge(&p.edge);
        let f = spec.feather as f64;
        for j in 0..r.h {
            for i in 0..r.w {
                let edge_dist = i.min(j).min(r.w - 1 - i).min(r.h - 1 - j) as f64 + 0.5;
                let alpha = if f > 0.0 { smoothstep(edge_dist / f) } else { 1.0 };
                let k = (r.y + j) * w + r.x + i;
                buf[k] = alpha * patch.get(i, j) + (1.0 - alpha) * buf[k];
            }
        }
    }
    add_noise(&mut buf, spec.noise_sigma, spec.seed);
    Frame::new("scene", w, h, buf, 16)
}

/// A synthesis request as read from a JSON spec file: either single edges or
/// a composite scene, optionally repeated with incrementing seeds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthJob {
    #[serde(default)]
    pub edge: Option<SynthEdgeSpec>,
    #[serde(default)]
    pub scene: Option<SceneSpec>,
    /// Region mask applied to scenes.
    #[serde(default)]
    pub mask: Option<std::path::PathBuf>,
    #[serde(default = "one")]
    pub frames: usize,
}

fn one() -> usize {
    1
}

/// Ground truth for one rendered frame.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GroundTruth {
    pub file: String,
    pub edges: Vec<EdgeTruth>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EdgeTruth {
    pub center: [f64; 2],
    pub angle_deg: f64,
    pub blur_sigma: f64,
    /// Known only for unsharpened edges.
    pub mtf50: Option<f64>,
}

fn truth_of(center: [f64; 2], e: &SynthEdgeSpec) -> EdgeTruth {
    EdgeTruth {
        center,
        angle_deg: e.angle_deg,
        blur_sigma: e.blur_sigma,
        mtf50: (e.sharpen_gain == 0.0).then(|| analytic_mtf50(e.blur_sigma)),
    }
}

/// Renders every frame of a job, seeds advancing by one per frame.
pub fn render_job(job: &SynthJob) -> Result<Vec<(Frame, Vec<EdgeTruth>)>> {
    let mask = job.mask.as_deref().map(RegionMask::load).transpose()?;
    let mut out = Vec::with_capacity(job.frames);
    for k in 0..job.frames as u64 {
        match (&job.edge, &job.scene) {
            (Some(e), None) => {
                e.validate()?;
                let spec = SynthEdgeSpec { seed: e.seed + k, ..e.clone() };
                let c = [e.width as f64 / 2.0, e.height as f64 / 2.0];
                out.push((make_slanted_edge(&spec), vec![truth_of(c, e)]));
            }
            (None, Some(s)) => {
                let spec = SceneSpec { seed: s.seed + k, ..s.clone() };
                let truth = s.edges.iter().map(|p| truth_of([p.x, p.y], &p.edge)).collect();
                out.push((make_scene(&spec, mask.as_ref())?, truth));
            }
            _ => return Err(Error::Config("a synth spec needs exactly one of `edge` or `scene`".into())),
        }
    }
    Ok(out)
}

/// Saves a frame as a 16-bit grayscale PNG.
pub fn save_png16(frame: &Frame, path: &std::path::Path) -> Result<()> {
    let data: Vec<u16> = frame.luminance().iter().map(|v| (v * 65535.0).round() as u16).collect();
    let img = image::ImageBuffer::<image::Luma<u16>, _>::from_raw(frame.width() as u32, frame.height() as u32, data)
        .expect("buffer matches frame");
    img.save(path)?;
    Ok(())
}
