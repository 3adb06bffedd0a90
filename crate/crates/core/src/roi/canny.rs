use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::ingest::Frame;
use crate::mask::ValidityMap;

/// Gaussian pre-smoothing applied before gradients.
pub const CANNY_SIGMA: f64 = 1.0;
/// Percentile of the nonzero gradient magnitudes used as the high threshold.
pub const HIGH_PERCENTILE: f64 = 0.90;
/// Low threshold as a fraction of the high threshold.
pub const LOW_RATIO: f64 = 0.4;

const ZERO_MAGNITUDE: f64 = 1e-12;

/// Boolean edge map, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EdgeMap {
    pub width: usize,
    pub height: usize,
    pub edges: Vec<bool>,
}

impl EdgeMap {
    #[inline]
    pub fn is_edge(&self, x: usize, y: usize) -> bool {
        self.edges[y * self.width + x]
    }

    pub fn count(&self) -> usize {
        self.edges.iter().filter(|&&e| e).count()
    }
}

/// Sobel gradients of the Gaussian-smoothed image.
#[derive(Clone, Debug)]
pub struct Gradients {
    pub width: usize,
    pub height: usize,
    pub gx: Vec<f64>,
    pub gy: Vec<f64>,
    pub magnitude: Vec<f64>,
}

pub(crate) fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as usize;
    let mut k: Vec<f64> = (0..=2 * radius)
        .map(|i| {
            let x = i as f64 - radius as f64;
            (-x * x / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let s: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= s);
    k
}

/// Separable convolution with edge replication.
pub(crate) fn blur(src: &[f64], w: usize, h: usize, sigma: f64) -> Vec<f64> {
    let k = gaussian_kernel(sigma);
    let r = (k.len() / 2) as isize;
    let mut tmp = vec![0.0; w * h];
    for y in 0..h {
        let row = &src[y * w..(y + 1) * w];
        for x in 0..w {
            let mut acc = 0.0;
            for (i, kv) in k.iter().enumerate() {
                let xx = (x as isize + i as isize - r).clamp(0, w as isize - 1) as usize;
                acc += kv * row[xx];
            }
            tmp[y * w + x] = acc;
        }
    }
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (i, kv) in k.iter().enumerate() {
                let yy = (y as isize + i as isize - r).clamp(0, h as isize - 1) as usize;
                acc += kv * tmp[yy * w + x];
            }
            out[y * w + x] = acc;
        }
    }
    out
}

impl Gradients {
    pub fn compute(frame: &Frame) -> Self {
        let (w, h) = (frame.width(), frame.height());
        let s = blur(frame.luminance(), w, h, CANNY_SIGMA);
        let mut gx = vec![0.0; w * h];
        let mut gy = vec![0.0; w * h];
        let at = |x: isize, y: isize| {
            let xx = x.clamp(0, w as isize - 1) as usize;
            let yy = y.clamp(0, h as isize - 1) as usize;
            s[yy * w + xx]
        };
        for y in 0..h as isize {
            for x in 0..w as isize {
                let i = y as usize * w + x as usize;
                gx[i] = (at(x + 1, y - 1) + 2.0 * at(x + 1, y) + at(x + 1, y + 1))
                    - (at(x - 1, y - 1) + 2.0 * at(x - 1, y) + at(x - 1, y + 1));
                gy[i] = (at(x - 1, y + 1) + 2.0 * at(x, y + 1) + at(x + 1, y + 1))
                    - (at(x - 1, y - 1) + 2.0 * at(x, y - 1) + at(x + 1, y - 1));
            }
        }
        let magnitude = gx.iter().zip(&gy).map(|(a, b)| a.hypot(*b)).collect();
        Gradients {
            width: w,
            height: h,
            gx,
            gy,
            magnitude,
        }
    }
}

/// Nearest-rank percentile of the nonzero magnitudes at valid pixels.
fn high_threshold(g: &Gradients, vmap: &ValidityMap) -> Option<f64> {
    let mut mags: Vec<f64> = g
        .magnitude
        .iter()
        .zip(vmap.as_slice())
        .filter(|(m, v)| **v && **m > ZERO_MAGNITUDE)
        .map(|(m, _)| *m)
        .collect();
    if mags.is_empty() {
        return None;
    }
    mags.sort_by(f64::total_cmp);
    let rank = ((HIGH_PERCENTILE * mags.len() as f64).ceil() as usize).clamp(1, mags.len());
    Some(mags[rank - 1])
}

/// Bilinear magnitude at a fractional position (inside the frame).
fn magnitude_at(g: &Gradients, x: f64, y: f64) -> f64 {
    let (x0, y0) = (x.floor(), y.floor());
    let (fx, fy) = (x - x0, y - y0);
    let (x0, y0) = (x0 as usize, y0 as usize);
    let (x1, y1) = ((x0 + 1).min(g.width - 1), (y0 + 1).min(g.height - 1));
    let m = |xx: usize, yy: usize| g.magnitude[yy * g.width + xx];
    (1.0 - fy) * ((1.0 - fx) * m(x0, y0) + fx * m(x1, y0)) + fy * ((1.0 - fx) * m(x0, y1) + fx * m(x1, y1))
}

/// Non-maximum suppression against the magnitudes interpolated one pixel
/// either way along the gradient. Ties are broken towards the forward side so
/// plateaus thin to one pixel.
fn suppress(g: &Gradients) -> Vec<f64> {
    let (w, h) = (g.width, g.height);
    let mut out = vec![0.0; w * h];
    for y in 1..h.saturating_sub(1) {
        for x in 1..w.saturating_sub(1) {
            let i = y * w + x;
            let m = g.magnitude[i];
            if m <= ZERO_MAGNITUDE {
                continue;
            }
            let (ux, uy) = (g.gx[i] / m, g.gy[i] / m);
            let (xf, yf) = (x as f64, y as f64);
            let fwd = magnitude_at(g, xf + ux, yf + uy);
            let back = magnitude_at(g, xf - ux, yf - uy);
            if m > back && m >= fwd {
                out[i] = m;
            }
        }
    }
    out
}

/// Canny edge map restricted to valid pixels.
pub fn detect_edges(frame: &Frame, vmap: &ValidityMap) -> Result<EdgeMap> {
    let g = Gradients::compute(frame);
    detect_edges_with(&g, vmap)
}

pub fn detect_edges_with(g: &Gradients, vmap: &ValidityMap) -> Result<EdgeMap> {
    let (w, h) = (g.width, g.height);
    if vmap.width() != w || vmap.height() != h {
        return Err(Error::Dimensions(format!(
            "frame {w}x{h} vs validity map {}x{}",
            vmap.width(),
            vmap.height()
        )));
    }
    let mut edges = vec![false; w * h];
    let Some(high) = high_threshold(g, vmap) else {
        return Ok(EdgeMap {
            width: w,
            height: h,
            edges,
        });
    };
    let low = LOW_RATIO * high;
    let nms = suppress(g);
    let valid = vmap.as_slice();
    let mut queue = VecDeque::new();
    for i in 0..w * h {
        if valid[i] && nms[i] >= high && !edges[i] {
            edges[i] = true;
            queue.push_back(i);
            while let Some(j) = queue.pop_front() {
                let (x, y) = ((j % w) as isize, (j / w) as isize);
                for dy in -1..=1isize {
                    for dx in -1..=1isize {
                        let (nx, ny) = (x + dx, y + dy);
                        if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                            continue;
                        }
                        let k = ny as usize * w + nx as usize;
                        if !edges[k] && valid[k] && nms[k] >= low && nms[k] > ZERO_MAGNITUDE {
                            edges[k] = true;
                            queue.push_back(k);
                        }
                    }
                }
            }
        }
    }
    thin(&mut edges, w, h);
    Ok(EdgeMap {
        width: w,
        height: h,
        edges,
    })
}

/// Ring of neighbors starting east, counter-clockwise in image terms.
const RING: [(isize, isize); 8] = [(1, 0), (1, -1), (0, -1), (-1, -1), (-1, 0), (-1, 1), (0, 1), (1, 1)];

/// Removes edge pixels whose removal keeps their neighbors connected and
/// that are not line ends, until none are left. Leaves 8-connected chains one
/// pixel wide so tracing does not fragment on doubled pixels or staircases.
fn thin(edges: &mut [bool], w: usize, h: usize) {
    let on = |edges: &[bool], x: isize, y: isize| x >= 0 && y >= 0 && x < w as isize && y < h as isize && edges[y as usize * w + x as usize];
    loop {
        let mut changed = false;
        for y in 0..h as isize {
            for x in 0..w as isize {
                if !on(edges, x, y) {
                    continue;
                }
                let ring: Vec<bool> = RING.iter().map(|&(dx, dy)| on(edges, x + dx, y + dy)).collect();
                let count = ring.iter().filter(|&&b| b).count();
                if count < 2 {
                    continue;
                }
                // 8-connectivity number (Yokoi): components of the neighbor ring
                let connectivity: usize = [0, 2, 4, 6]
                    .iter()
                    .map(|&k| {
                        let off = |j: usize| !ring[(k + j) % 8];
                        (off(0) as usize) - (off(0) && off(1) && off(2)) as usize
                    })
                    .sum();
                if connectivity == 1 {
                    edges[y as usize * w + x as usize] = false;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{make_slanted_edge, SynthEdgeSpec};

    #[test]
    fn uniform_frame_has_no_edges() {
        let f = Frame::new("u", 80, 80, vec![0.4; 6400], 8).unwrap();
        let e = detect_edges(&f, &ValidityMap::full(80, 80)).unwrap();
        assert_eq!(e.count(), 0);
    }

    #[test]
    fn slanted_step_gives_single_thin_chain_on_the_line() {
        let spec = SynthEdgeSpec {
            width: 128,
            height: 128,
            angle_deg: 5.0,
            contrast: 0.5,
            blur_sigma: 0.0,
            ..SynthEdgeSpec::default()
        };
        let f = make_slanted_edge(&spec);
        let e = detect_edges(&f, &ValidityMap::full(128, 128)).unwrap();
        let (nx, ny) = (5f64.to_radians().cos(), 5f64.to_radians().sin());
        let mut prev: Option<usize> = None;
        for y in 1..127 {
            let xs: Vec<usize> = (0..128).filter(|&x| e.is_edge(x, y)).collect();
            assert_eq!(xs.len(), 1, "row {y}: {xs:?}");
            let x = xs[0];
            // analytic line: (px - 64) nx + (py - 64) ny = 0 through the center
            let d = (x as f64 + 0.5 - 64.0) * nx + (y as f64 + 0.5 - 64.0) * ny;
            assert!(d.abs() <= 1.0, "row {y}: deviation {d}");
            if let Some(p) = prev {
                assert!((p as i64 - x as i64).abs() <= 1, "chain broken at row {y}");
            }
            prev = Some(x);
        }
    }

    #[test]
    fn edge_in_invalid_region_is_dropped() {
        let spec = SynthEdgeSpec {
            width: 128,
            height: 128,
            angle_deg: 5.0,
            contrast: 0.5,
            blur_sigma: 1.0,
            ..SynthEdgeSpec::default()
        };
        let f = make_slanted_edge(&spec);
        let valid: Vec<bool> = (0..128 * 128).map(|i| (i % 128) < 30).collect();
        let v = ValidityMap::from_vec(128, 128, valid).unwrap();
        assert_eq!(detect_edges(&f, &v).unwrap().count(), 0);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let f = Frame::new("u", 80, 80, vec![0.4; 6400], 8).unwrap();
        assert!(detect_edges(&f, &ValidityMap::full(81, 80)).is_err());
    }
}
