//! Slanted-edge e-SFR: polynomial edge fit, 4x supersampled ESF, windowed LSF,
//! Fourier magnitude and MTF50.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::roi::{NsSfrParams, Orientation, Patch, RoiCandidate};

/// ESF bins per pixel.
pub const SUPERSAMPLING: usize = 4;
pub const BIN_WIDTH: f64 = 1.0 / SUPERSAMPLING as f64;
/// Output frequency grid step, cycles/pixel.
pub const GRID_STEP: f64 = 0.01;
/// Highest reported frequency, cycles/pixel.
pub const MAX_FREQUENCY: f64 = 1.0;
/// Largest accepted RMS residual of the edge fit, pixels.
pub const MAX_FIT_RMSE: f64 = 0.5;
/// Minimum ESF length in supersampled bins.
pub const MIN_ESF_BINS: usize = 64;
/// Largest tolerated fraction of empty bins in the central ESF.
pub const MAX_EMPTY_FRACTION: f64 = 0.05;

/// Polynomial model of the edge crossing position along each line of a patch.
///
/// Lines are rows for vertical edges and columns for horizontal edges. The
/// polynomial is expressed in the normalized line coordinate
/// `t = (line - center) / half_span`, so every coefficient is in pixels.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeFit {
    pub coefficients: Vec<f64>,
    pub mean_angle_deg: f64,
    pub rmse: f64,
    pub orientation: Orientation,
    /// +1 when luminance increases along the sample index, -1 otherwise.
    pub polarity: f64,
    pub lines: usize,
    pub samples: usize,
    center: f64,
    half_span: f64,
}

impl EdgeFit {
    fn t(&self, line: f64) -> f64 {
        (line - self.center) / self.half_span
    }

    /// Crossing position (sample coordinate) at `line`.
    pub fn position(&self, line: f64) -> f64 {
        let t = self.t(line);
        self.coefficients.iter().rev().fold(0.0, |acc, c| acc * t + c)
    }

    /// d(position)/d(line).
    pub fn slope(&self, line: f64) -> f64 {
        let t = self.t(line);
        let d: f64 = self
            .coefficients
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, c)| k as f64 * c * t.powi(k as i32 - 1))
            .sum();
        d / self.half_span
    }

    pub fn order(&self) -> usize {
        self.coefficients.len() - 1
    }
}

/// Line `j`, sample `i` of a patch for the given orientation.
struct LineView<'a> {
    patch: &'a Patch,
    rows: bool,
}

impl<'a> LineView<'a> {
    fn new(patch: &'a Patch, orientation: Orientation) -> Self {
        LineView {
            patch,
            rows: orientation == Orientation::Vertical,
        }
    }

    fn lines(&self) -> usize {
        if self.rows {
            self.patch.height
        } else {
            self.patch.width
        }
    }

    fn samples(&self) -> usize {
        if self.rows {
            self.patch.width
        } else {
            self.patch.height
        }
    }

    #[inline]
    fn at(&self, line: usize, sample: usize) -> f64 {
        if self.rows {
            self.patch.get(sample, line)
        } else {
            self.patch.get(line, sample)
        }
    }

    fn derivative(&self, line: usize) -> Vec<f64> {
        let n = self.samples();
        let mut d = vec![0.0; n];
        for i in 1..n - 1 {
            d[i] = 0.5 * (self.at(line, i + 1) - self.at(line, i - 1));
        }
        d
    }
}

fn hamming(x: f64, center: f64, half_width: f64) -> f64 {
    let u = (x - center) / half_width;
    if u.abs() > 1.0 {
        0.0
    } else {
        0.54 + 0.46 * (std::f64::consts::PI * u).cos()
    }
}

fn polyfit(t: &[f64], y: &[f64], order: usize) -> Option<Vec<f64>> {
    let v = DMatrix::from_fn(t.len(), order + 1, |r, c| t[r].powi(c as i32));
    let b = DVector::from_column_slice(y);
    let svd = v.svd(true, true);
    svd.solve(&b, 1e-12).ok().map(|s| s.iter().copied().collect())
}

/// Fits the edge crossing of every line with a polynomial of `order`.
pub fn fit_edge(patch: &Patch, orientation: Orientation, order: usize) -> Result<EdgeFit> {
    let view = LineView::new(patch, orientation);
    let (lines, samples) = (view.lines(), view.samples());
    if samples < 3 || lines < order + 2 {
        return Err(Error::Dimensions(format!(
            "patch {}x{} too small for an order-{order} edge fit",
            patch.width, patch.height
        )));
    }
    let derivs: Vec<Vec<f64>> = (0..lines).map(|j| view.derivative(j)).collect();
    let total: f64 = derivs.iter().flatten().sum();
    if total.abs() < 1e-9 {
        return Err(Error::NoEdgeEnergy);
    }
    let polarity = total.signum();

    let centroid = |d: &[f64], weight: &dyn Fn(f64) -> f64| -> Option<f64> {
        let (mut num, mut den) = (0.0, 0.0);
        for (i, v) in d.iter().enumerate() {
            let wv = polarity * v * weight(i as f64);
            num += wv * i as f64;
            den += wv;
        }
        (den > 1e-9).then(|| num / den)
    };

    let center = (lines as f64 - 1.0) / 2.0;
    let half_span = center.max(1.0);
    let fit_pass = |positions: &[(usize, f64)]| -> Option<(Vec<f64>, f64)> {
        if positions.len() < order + 2 {
            return None;
        }
        let t: Vec<f64> = positions.iter().map(|(j, _)| (*j as f64 - center) / half_span).collect();
        let y: Vec<f64> = positions.iter().map(|(_, p)| *p).collect();
        let coeffs = polyfit(&t, &y, order)?;
        let sse: f64 = t
            .iter()
            .zip(&y)
            .map(|(tv, yv)| {
                let p = coeffs.iter().rev().fold(0.0, |acc, c| acc * tv + c);
                (p - yv) * (p - yv)
            })
            .sum();
        Some((coeffs, (sse / t.len() as f64).sqrt()))
    };

    let first: Vec<(usize, f64)> = derivs
        .iter()
        .enumerate()
        .filter_map(|(j, d)| centroid(d, &|_| 1.0).map(|c| (j, c)))
        .collect();
    let (coeffs, _) = fit_pass(&first).ok_or(Error::NoEdgeEnergy)?;

    // second pass: centroids under a Hamming window centered on the first fit
    let win = (samples as f64 / 2.0).max(2.0);
    let second: Vec<(usize, f64)> = derivs
        .iter()
        .enumerate()
        .filter_map(|(j, d)| {
            let t = (j as f64 - center) / half_span;
            let p = coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c);
            centroid(d, &|x| hamming(x, p, win)).map(|c| (j, c))
        })
        .collect();
    let (coefficients, rmse) = fit_pass(&second).ok_or(Error::NoEdgeEnergy)?;
    if rmse > MAX_FIT_RMSE {
        return Err(Error::EdgeIncoherent { rmse });
    }
    let mean_angle_deg = (coefficients.get(1).copied().unwrap_or(0.0) / half_span)
        .atan()
        .to_degrees();
    Ok(EdgeFit {
        coefficients,
        mean_angle_deg,
        rmse,
        orientation,
        polarity,
        lines,
        samples,
        center,
        half_span,
    })
}

/// Supersampled edge spread function.
#[derive(Clone, Debug, PartialEq)]
pub struct Esf {
    pub values: Vec<f64>,
    /// Signed distance (pixels) of each bin center from the fitted edge.
    pub positions: Vec<f64>,
    pub bin_width: f64,
}

impl Esf {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Projects every pixel onto the local normal of the fitted edge and bins the
/// values at 1/4 pixel.
pub fn project_esf(patch: &Patch, fit: &EdgeFit) -> Result<Esf> {
    let view = LineView::new(patch, fit.orientation);
    let (lines, samples) = (view.lines(), view.samples());
    let mut reach = f64::INFINITY;
    let mut geometry = Vec::with_capacity(lines);
    for j in 0..lines {
        let xe = fit.position(j as f64);
        let s = fit.slope(j as f64);
        let cos = 1.0 / (1.0 + s * s).sqrt();
        let left = xe * cos;
        let right = (samples as f64 - 1.0 - xe) * cos;
        reach = reach.min(left.min(right));
        geometry.push((xe, cos));
    }
    if !(reach > 0.0) {
        return Err(Error::PhaseCoverage { empty_fraction: 1.0 });
    }
    let half_bins = (reach * SUPERSAMPLING as f64).floor() as usize;
    let n = 2 * half_bins;
    let origin = half_bins as f64 * BIN_WIDTH;
    let mut sum = vec![0.0; n];
    let mut count = vec![0usize; n];
    for (j, &(xe, cos)) in geometry.iter().enumerate() {
        for i in 0..samples {
            let d = (i as f64 - xe) * cos * fit.polarity;
            let k = ((d + origin) / BIN_WIDTH).floor();
            if k < 0.0 || k >= n as f64 {
                continue;
            }
            sum[k as usize] += view.at(j, i);
            count[k as usize] += 1;
        }
    }
    let lo = n / 10;
    let hi = n - n / 10;
    let central = hi.saturating_sub(lo).max(1);
    let empty = (lo..hi).filter(|&k| count[k] == 0).count();
    let empty_fraction = empty as f64 / central as f64;
    if empty_fraction > MAX_EMPTY_FRACTION || count.iter().all(|&c| c == 0) {
        return Err(Error::PhaseCoverage { empty_fraction });
    }
    let mut values: Vec<Option<f64>> = sum
        .iter()
        .zip(&count)
        .map(|(s, &c)| (c > 0).then(|| s / c as f64))
        .collect();
    fill_gaps(&mut values);
    Ok(Esf {
        values: values.into_iter().map(|v| v.unwrap_or(0.0)).collect(),
        positions: (0..n).map(|k| (k as f64 + 0.5) * BIN_WIDTH - origin).collect(),
        bin_width: BIN_WIDTH,
    })
}

/// Linear interpolation across interior gaps; leading and trailing gaps copy
/// the nearest filled bin.
fn fill_gaps(values: &mut [Option<f64>]) {
    let filled: Vec<usize> = (0..values.len()).filter(|&k| values[k].is_some()).collect();
    let Some(&first) = filled.first() else { return };
    let last = *filled.last().unwrap();
    let (head, tail) = (values[first], values[last]);
    for v in values[..first].iter_mut() {
        *v = head;
    }
    for v in values[last + 1..].iter_mut() {
        *v = tail;
    }
    for pair in filled.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if b - a > 1 {
            let (va, vb) = (values[a].unwrap(), values[b].unwrap());
            for k in a + 1..b {
                let u = (k - a) as f64 / (b - a) as f64;
                values[k] = Some(va + u * (vb - va));
            }
        }
    }
}

/// A sampled spatial frequency response on a uniform grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SfrCurve {
    pub frequencies: Vec<f64>,
    pub values: Vec<f64>,
    pub mtf50: Option<f64>,
}

/// Uniform frequency grid over `[0, MAX_FREQUENCY]`.
pub fn frequency_grid(step: f64) -> Vec<f64> {
    let n = (MAX_FREQUENCY / step).round() as usize;
    (0..=n).map(|k| k as f64 * MAX_FREQUENCY / n as f64).collect()
}

impl SfrCurve {
    /// Builds a curve from samples, normalizing nothing but checking shape.
    pub fn new(frequencies: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if frequencies.len() != values.len() || frequencies.len() < 2 {
            return Err(Error::Dimensions("frequency/value length mismatch".into()));
        }
        if !frequencies.windows(2).all(|w| w[1] > w[0]) {
            return Err(Error::Dimensions("frequencies must be strictly increasing".into()));
        }
        let mut c = SfrCurve {
            frequencies,
            values,
            mtf50: None,
        };
        c.mtf50 = mtf50(&c);
        Ok(c)
    }

    /// Curve on the default 0.01 cy/px grid from a closure.
    pub fn from_fn(f: impl Fn(f64) -> f64) -> Self {
        let frequencies = frequency_grid(GRID_STEP);
        let values = frequencies.iter().map(|&x| f(x)).collect();
        SfrCurve::new(frequencies, values).expect("grid is valid")
    }

    pub fn value_at(&self, f: f64) -> Option<f64> {
        let k = self.frequencies.iter().position(|&x| x >= f)?;
        if k == 0 || self.frequencies[k] == f {
            return Some(self.values[k]);
        }
        let (f0, f1) = (self.frequencies[k - 1], self.frequencies[k]);
        let u = (f - f0) / (f1 - f0);
        Some(self.values[k - 1] + u * (self.values[k] - self.values[k - 1]))
    }
}

/// LSF, Hamming window, Fourier magnitude and derivative correction on the
/// default grid. `window_half_width` is in pixels.
pub fn compute_sfr(esf: &Esf, window_half_width: f64) -> Result<SfrCurve> {
    compute_sfr_on_grid(esf, window_half_width, GRID_STEP)
}

pub fn compute_sfr_on_grid(esf: &Esf, window_half_width: f64, step: f64) -> Result<SfrCurve> {
    let n = esf.len();
    if n < MIN_ESF_BINS {
        return Err(Error::EsfTooShort { len: n });
    }
    let mut lsf = vec![0.0; n];
    for k in 1..n - 1 {
        lsf[k] = 0.5 * (esf.values[k + 1] - esf.values[k - 1]);
    }
    let area: f64 = lsf.iter().sum();
    if area.abs() < 1e-12 {
        return Err(Error::NoEdgeEnergy);
    }
    let centroid = lsf.iter().zip(&esf.positions).map(|(l, x)| l * x).sum::<f64>() / area;
    let windowed: Vec<f64> = lsf
        .iter()
        .zip(&esf.positions)
        .map(|(l, &x)| l * hamming(x, centroid, window_half_width))
        .collect();
    let dc = windowed.iter().sum::<f64>().abs();
    if dc < 1e-12 {
        return Err(Error::NoEdgeEnergy);
    }
    let frequencies = frequency_grid(step);
    let nyquist_ss = 0.5 * SUPERSAMPLING as f64;
    let values: Vec<f64> = frequencies
        .iter()
        .enumerate()
        .map(|(k, &f)| {
            if k == 0 {
                return 1.0;
            }
            // DTFT of the windowed LSF at the exact grid frequency, phase
            // referenced to the centroid
            let (mut re, mut im) = (0.0, 0.0);
            let omega = -2.0 * std::f64::consts::PI * f;
            for (l, &x) in windowed.iter().zip(&esf.positions) {
                let (s, c) = (omega * (x - centroid)).sin_cos();
                re += l * c;
                im += l * s;
            }
            let magnitude = re.hypot(im) / dc;
            // undo the central difference and the averaging of samples
            // into bins of width `bin_width`
            magnitude / (sinc(f / nyquist_ss) * sinc(f * esf.bin_width))
        })
        .collect();
    SfrCurve::new(frequencies, values)
}

/// Normalized sinc, `sin(pi x) / (pi x)`.
pub fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let px = std::f64::consts::PI * x;
        px.sin() / px
    }
}

/// First downward crossing of 0.5, linearly interpolated between grid points.
pub fn mtf50(curve: &SfrCurve) -> Option<f64> {
    let v = &curve.values;
    let f = &curve.frequencies;
    for k in 1..v.len() {
        if v[k - 1] >= 0.5 && v[k] < 0.5 {
            let u = (v[k - 1] - 0.5) / (v[k - 1] - v[k]);
            return Some(f[k - 1] + u * (f[k] - f[k - 1]));
        }
    }
    None
}

/// Full measurement of one candidate: fit, project and transform.
pub fn measure_candidate(candidate: &RoiCandidate, params: &NsSfrParams) -> Result<SfrCurve> {
    measure_patch(&candidate.patch, candidate.orientation, params)
}

pub fn measure_patch(patch: &Patch, orientation: Orientation, params: &NsSfrParams) -> Result<SfrCurve> {
    let fit = fit_edge(patch, orientation, params.edge_fit_order)?;
    let esf = project_esf(patch, &fit)?;
    compute_sfr(&esf, params.window_half_width())
}
