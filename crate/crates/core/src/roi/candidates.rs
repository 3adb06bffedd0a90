use crate::error::{Error, Result};
use crate::ingest::Frame;
use crate::mask::ValidityMap;

use super::canny::{EdgeMap, Gradients};
use super::{angle_excluded, NsSfrParams, Orientation, Patch, Rect, RoiCandidate};

/// Maximum perpendicular chord deviation of a straight run, pixels.
const MAX_CHORD_DEVIATION: f64 = 1.0;
/// ROI side along the edge: preferred and minimum number of lines.
const ROI_LINES_MAX: usize = 64;
const ROI_LINES_MIN: usize = 32;
/// Flat tails are the outer 20% of the across-edge span on each side.
const TAIL_START: f64 = 0.6;
/// Pixels of the run's own chain this close to its line are not conflicts.
const OWN_LINE_TOLERANCE: f64 = 2.0;

/// Why runs were turned down, for diagnostics.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Rejections {
    pub short: usize,
    pub angle: usize,
    pub outside: usize,
    pub invalid_pixels: usize,
    pub contrast: usize,
    pub noise: usize,
    pub crowded: usize,
}

#[derive(Clone, Debug, Default)]
pub struct Extraction {
    pub candidates: Vec<RoiCandidate>,
    pub runs: usize,
    pub rejections: Rejections,
}

const NEIGHBORS: [(isize, isize); 8] = [(1, 0), (0, 1), (-1, 0), (0, -1), (1, 1), (-1, 1), (-1, -1), (1, -1)];

fn neighbor(edges: &EdgeMap, p: usize, d: (isize, isize)) -> Option<usize> {
    let (x, y) = ((p % edges.width) as isize + d.0, (p / edges.width) as isize + d.1);
    if x < 0 || y < 0 || x >= edges.width as isize || y >= edges.height as isize {
        return None;
    }
    let q = y as usize * edges.width + x as usize;
    edges.edges[q].then_some(q)
}

fn walk(edges: &EdgeMap, visited: &mut [bool], start: usize) -> Vec<usize> {
    let mut path = Vec::new();
    let mut cur = start;
    loop {
        let next = NEIGHBORS
            .iter()
            .filter_map(|&d| neighbor(edges, cur, d))
            .find(|&q| !visited[q]);
        match next {
            Some(q) => {
                visited[q] = true;
                path.push(q);
                cur = q;
            }
            None => break,
        }
    }
    path
}

/// Orders edge pixels into 8-connected chains. Endpoints seed first so open
/// curves are traced end to end; loops are picked up afterwards.
pub(crate) fn trace_chains(edges: &EdgeMap) -> Vec<Vec<usize>> {
    let n = edges.width * edges.height;
    let mut visited = vec![false; n];
    let mut chains = Vec::new();
    for pass in 0..2 {
        for p in 0..n {
            if !edges.edges[p] || visited[p] {
                continue;
            }
            if pass == 0 {
                let degree = NEIGHBORS
                    .iter()
                    .filter_map(|&d| neighbor(edges, p, d))
                    .filter(|&q| !visited[q])
                    .count();
                if degree > 1 {
                    continue;
                }
            }
            visited[p] = true;
            let fwd = walk(edges, &mut visited, p);
            let back = walk(edges, &mut visited, p);
            let mut chain: Vec<usize> = back.into_iter().rev().collect();
            chain.push(p);
            chain.extend(fwd);
            chains.push(chain);
        }
    }
    chains
}

fn center(p: usize, w: usize) -> (f64, f64) {
    ((p % w) as f64 + 0.5, (p / w) as f64 + 0.5)
}

/// Splits a chain into runs whose pixels stay within one pixel of the chord.
pub(crate) fn split_runs(chain: &[usize], w: usize, out: &mut Vec<(usize, usize)>, offset: usize) {
    if chain.len() < 3 {
        out.push((offset, offset + chain.len()));
        return;
    }
    let a = center(chain[0], w);
    let b = center(chain[chain.len() - 1], w);
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len = dx.hypot(dy);
    let (mut worst, mut at) = (0.0, 0);
    for (i, &p) in chain.iter().enumerate() {
        let c = center(p, w);
        let dev = if len > 0.0 {
            ((c.0 - a.0) * dy - (c.1 - a.1) * dx).abs() / len
        } else {
            (c.0 - a.0).hypot(c.1 - a.1)
        };
        if dev > worst {
            worst = dev;
            at = i;
        }
    }
    if worst <= MAX_CHORD_DEVIATION {
        out.push((offset, offset + chain.len()));
        return;
    }
    let at = at.clamp(1, chain.len() - 2);
    split_runs(&chain[..=at], w, out, offset);
    split_runs(&chain[at..], w, out, offset + at);
}

struct RunLine {
    center: (f64, f64),
    normal: (f64, f64),
    along_min: f64,
    along_max: f64,
}

/// Total-least-squares line through the run, normal oriented dark→light.
fn fit_run(run: &[usize], w: usize, grad: &Gradients) -> Option<RunLine> {
    let n = run.len() as f64;
    let (mut mx, mut my) = (0.0, 0.0);
    for &p in run {
        let c = center(p, w);
        mx += c.0;
        my += c.1;
    }
    mx /= n;
    my /= n;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    let (mut gx, mut gy) = (0.0, 0.0);
    for &p in run {
        let c = center(p, w);
        sxx += (c.0 - mx) * (c.0 - mx);
        syy += (c.1 - my) * (c.1 - my);
        sxy += (c.0 - mx) * (c.1 - my);
        gx += grad.gx[p];
        gy += grad.gy[p];
    }
    // principal axis of the scatter is the line direction
    let theta = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    let dir = (theta.cos(), theta.sin());
    let mut normal = (-dir.1, dir.0);
    let gdot = normal.0 * gx + normal.1 * gy;
    if gdot.abs() <= 1e-12 {
        return None;
    }
    if gdot < 0.0 {
        normal = (-normal.0, -normal.1);
    }
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &p in run {
        let c = center(p, w);
        let t = (c.0 - mx) * dir.0 + (c.1 - my) * dir.1;
        lo = lo.min(t);
        hi = hi.max(t);
    }
    Some(RunLine {
        center: (mx, my),
        normal,
        along_min: lo,
        along_max: hi,
    })
}

/// A run that met every selection rule except, possibly, crowding.
struct Passing {
    chain: usize,
    run: (usize, usize),
    bbox: Rect,
    mid: (f64, f64),
    normal: (f64, f64),
    angle: f64,
    contrast: f64,
    orientation: Orientation,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Finds slanted-edge ROIs. `offset` is added to every reported location so
/// that candidates found on a cropped frame are expressed in original
/// coordinates.
pub fn extract_candidates(
    frame: &Frame,
    edges: &EdgeMap,
    params: &NsSfrParams,
    vmap: &ValidityMap,
) -> Result<Vec<RoiCandidate>> {
    let grad = Gradients::compute(frame);
    Ok(extract_candidates_with(frame, &grad, edges, params, vmap, (0, 0))?.candidates)
}

pub fn extract_candidates_with(
    frame: &Frame,
    grad: &Gradients,
    edges: &EdgeMap,
    params: &NsSfrParams,
    vmap: &ValidityMap,
    offset: (usize, usize),
) -> Result<Extraction> {
    params.validate()?;
    let (w, h) = (frame.width(), frame.height());
    if edges.width != w || edges.height != h || vmap.width() != w || vmap.height() != h || grad.width != w {
        return Err(Error::Dimensions(format!(
            "frame {w}x{h}, edges {}x{}, validity {}x{}",
            edges.width,
            edges.height,
            vmap.width(),
            vmap.height()
        )));
    }
    let chains = trace_chains(edges);
    let hw = params.half_width() as f64;
    let min_lines = ROI_LINES_MIN.max(4 * params.esfw);
    let mut out = Extraction::default();
    let mut rej = Rejections::default();
    let mut passing = Vec::new();

    for (ci, chain) in chains.iter().enumerate() {
        let mut runs = Vec::new();
        split_runs(chain, w, &mut runs, 0);
        for (start, end) in runs {
            out.runs += 1;
            let run = &chain[start..end];
            if run.len() < min_lines / 2 {
                rej.short += 1;
                continue;
            }
            let Some(line) = fit_run(run, w, grad) else {
                rej.contrast += 1;
                continue;
            };
            let (nx, ny) = line.normal;
            let angle = ny.atan2(nx).to_degrees().rem_euclid(360.0);
            let orientation = Orientation::of_angle(angle);
            // lines run along y for vertical edges, along x for horizontal ones
            let vertical = orientation == Orientation::Vertical;
            let (n_across, n_along) = if vertical { (nx, ny) } else { (ny, nx) };
            let dir_axis = n_across.abs(); // |component of the line direction along the line axis|
            let extent = (line.along_max - line.along_min) * dir_axis;
            let lines = ((extent.floor() as usize) + 1).min(ROI_LINES_MAX);
            if lines < min_lines {
                rej.short += 1;
                continue;
            }
            if angle_excluded(angle, params.angle_exclusion_deg) {
                rej.angle += 1;
                continue;
            }
            let mid_t = 0.5 * (line.along_min + line.along_max);
            let dir = (-ny, nx);
            let mid = (line.center.0 + dir.0 * mid_t, line.center.1 + dir.1 * mid_t);
            let (mid_across, mid_along) = if vertical { (mid.0, mid.1) } else { (mid.1, mid.0) };
            let first = (mid_along - lines as f64 / 2.0).round();
            if first < 0.0 {
                rej.outside += 1;
                continue;
            }
            let first = first as usize;
            // crossing of the edge line with each line center
            let crossing = |k: usize| {
                let along = (first + k) as f64 + 0.5;
                mid_across - (along - mid_along) * n_along / n_across
            };
            let (c0, c1) = (crossing(0), crossing(lines - 1));
            let reach = (hw / n_across.abs()).ceil() + 1.0;
            let lo = (c0.min(c1) - reach).floor();
            let hi = (c0.max(c1) + reach).ceil();
            let (len_across, len_along) = if vertical { (w, h) } else { (h, w) };
            if lo < 0.0 || hi > len_across as f64 || first + lines > len_along {
                rej.outside += 1;
                continue;
            }
            let bbox = if vertical {
                Rect { x: lo as usize, y: first, w: (hi - lo) as usize, h: lines }
            } else {
                Rect { x: first, y: lo as usize, w: lines, h: (hi - lo) as usize }
            };
            if !vmap.rect_valid(bbox.x, bbox.y, bbox.w, bbox.h) {
                rej.invalid_pixels += 1;
                continue;
            }

            let mut dark = Vec::new();
            let mut light = Vec::new();
            for y in bbox.y..bbox.y + bbox.h {
                for x in bbox.x..bbox.x + bbox.w {
                    let d = (x as f64 + 0.5 - mid.0) * nx + (y as f64 + 0.5 - mid.1) * ny;
                    if d.abs() > hw {
                        continue;
                    }
                    if d <= -TAIL_START * hw {
                        dark.push(frame.get(x, y));
                    } else if d >= TAIL_START * hw {
                        light.push(frame.get(x, y));
                    }
                }
            }
            if dark.is_empty() || light.is_empty() {
                rej.contrast += 1;
                continue;
            }
            let (lo_mean, lo_std) = mean_std(&dark);
            let (hi_mean, hi_std) = mean_std(&light);
            let contrast = hi_mean - lo_mean;
            if !(params.contrast_min..=params.contrast_max).contains(&contrast) {
                rej.contrast += 1;
                continue;
            }
            if lo_std > params.st || hi_std > params.st {
                rej.noise += 1;
                continue;
            }

            passing.push(Passing {
                chain: ci,
                run: (start, end),
                bbox,
                mid,
                normal: (nx, ny),
                angle,
                contrast,
                orientation,
            });
        }
    }

    // an edge pixel of another passing run near the ROI means the two ESFs
    // would overlap; pixels of the same chain lying on this run's own line
    // do not count
    let mut owner = vec![usize::MAX; w * h];
    for (k, c) in passing.iter().enumerate() {
        for &p in &chains[c.chain][c.run.0..c.run.1] {
            owner[p] = k;
        }
    }
    let m = params.esfw;
    for (k, c) in passing.iter().enumerate() {
        let b = c.bbox;
        let (sx0, sy0) = (b.x.saturating_sub(m), b.y.saturating_sub(m));
        let (sx1, sy1) = ((b.x + b.w + m).min(w), (b.y + b.h + m).min(h));
        let crowded = (sy0..sy1).any(|y| {
            (sx0..sx1).any(|x| {
                let o = owner[y * w + x];
                if o == usize::MAX || o == k {
                    return false;
                }
                if passing[o].chain == c.chain {
                    let d = (x as f64 + 0.5 - c.mid.0) * c.normal.0 + (y as f64 + 0.5 - c.mid.1) * c.normal.1;
                    return d.abs() > OWN_LINE_TOLERANCE;
                }
                true
            })
        });
        if crowded {
            rej.crowded += 1;
            continue;
        }
        let patch = Patch {
            width: b.w,
            height: b.h,
            data: frame.window(b.x, b.y, b.w, b.h),
        };
        let roi_index = out.candidates.len();
        out.candidates.push(RoiCandidate {
            frame_id: frame.id().to_string(),
            roi_index,
            bbox: Rect {
                x: b.x + offset.0,
                y: b.y + offset.1,
                ..b
            },
            centroid: (c.mid.0 + offset.0 as f64, c.mid.1 + offset.1 as f64),
            edge_angle_deg: c.angle,
            contrast: c.contrast,
            orientation: c.orientation,
            patch,
        });
    }
    out.rejections = rej;
    Ok(out)
}
