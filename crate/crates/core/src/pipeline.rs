//! End-to-end analysis of a dataset: ingest, detect, measure, triage,
//! aggregate.

use std::path::PathBuf;

use log::{info, warn};
use rayon::prelude::*;

use crate::aggregate::{accumulate, sufficiency_check, Measurement, SegmentStats};
use crate::config::AnalyzeConfig;
use crate::error::{Error, Result};
use crate::ingest::{Dataset, Frame, Skipped, MIN_FRAME_SIDE};
use crate::mask::{dilate_exclusion, rasterize, RegionMask, ValidityMap};
use crate::radial::{classify_location, RadialSegmentation};
use crate::roi::{detect_edges_with, extract_candidates_with, Gradients, NsSfrParams, Rejections};
use crate::sfr::measure_candidate;
use crate::validate::{classify, Reason, Thresholds, Verdict};

/// Per-camera geometry, fixed by the first decodable frame.
#[derive(Clone, Debug)]
pub struct Geometry {
    pub width: usize,
    pub height: usize,
    pub mask: Option<RegionMask>,
    /// Natural-scene region before the exclusion margin.
    pub region: ValidityMap,
    /// Bounding box of `region`: `(x, y, w, h)`.
    pub crop: (usize, usize, usize, usize),
    /// Working validity within `crop`, margin applied.
    pub working: ValidityMap,
    pub segmentation: RadialSegmentation,
}

impl Geometry {
    pub fn new(
        width: usize,
        height: usize,
        mask: Option<&RegionMask>,
        margin: usize,
        segments: usize,
        ratios: Option<&[f64]>,
    ) -> Result<Self> {
        let region = match mask {
            Some(m) => rasterize(m, width, height)?,
            None => ValidityMap::full(width, height),
        };
        let segmentation = RadialSegmentation::build(&region, mask, segments, ratios)?;
        let crop = grow_to_min(region.bounding_box().ok_or(Error::EmptyValidity)?, width, height);
        let working = dilate_exclusion(&region, margin).crop(crop.0, crop.1, crop.2, crop.3);
        Ok(Geometry {
            width,
            height,
            mask: mask.cloned(),
            region,
            crop,
            working,
            segmentation,
        })
    }

    pub fn from_config(cfg: &AnalyzeConfig, mask: Option<&RegionMask>, width: usize, height: usize) -> Result<Self> {
        Geometry::new(width, height, mask, cfg.margin(), cfg.segments, cfg.segment_ratios.as_deref())
    }
}

/// Widens a crop rectangle so each side is at least the minimum frame size
/// (the frame permitting); the extra pixels stay invalid.
fn grow_to_min(rect: (usize, usize, usize, usize), width: usize, height: usize) -> (usize, usize, usize, usize) {
    let grow = |start: usize, len: usize, full: usize| {
        let want = MIN_FRAME_SIDE.min(full);
        if len >= want {
            return (start, len);
        }
        let start = (start + len / 2).saturating_sub(want / 2).min(full - want);
        (start, want)
    };
    let (x, w) = grow(rect.0, rect.2, width);
    let (y, h) = grow(rect.1, rect.3, height);
    (x, y, w, h)
}

/// Measurements and diagnostics for one frame.
#[derive(Clone, Debug, Default)]
pub struct FrameResult {
    pub frame_id: String,
    pub measurements: Vec<Measurement>,
    pub runs: usize,
    pub rejections: Rejections,
}

impl FrameResult {
    pub fn count_valid(&self) -> usize {
        self.measurements.iter().filter(|m| m.verdict.is_valid()).count()
    }
}

/// Finds, measures and triages every candidate in one frame.
pub fn analyze_frame(
    frame: &Frame,
    geom: &Geometry,
    params: &NsSfrParams,
    thresholds: &Thresholds,
) -> Result<FrameResult> {
    if (frame.width(), frame.height()) != (geom.width, geom.height) {
        return Err(Error::Dimensions(format!(
            "frame {} is {}x{}, expected {}x{}",
            frame.id(),
            frame.width(),
            frame.height(),
            geom.width,
            geom.height
        )));
    }
    let (cx, cy, cw, ch) = geom.crop;
    let cropped;
    let view = if (cx, cy, cw, ch) == (0, 0, frame.width(), frame.height()) {
        frame
    } else {
        cropped = Frame::new(frame.id(), cw, ch, frame.window(cx, cy, cw, ch), frame.bit_depth())?;
        &cropped
    };
    let grad = Gradients::compute(view);
    let edges = detect_edges_with(&grad, &geom.working)?;
    let extraction = extract_candidates_with(view, &grad, &edges, params, &geom.working, (cx, cy))?;
    let measurements = extraction
        .candidates
        .iter()
        .map(|c| {
            let segment = classify_location(c.centroid, &geom.segmentation).ok();
            match measure_candidate(c, params) {
                Ok(curve) => {
                    let verdict = classify(&curve, thresholds);
                    Measurement::new(c, segment, Some(curve), verdict)
                }
                Err(e) => Measurement::new(c, segment, None, Verdict::failed(Reason::from_measurement_error(&e))),
            }
        })
        .collect();
    Ok(FrameResult {
        frame_id: frame.id().to_string(),
        measurements,
        runs: extraction.runs,
        rejections: extraction.rejections,
    })
}

/// Outcome of a dataset run, ready for reporting.
#[derive(Clone, Debug)]
pub struct Analysis {
    pub config: AnalyzeConfig,
    pub geometry: Geometry,
    /// Frame ids and paths in processing order.
    pub frames: Vec<(String, PathBuf)>,
    pub frame_results: Vec<FrameResult>,
    pub skipped: Vec<Skipped>,
    pub measurements: Vec<Measurement>,
    pub stats: Vec<SegmentStats>,
    pub warnings: Vec<String>,
}

impl Analysis {
    pub fn frames_processed(&self) -> usize {
        self.frame_results.len()
    }

    pub fn count_valid(&self) -> usize {
        self.measurements.iter().filter(|m| m.verdict.is_valid()).count()
    }

    /// Statistics for the orientations the configuration selects.
    pub fn selected_stats(&self) -> impl Iterator<Item = &SegmentStats> {
        let sel = self.config.orientation;
        self.stats.iter().filter(move |s| sel.includes(s.orientation))
    }
}

fn pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {threads} worker threads: {e}")))
}

/// Runs the whole analysis without writing anything.
pub fn analyze(cfg: &AnalyzeConfig) -> Result<Analysis> {
    cfg.validate()?;
    let mask = cfg.mask.as_deref().map(RegionMask::load).transpose()?;
    let mut dataset = Dataset::open(&cfg.input, &cfg.glob)?;
    if let Some(n) = cfg.limit {
        dataset.truncate(n);
    }
    info!("{} frames under {}", dataset.len(), dataset.root().display());

    let mut skipped = Vec::new();
    for i in 0..dataset.len() {
        match dataset.decode(i) {
            Ok(f) => {
                let geometry = Geometry::from_config(cfg, mask.as_ref(), f.width(), f.height())?;
                return finish(cfg, dataset, geometry, i, skipped);
            }
            Err(e) => {
                warn!("skipping {}: {e}", dataset.entries()[i].0);
                skipped.push(Skipped {
                    id: dataset.entries()[i].0.clone(),
                    reason: e.to_string(),
                });
            }
        }
    }
    Err(Error::NoImages {
        root: cfg.input.clone(),
        pattern: cfg.glob.clone(),
    })
}

fn finish(
    cfg: &AnalyzeConfig,
    dataset: Dataset,
    geometry: Geometry,
    start: usize,
    mut skipped: Vec<Skipped>,
) -> Result<Analysis> {
    let entries = &dataset.entries()[start..];
    let outcomes: Vec<Result<FrameResult>> = pool(cfg.threads)?.install(|| {
        entries
            .par_iter()
            .enumerate()
            .map(|(k, _)| {
                let frame = dataset.decode(start + k)?;
                analyze_frame(&frame, &geometry, &cfg.params, &cfg.thresholds)
            })
            .collect()
    });

    let mut frame_results = Vec::new();
    let mut frames = Vec::new();
    for ((id, path), outcome) in entries.iter().zip(outcomes) {
        match outcome {
            Ok(r) => {
                frames.push((id.clone(), path.clone()));
                frame_results.push(r);
            }
            Err(e) => {
                warn!("skipping {id}: {e}");
                skipped.push(Skipped {
                    id: id.clone(),
                    reason: e.to_string(),
                });
            }
        }
    }
    skipped.sort_by(|a, b| a.id.cmp(&b.id));

    let measurements: Vec<Measurement> = frame_results.iter().flat_map(|r| r.measurements.iter().cloned()).collect();
    let stats = accumulate(&measurements, geometry.segmentation.n_segments());
    let mut warnings = Vec::new();
    for s in stats.iter().filter(|s| cfg.orientation.includes(s.orientation)) {
        if let Some(w) = sufficiency_check(s) {
            warn!("{}", w.message);
            warnings.push(w.message);
        }
    }
    if !skipped.is_empty() {
        warnings.push(format!("{} frames skipped", skipped.len()));
    }
    if measurements.is_empty() {
        warnings.push("no slanted-edge candidates found".into());
    }
    info!(
        "{} frames, {} candidates, {} valid",
        frame_results.len(),
        measurements.len(),
        measurements.iter().filter(|m| m.verdict.is_valid()).count()
    );
    Ok(Analysis {
        config: cfg.clone(),
        geometry,
        frames,
        frame_results,
        skipped,
        measurements,
        stats,
        warnings,
    })
}
