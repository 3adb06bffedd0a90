//! Output artifacts: measurement table, JSON summary and SVG figures.

mod csv;
mod summary;
pub mod svg;

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::pipeline::Analysis;

pub use self::csv::{format_number, write_measurements, CSV_HEADER};
pub use summary::{build_summary, Summary};

pub const MEASUREMENTS_FILE: &str = "measurements.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const SFR_FIGURE: &str = "sfr_by_segment.svg";
pub const LOCATIONS_FIGURE: &str = "edge_locations.svg";
pub const OVERLAY_DIR: &str = "overlays";

/// Paths of everything [`write_reports`] produced.
#[derive(Clone, Debug, Default)]
pub struct ReportFiles {
    pub measurements: PathBuf,
    pub summary: PathBuf,
    pub figures: Vec<PathBuf>,
}

pub(crate) fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Writes the table, summary and figures into `out`, creating it if needed.
pub fn write_reports(analysis: &Analysis, out: &Path) -> Result<ReportFiles> {
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let measurements = out.join(MEASUREMENTS_FILE);
    let file = std::fs::File::create(&measurements).map_err(|e| Error::io(&measurements, e))?;
    write_measurements(&analysis.measurements, file)?;

    let summary = out.join(SUMMARY_FILE);
    let json = serde_json::to_string_pretty(&build_summary(analysis))?;
    write_file(&summary, json + "\n")?;

    let mut figures = Vec::new();
    let path = out.join(SFR_FIGURE);
    write_file(&path, svg::sfr_figure(analysis))?;
    figures.push(path);
    let path = out.join(LOCATIONS_FIGURE);
    write_file(&path, svg::locations_figure(analysis))?;
    figures.push(path);

    let overlay_dir = out.join(OVERLAY_DIR);
    std::fs::create_dir_all(&overlay_dir).map_err(|e| Error::io(&overlay_dir, e))?;
    for (id, path) in svg::overlay_selection(analysis) {
        let frame = match crate::ingest::decode_frame(&path, id.clone()) {
            Ok(f) => f,
            Err(e) => {
                log::warn!("overlay for {id} skipped: {e}");
                continue;
            }
        };
        let ms: Vec<_> = analysis.measurements.iter().filter(|m| m.frame_id == id).collect();
        let target = overlay_dir.join(format!("{}.svg", svg::file_stem(&id)));
        write_file(&target, svg::overlay_figure(&frame, &ms))?;
        figures.push(target);
    }
    Ok(ReportFiles {
        measurements,
        summary,
        figures,
    })
}
