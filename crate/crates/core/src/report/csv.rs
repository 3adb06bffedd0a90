use std::io::Write;

use crate::aggregate::Measurement;
use crate::error::Result;

pub const CSV_HEADER: [&str; 15] = [
    "frame_id",
    "roi_index",
    "x",
    "y",
    "w",
    "h",
    "centroid_x",
    "centroid_y",
    "edge_angle_deg",
    "orientation",
    "contrast",
    "segment",
    "status",
    "reason",
    "mtf50",
];

/// Six significant digits, trailing zeros dropped; NaN becomes empty.
pub fn format_number(v: f64) -> String {
    if !v.is_finite() {
        return String::new();
    }
    if v == 0.0 {
        return "0".into();
    }
    let magnitude = v.abs().log10().floor() as i32;
    let decimals = (5 - magnitude).max(0) as usize;
    let mut s = format!("{v:.decimals$}");
    if s.contains('.') {
        s = s.trim_end_matches('0').trim_end_matches('.').to_string();
    }
    if s == "-0" {
        s = "0".into();
    }
    s
}

/// One row per candidate, sorted by frame id then ROI index.
pub fn write_measurements<W: Write>(measurements: &[Measurement], out: W) -> Result<()> {
    let mut rows: Vec<&Measurement> = measurements.iter().collect();
    rows.sort_by(|a, b| (&a.frame_id, a.roi_index).cmp(&(&b.frame_id, b.roi_index)));
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for m in rows {
        w.write_record([
            m.frame_id.clone(),
            m.roi_index.to_string(),
            m.bbox.x.to_string(),
            m.bbox.y.to_string(),
            m.bbox.w.to_string(),
            m.bbox.h.to_string(),
            format_number(m.centroid.0),
            format_number(m.centroid.1),
            format_number(m.edge_angle_deg),
            m.orientation.to_string(),
            format_number(m.contrast),
            m.segment.map(|s| s.to_string()).unwrap_or_default(),
            m.verdict.status.as_str().to_string(),
            m.verdict.reason.as_str().to_string(),
            m.mtf50().map(format_number).unwrap_or_default(),
        ])?;
    }
    w.flush().map_err(|e| crate::error::Error::Csv(e.into()))?;
    Ok(())
}
