//! Hand-built SVG figures.

use std::fmt::Write as _;
use std::io::Cursor;
use std::path::PathBuf;

use base64::Engine as _;
use image::{imageops, DynamicImage, GrayImage, ImageFormat};

use crate::aggregate::Measurement;
use crate::ingest::Frame;
use crate::mask::RegionMask;
use crate::pipeline::Analysis;
use crate::radial::RadialSegmentation;
use crate::roi::Orientation;
use crate::validate::local_extrema;
use crate::sfr::SfrCurve;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#2ca02c", "#9467bd", "#8c564b", "#17becf", "#bcbd22", "#7f7f7f", "#e377c2",
];
const MAX_CANVAS: f64 = 800.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn header(w: f64, h: f64) -> String {
    format!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w:.0}\" height=\"{h:.0}\" viewBox=\"0 0 {w:.0} {h:.0}\" font-family=\"sans-serif\" font-size=\"12\">\n"
    )
}

/// Safe file name for a frame id.
pub fn file_stem(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '.' { c } else { '_' })
        .collect()
}

/// Downscaled grayscale PNG of a frame as a data URI.
fn embed_frame(frame: &Frame, w: u32, h: u32) -> String {
    let bytes: Vec<u8> = frame.luminance().iter().map(|v| (v * 255.0).round() as u8).collect();
    let img = GrayImage::from_raw(frame.width() as u32, frame.height() as u32, bytes).expect("buffer matches frame");
    let img = if (w as usize, h as usize) == (frame.width(), frame.height()) {
        img
    } else {
        imageops::resize(&img, w.max(1), h.max(1), imageops::FilterType::Triangle)
    };
    let mut png = Vec::new();
    DynamicImage::ImageLuma8(img)
        .write_to(&mut Cursor::new(&mut png), ImageFormat::Png)
        .expect("in-memory PNG encoding");
    format!("data:image/png;base64,{}", base64::engine::general_purpose::STANDARD.encode(png))
}

fn canvas_scale(width: usize, height: usize) -> f64 {
    (MAX_CANVAS / width.max(height) as f64).min(1.0)
}

/// Frames drawn as overlays: the first few in processing order plus the ones
/// with the most valid edges.
pub fn overlay_selection(a: &Analysis) -> Vec<(String, PathBuf)> {
    let n = a.config.overlay_frames;
    let mut picked: Vec<usize> = (0..a.frames.len().min(n)).collect();
    let mut ranked: Vec<usize> = (0..a.frame_results.len()).collect();
    ranked.sort_by(|&i, &j| a.frame_results[j].count_valid().cmp(&a.frame_results[i].count_valid()).then(i.cmp(&j)));
    for i in ranked.into_iter().filter(|&i| a.frame_results[i].count_valid() > 0).take(n) {
        if !picked.contains(&i) {
            picked.push(i);
        }
    }
    picked.into_iter().map(|i| a.frames[i].clone()).collect()
}

/// Frame with the detected ROIs: green for valid, red for invalid.
pub fn overlay_figure(frame: &Frame, measurements: &[&Measurement]) -> String {
    let s = canvas_scale(frame.width(), frame.height());
    let (w, h) = ((frame.width() as f64 * s).round(), (frame.height() as f64 * s).round());
    let mut out = header(w, h);
    let _ = writeln!(out, "<title>{}</title>", escape(frame.id()));
    let _ = writeln!(
        out,
        "<image x=\"0\" y=\"0\" width=\"{w:.0}\" height=\"{h:.0}\" href=\"{}\"/>",
        embed_frame(frame, w as u32, h as u32)
    );
    for m in measurements {
        let color = if m.verdict.is_valid() { "#00c000" } else { "#e00000" };
        let _ = writeln!(
            out,
            "<rect x=\"{:.1}\" y=\"{:.1}\" width=\"{:.1}\" height=\"{:.1}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"><title>roi {} {} {}</title></rect>",
            m.bbox.x as f64 * s,
            m.bbox.y as f64 * s,
            m.bbox.w as f64 * s,
            m.bbox.h as f64 * s,
            m.roi_index,
            m.verdict.status.as_str(),
            m.verdict.reason.as_str()
        );
    }
    out.push_str("</svg>\n");
    out
}

fn draw_geometry(out: &mut String, seg: &RadialSegmentation, mask: Option<&RegionMask>, width: usize, height: usize, s: f64) {
    if let Some(m) = mask {
        if let Ok(polys) = m.scaled_to(width, height) {
            for p in polys {
                let pts: Vec<String> = p.iter().map(|v| format!("{:.1},{:.1}", v[0] * s, v[1] * s)).collect();
                let _ = writeln!(
                    out,
                    "<polygon points=\"{}\" fill=\"none\" stroke=\"#e00000\" stroke-width=\"1.5\"/>",
                    pts.join(" ")
                );
            }
        }
    }
    let (cx, cy) = (seg.center.0 * s, seg.center.1 * s);
    for (k, r) in seg.boundaries.iter().enumerate() {
        let color = if k + 1 == seg.boundaries.len() { "#ff8c00" } else { "#e6c200" };
        let _ = writeln!(
            out,
            "<circle cx=\"{cx:.1}\" cy=\"{cy:.1}\" r=\"{:.1}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>",
            r * s
        );
    }
    let _ = writeln!(
        out,
        "<path d=\"M{:.1},{cy:.1}H{:.1}M{cx:.1},{:.1}V{:.1}\" stroke=\"#000\" stroke-width=\"1\"/>",
        cx - 6.0,
        cx + 6.0,
        cy - 6.0,
        cy + 6.0
    );
}

/// Centroids of valid edges over the segmentation circles and mask outline.
pub fn locations_figure(a: &Analysis) -> String {
    let g = &a.geometry;
    let s = canvas_scale(g.width, g.height);
    let (w, h) = ((g.width as f64 * s).round(), (g.height as f64 * s).round());
    let mut out = header(w, h);
    out.push_str("<title>valid edge locations</title>\n");
    let _ = writeln!(out, "<rect x=\"0\" y=\"0\" width=\"{w:.0}\" height=\"{h:.0}\" fill=\"#f4f4f4\" stroke=\"#999\"/>");
    draw_geometry(&mut out, &g.segmentation, g.mask.as_ref(), g.width, g.height, s);
    let mut points: Vec<&Measurement> = a
        .measurements
        .iter()
        .filter(|m| m.verdict.is_valid() && a.config.orientation.includes(m.orientation))
        .collect();
    points.sort_by(|p, q| (&p.frame_id, p.roi_index).cmp(&(&q.frame_id, q.roi_index)));
    for m in &points {
        let color = PALETTE[m.segment.unwrap_or(0) % PALETTE.len()];
        let _ = writeln!(
            out,
            "<circle cx=\"{:.1}\" cy=\"{:.1}\" r=\"2.5\" fill=\"{color}\"/>",
            m.centroid.0 * s,
            m.centroid.1 * s
        );
    }
    if points.is_empty() {
        let _ = writeln!(out, "<text x=\"{:.0}\" y=\"20\" text-anchor=\"middle\">no data</text>", w / 2.0);
    }
    out.push_str("</svg>\n");
    out
}

const PLOT_W: f64 = 720.0;
const PLOT_H: f64 = 480.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 200.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 50.0;

/// Mean SFR per segment with MTF50 markers and local extrema.
pub fn sfr_figure(a: &Analysis) -> String {
    let curves: Vec<(String, Orientation, usize, SfrCurve, usize)> = a
        .selected_stats()
        .filter_map(|st| {
            let values = st.mean_curve.clone()?;
            let curve = SfrCurve {
                frequencies: st.frequencies.clone(),
                values,
                mtf50: st.mean_curve_mtf50,
            };
            Some((a.geometry.segmentation.segment_name(st.segment_index), st.orientation, st.segment_index, curve, st.count_valid))
        })
        .collect();
    let y_max = curves
        .iter()
        .flat_map(|c| c.3.values.iter().copied())
        .fold(1.2_f64, f64::max)
        .min(3.0)
        .ceil_to(0.2);
    let (pw, ph) = (PLOT_W - LEFT - RIGHT, PLOT_H - TOP - BOTTOM);
    let px = |f: f64| LEFT + f * pw;
    let py = |v: f64| TOP + (1.0 - v.clamp(0.0, y_max) / y_max) * ph;

    let mut out = header(PLOT_W, PLOT_H);
    out.push_str("<title>mean SFR by segment</title>\n");
    let _ = writeln!(out, "<rect x=\"{LEFT}\" y=\"{TOP}\" width=\"{pw}\" height=\"{ph}\" fill=\"none\" stroke=\"#000\"/>");
    for k in 0..=10 {
        let f = k as f64 / 10.0;
        let _ = writeln!(
            out,
            "<line x1=\"{x:.1}\" y1=\"{:.1}\" x2=\"{x:.1}\" y2=\"{:.1}\" stroke=\"#000\"/><text x=\"{x:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{f:.1}</text>",
            TOP + ph,
            TOP + ph + 5.0,
            TOP + ph + 18.0,
            x = px(f)
        );
    }
    let mut v = 0.0;
    while v <= y_max + 1e-9 {
        let _ = writeln!(
            out,
            "<line x1=\"{:.1}\" y1=\"{y:.1}\" x2=\"{LEFT}\" y2=\"{y:.1}\" stroke=\"#000\"/><text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{v:.1}</text>",
            LEFT - 5.0,
            LEFT - 8.0,
            py(v) + 4.0,
            y = py(v)
        );
        v += 0.2;
    }
    let _ = writeln!(
        out,
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">spatial frequency (cycles/pixel)</text>",
        LEFT + pw / 2.0,
        PLOT_H - 10.0
    );
    let _ = writeln!(
        out,
        "<text transform=\"translate(15,{:.1}) rotate(-90)\" text-anchor=\"middle\">SFR</text>",
        TOP + ph / 2.0
    );
    let _ = writeln!(
        out,
        "<line x1=\"{LEFT}\" y1=\"{y:.1}\" x2=\"{:.1}\" y2=\"{y:.1}\" stroke=\"#999\" stroke-dasharray=\"4 3\"/>",
        LEFT + pw,
        y = py(0.5)
    );

    for (k, (name, orientation, seg_index, curve, n)) in curves.iter().enumerate() {
        let color = PALETTE[seg_index % PALETTE.len()];
        let dash = if *orientation == Orientation::Vertical { " stroke-dasharray=\"6 3\"" } else { "" };
        let pts: Vec<String> = curve
            .frequencies
            .iter()
            .zip(&curve.values)
            .map(|(f, v)| format!("{:.1},{:.1}", px(*f), py(*v)))
            .collect();
        let _ = writeln!(
            out,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"2\"{dash}/>",
            pts.join(" ")
        );
        if let Some(m) = curve.mtf50 {
            let _ = writeln!(
                out,
                "<circle cx=\"{:.1}\" cy=\"{:.1}\" r=\"4\" fill=\"none\" stroke=\"{color}\" stroke-width=\"2\"/>",
                px(m),
                py(0.5)
            );
        }
        let ext = local_extrema(curve);
        for (points, mark) in [(&ext.maxima, "#e00000"), (&ext.minima, "#0050e0")] {
            for (f, v) in points {
                let (x, y) = (px(*f), py(*v));
                let _ = writeln!(
                    out,
                    "<path d=\"M{:.1},{:.1}L{:.1},{:.1}M{:.1},{:.1}L{:.1},{:.1}\" stroke=\"{mark}\" stroke-width=\"2\"/>",
                    x - 4.0,
                    y - 4.0,
                    x + 4.0,
                    y + 4.0,
                    x - 4.0,
                    y + 4.0,
                    x + 4.0,
                    y - 4.0
                );
            }
        }
        let label = match curve.mtf50 {
            Some(m) => format!("{name} {orientation} (n={n}) MTF50 {m:.3}"),
            None => format!("{name} {orientation} (n={n})"),
        };
        let ly = TOP + 10.0 + 18.0 * k as f64;
        let _ = writeln!(
            out,
            "<line x1=\"{:.1}\" y1=\"{ly:.1}\" x2=\"{:.1}\" y2=\"{ly:.1}\" stroke=\"{color}\" stroke-width=\"2\"{dash}/><text x=\"{:.1}\" y=\"{:.1}\">{}</text>",
            LEFT + pw + 10.0,
            LEFT + pw + 30.0,
            LEFT + pw + 35.0,
            ly + 4.0,
            escape(&label)
        );
    }
    if curves.is_empty() {
        let _ = writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-size=\"18\">no data</text>",
            LEFT + pw / 2.0,
            TOP + ph / 2.0
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Mask outline, reference center and segment circles, optionally over a
/// frame.
pub fn mask_check_figure(
    frame: Option<&Frame>,
    width: usize,
    height: usize,
    mask: Option<&RegionMask>,
    seg: &RadialSegmentation,
) -> String {
    let s = canvas_scale(width, height);
    let (w, h) = ((width as f64 * s).round(), (height as f64 * s).round());
    let mut out = header(w, h);
    out.push_str("<title>mask check</title>\n");
    match frame {
        Some(f) => {
            let _ = writeln!(
                out,
                "<image x=\"0\" y=\"0\" width=\"{w:.0}\" height=\"{h:.0}\" href=\"{}\"/>",
                embed_frame(f, w as u32, h as u32)
            );
        }
        None => {
            let _ = writeln!(out, "<rect x=\"0\" y=\"0\" width=\"{w:.0}\" height=\"{h:.0}\" fill=\"#f4f4f4\"/>");
        }
    }
    draw_geometry(&mut out, seg, mask, width, height, s);
    out.push_str("</svg>\n");
    out
}

trait CeilTo {
    fn ceil_to(self, step: f64) -> f64;
}

impl CeilTo for f64 {
    fn ceil_to(self, step: f64) -> f64 {
        (self / step - 1e-9).ceil() * step
    }
}
