//! Dataset discovery, image decoding and luminance conversion.

use std::path::{Path, PathBuf};

use glob::{MatchOptions, Pattern};
use image::DynamicImage;
use log::warn;
use rayon::prelude::*;
use walkdir::WalkDir;

use crate::error::{Error, Result};

/// Smallest frame side accepted anywhere in the pipeline.
pub const MIN_FRAME_SIDE: usize = 64;

/// BT.601 luma weights.
pub const LUMA_WEIGHTS: [f64; 3] = [0.299, 0.587, 0.114];

/// A single-plane luminance image normalized to `[0, 1]`, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Frame {
    id: String,
    width: usize,
    height: usize,
    luminance: Vec<f64>,
    bit_depth: u8,
}

impl Frame {
    pub fn new(
        id: impl Into<String>,
        width: usize,
        height: usize,
        mut luminance: Vec<f64>,
        bit_depth: u8,
    ) -> Result<Self> {
        let id = id.into();
        if width < MIN_FRAME_SIDE || height < MIN_FRAME_SIDE {
            return Err(Error::FrameTooSmall { id, width, height });
        }
        if luminance.len() != width * height {
            return Err(Error::BufferSize {
                id,
                got: luminance.len(),
                expected: width * height,
            });
        }
        for v in &mut luminance {
            *v = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
        }
        Ok(Frame {
            id,
            width,
            height,
            luminance,
            bit_depth,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bit_depth(&self) -> u8 {
        self.bit_depth
    }

    pub fn luminance(&self) -> &[f64] {
        &self.luminance
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.luminance[y * self.width + x]
    }

    /// Copies the `w`×`h` window whose top-left corner is `(x, y)`.
    pub fn window(&self, x: usize, y: usize, w: usize, h: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(w * h);
        for row in y..y + h {
            let start = row * self.width + x;
            out.extend_from_slice(&self.luminance[start..start + w]);
        }
        out
    }

    /// Largest representable code value for the source depth.
    pub fn full_scale(&self) -> f64 {
        ((1u64 << self.bit_depth.min(32)) - 1) as f64
    }
}

/// Converts interleaved RGB code values to normalized luminance.
pub fn to_luminance(rgb: &[u16], bit_depth: u8) -> Vec<f64> {
    let scale = ((1u64 << bit_depth) - 1) as f64;
    rgb.chunks_exact(3)
        .map(|px| {
            let y = LUMA_WEIGHTS[0] * px[0] as f64
                + LUMA_WEIGHTS[1] * px[1] as f64
                + LUMA_WEIGHTS[2] * px[2] as f64;
            (y / scale).clamp(0.0, 1.0)
        })
        .collect()
}

/// Grayscale input passes through, only rescaled.
pub fn gray_to_luminance(gray: &[u16], bit_depth: u8) -> Vec<f64> {
    let scale = ((1u64 << bit_depth) - 1) as f64;
    gray.iter().map(|&g| (g as f64 / scale).clamp(0.0, 1.0)).collect()
}

fn is_supported(path: &Path) -> bool {
    matches!(
        path.extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase())
            .as_deref(),
        Some("png" | "jpg" | "jpeg")
    )
}

/// Decodes one PNG/JPEG file into a luminance frame.
pub fn decode_frame(path: &Path, id: impl Into<String>) -> Result<Frame> {
    if !is_supported(path) {
        return Err(Error::Decode {
            path: path.to_path_buf(),
            message: "unsupported container (expected PNG or JPEG)".into(),
        });
    }
    let img = image::open(path).map_err(|e| Error::Decode {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    frame_from_image(id, &img)
}

pub fn frame_from_image(id: impl Into<String>, img: &DynamicImage) -> Result<Frame> {
    let (w, h) = (img.width() as usize, img.height() as usize);
    let (lum, depth) = match img {
        DynamicImage::ImageLuma8(g) => {
            let raw: Vec<u16> = g.as_raw().iter().map(|&v| v as u16).collect();
            (gray_to_luminance(&raw, 8), 8)
        }
        DynamicImage::ImageLuma16(g) => (gray_to_luminance(g.as_raw(), 16), 16),
        DynamicImage::ImageLumaA8(_) => {
            let g = img.to_luma8();
            let raw: Vec<u16> = g.as_raw().iter().map(|&v| v as u16).collect();
            (gray_to_luminance(&raw, 8), 8)
        }
        DynamicImage::ImageLumaA16(_) => (gray_to_luminance(img.to_luma16().as_raw(), 16), 16),
        DynamicImage::ImageRgb16(_) | DynamicImage::ImageRgba16(_) => {
            (to_luminance(img.to_rgb16().as_raw(), 16), 16)
        }
        _ => {
            let rgb = img.to_rgb8();
            let raw: Vec<u16> = rgb.as_raw().iter().map(|&v| v as u16).collect();
            (to_luminance(&raw, 8), 8)
        }
    };
    Frame::new(id, w, h, lum, depth)
}

/// A file that matched the pattern but could not be turned into a frame.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Skipped {
    pub id: String,
    pub reason: String,
}

/// The sorted list of image files that make up one camera's dataset.
#[derive(Clone, Debug)]
pub struct Dataset {
    root: PathBuf,
    pattern: String,
    entries: Vec<(String, PathBuf)>,
}

impl Dataset {
    /// Lists files under `root` (recursively) whose relative path matches
    /// `pattern`, sorted by relative path.
    pub fn open(root: &Path, pattern: &str) -> Result<Self> {
        if !root.is_dir() {
            return Err(Error::MissingInput(root.to_path_buf()));
        }
        let glob = Pattern::new(pattern).map_err(|source| Error::Pattern {
            pattern: pattern.to_string(),
            source,
        })?;
        let opts = MatchOptions {
            case_sensitive: true,
            require_literal_separator: false,
            require_literal_leading_dot: false,
        };
        let mut entries = Vec::new();
        for entry in WalkDir::new(root).follow_links(true) {
            let entry = match entry {
                Ok(e) => e,
                Err(e) => {
                    warn!("skipping unreadable entry: {e}");
                    continue;
                }
            };
            if !entry.file_type().is_file() {
                continue;
            }
            let rel = match entry.path().strip_prefix(root) {
                Ok(r) => r,
                Err(_) => continue,
            };
            let id = rel
                .components()
                .map(|c| c.as_os_str().to_string_lossy())
                .collect::<Vec<_>>()
                .join("/");
            if glob.matches_with(&id, opts) {
                entries.push((id, entry.path().to_path_buf()));
            }
        }
        entries.sort();
        if entries.is_empty() {
            return Err(Error::NoImages {
                root: root.to_path_buf(),
                pattern: pattern.to_string(),
            });
        }
        Ok(Dataset {
            root: root.to_path_buf(),
            pattern: pattern.to_string(),
            entries,
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn pattern(&self) -> &str {
        &self.pattern
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Keeps only the first `n` entries.
    pub fn truncate(&mut self, n: usize) {
        self.entries.truncate(n);
    }

    /// `(id, path)` pairs in id order.
    pub fn entries(&self) -> &[(String, PathBuf)] {
        &self.entries
    }

    pub fn decode(&self, index: usize) -> Result<Frame> {
        let (id, path) = &self.entries[index];
        decode_frame(path, id.clone())
    }

    /// Lazily decodes frames in id order, reporting undecodable files as `Err`.
    pub fn frames(&self) -> impl Iterator<Item = (String, Result<Frame>)> + '_ {
        self.entries
            .iter()
            .map(|(id, path)| (id.clone(), decode_frame(path, id.clone())))
    }
}

/// Decoded dataset plus the files that had to be skipped.
#[derive(Debug)]
pub struct LoadedDataset {
    pub frames: Vec<Frame>,
    pub skipped: Vec<Skipped>,
}

/// Eagerly decodes every matching file (in parallel) and returns frames in id
/// order. Intended for small datasets and tests; the analysis pipeline streams
/// through [`Dataset`] instead.
pub fn load_dataset(root: &Path, pattern: &str) -> Result<LoadedDataset> {
    let ds = Dataset::open(root, pattern)?;
    let decoded: Vec<(String, Result<Frame>)> = ds
        .entries()
        .par_iter()
        .map(|(id, path)| (id.clone(), decode_frame(path, id.clone())))
        .collect();
    let mut frames = Vec::new();
    let mut skipped = Vec::new();
    for (id, res) in decoded {
        match res {
            Ok(f) => frames.push(f),
            Err(e) => {
                warn!("skipping {id}: {e}");
                skipped.push(Skipped {
                    id,
                    reason: e.to_string(),
                });
            }
        }
    }
    if frames.is_empty() {
        return Err(Error::NoImages {
            root: root.to_path_buf(),
            pattern: pattern.to_string(),
        });
    }
    log::info!("loaded {} frames ({} skipped)", frames.len(), skipped.len());
    Ok(LoadedDataset { frames, skipped })
}

#[cfg(test)]
mod tests {
    use super::*;
    use image::{GrayImage, Luma, Rgb, RgbImage};

    #[test]
    fn white_black_and_red() {
        assert_eq!(to_luminance(&[255, 255, 255], 8), vec![1.0]);
        assert_eq!(to_luminance(&[0, 0, 0], 8), vec![0.0]);
        let red = to_luminance(&[255, 0, 0], 8)[0];
        assert!((red - 0.299).abs() < 1e-12);
    }

    #[test]
    fn gray_passthrough_scales() {
        let l = gray_to_luminance(&[0, 128, 255], 8);
        assert_eq!(l[0], 0.0);
        assert!((l[1] - 128.0 / 255.0).abs() < 1e-12);
        assert_eq!(l[2], 1.0);
        let l16 = gray_to_luminance(&[65535], 16);
        assert_eq!(l16[0], 1.0);
    }

    #[test]
    fn frame_rejects_small_and_mis_sized() {
        assert!(matches!(
            Frame::new("a", 63, 100, vec![0.0; 6300], 8),
            Err(Error::FrameTooSmall { .. })
        ));
        assert!(matches!(
            Frame::new("a", 64, 64, vec![0.0; 10], 8),
            Err(Error::BufferSize { .. })
        ));
    }

    #[test]
    fn empty_directory_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let err = load_dataset(dir.path(), "*.png").unwrap_err();
        assert!(err.to_string().contains("no images matched"));
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn corrupt_file_is_skipped() {
        let dir = tempfile::tempdir().unwrap();
        for i in 0..3 {
            let img = RgbImage::from_pixel(64, 64, Rgb([i * 40, 10, 200]));
            img.save(dir.path().join(format!("f{i}.png"))).unwrap();
        }
        std::fs::write(dir.path().join("f9.png"), b"not a png").unwrap();
        let ds = load_dataset(dir.path(), "*.png").unwrap();
        assert_eq!(ds.frames.len(), 3);
        assert_eq!(ds.skipped.len(), 1);
        assert_eq!(ds.skipped[0].id, "f9.png");
        let ids: Vec<_> = ds.frames.iter().map(|f| f.id().to_string()).collect();
        assert_eq!(ids, ["f0.png", "f1.png", "f2.png"]);
    }

    #[test]
    fn ids_are_sorted_regardless_of_creation_order() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::create_dir(dir.path().join("sub")).unwrap();
        for name in ["z.png", "a.png", "sub/m.png"] {
            GrayImage::from_pixel(64, 64, Luma([7]))
                .save(dir.path().join(name))
                .unwrap();
        }
        let ds = Dataset::open(dir.path(), "*.png").unwrap();
        let ids: Vec<_> = ds.entries().iter().map(|(id, _)| id.as_str()).collect();
        assert_eq!(ids, ["a.png", "sub/m.png", "z.png"]);
    }

    #[test]
    fn gray_ramp_is_monotone() {
        let ramp: Vec<u16> = (0..=255).flat_map(|v| [v, v, v]).collect();
        let l = to_luminance(&ramp, 8);
        assert!(l.windows(2).all(|w| w[0] <= w[1]));
    }
}
