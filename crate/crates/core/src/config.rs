//! Analysis configuration. Values come from command-line flags, then an
//! optional JSON config file, then built-in defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::radial::DEFAULT_SEGMENTS;
use crate::roi::{NsSfrParams, Orientation};
use crate::validate::Thresholds;

/// Which edge orientation the figures and tables report.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OrientationSelection {
    #[default]
    Horizontal,
    Vertical,
    Both,
}

impl OrientationSelection {
    pub fn includes(self, o: Orientation) -> bool {
        match self {
            OrientationSelection::Both => true,
            OrientationSelection::Horizontal => o == Orientation::Horizontal,
            OrientationSelection::Vertical => o == Orientation::Vertical,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            OrientationSelection::Horizontal => "horizontal",
            OrientationSelection::Vertical => "vertical",
            OrientationSelection::Both => "both",
        }
    }
}

impl std::str::FromStr for OrientationSelection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "horizontal" => Ok(OrientationSelection::Horizontal),
            "vertical" => Ok(OrientationSelection::Vertical),
            "both" => Ok(OrientationSelection::Both),
            other => Err(Error::Config(format!(
                "orientation must be horizontal, vertical or both (got `{other}`)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnalyzeConfig {
    pub input: PathBuf,
    pub glob: String,
    pub limit: Option<usize>,
    pub mask: Option<PathBuf>,
    pub params: NsSfrParams,
    pub thresholds: Thresholds,
    pub segments: usize,
    pub segment_ratios: Option<Vec<f64>>,
    /// Exclusion margin around invalid pixels; `None` means `2 * esfw`.
    pub margin: Option<usize>,
    pub orientation: OrientationSelection,
    /// Worker threads; 0 lets the runtime decide.
    pub threads: usize,
    pub out: PathBuf,
    /// Frames drawn as overlays from each end of the ranking.
    pub overlay_frames: usize,
}

impl Default for AnalyzeConfig {
    fn default() -> Self {
        AnalyzeConfig {
            input: PathBuf::from("."),
            glob: "*.png".into(),
            limit: None,
            mask: None,
            params: NsSfrParams::default(),
            thresholds: Thresholds::default(),
            segments: DEFAULT_SEGMENTS,
            segment_ratios: None,
            margin: None,
            orientation: OrientationSelection::default(),
            threads: 0,
            out: PathBuf::from("nssfr-out"),
            overlay_frames: 5,
        }
    }
}

impl AnalyzeConfig {
    pub fn margin(&self) -> usize {
        self.margin.unwrap_or_else(|| self.params.default_margin())
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        let t = &self.thresholds;
        if !(t.overshoot_limit > 1.0) {
            return Err(Error::InvalidParams(format!(
                "overshoot limit must exceed 1 (got {})",
                t.overshoot_limit
            )));
        }
        if !(t.noise_min_limit > 0.0 && t.noise_min_limit < 1.0) {
            return Err(Error::InvalidParams(format!(
                "noise minimum limit must lie in (0, 1) (got {})",
                t.noise_min_limit
            )));
        }
        if self.segment_ratios.is_none() && self.segments < 2 {
            return Err(Error::InvalidParams(format!("need at least 2 segments (got {})", self.segments)));
        }
        if self.limit == Some(0) {
            return Err(Error::InvalidParams("limit must be positive".into()));
        }
        Ok(())
    }

    pub fn n_segments(&self) -> usize {
        self.segment_ratios.as_ref().map_or(self.segments, Vec::len)
    }

    /// Fills every field the file sets and the command line left unset.
    pub fn apply_file(&mut self, file: &ConfigFile) {
        macro_rules! take {
            ($dst:expr, $src:expr) => {
                if let Some(v) = $src.clone() {
                    $dst = v;
                }
            };
        }
        take!(self.input, file.input);
        take!(self.glob, file.glob);
        take!(self.params.contrast_min, file.contrast.map(|c| c[0]));
        take!(self.params.contrast_max, file.contrast.map(|c| c[1]));
        take!(self.params.st, file.st);
        take!(self.params.esfw, file.esfw);
        take!(self.params.angle_exclusion_deg, file.angle_exclusion_deg);
        take!(self.params.edge_fit_order, file.edge_fit_order);
        take!(self.thresholds.overshoot_limit, file.overshoot_limit);
        take!(self.thresholds.noise_min_limit, file.noise_min_limit);
        take!(self.segments, file.segments);
        take!(self.orientation, file.orientation);
        take!(self.threads, file.threads);
        take!(self.out, file.out);
        take!(self.overlay_frames, file.overlay_frames);
        if file.limit.is_some() {
            self.limit = file.limit;
        }
        if file.mask.is_some() {
            self.mask = file.mask.clone();
        }
        if file.segment_ratios.is_some() {
            self.segment_ratios = file.segment_ratios.clone();
        }
        if file.margin.is_some() {
            self.margin = file.margin;
        }
    }
}

/// Contents of a JSON config file. Every key is optional.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub input: Option<PathBuf>,
    pub glob: Option<String>,
    pub limit: Option<usize>,
    pub mask: Option<PathBuf>,
    pub contrast: Option<[f64; 2]>,
    pub st: Option<f64>,
    pub esfw: Option<usize>,
    pub angle_exclusion_deg: Option<f64>,
    pub edge_fit_order: Option<usize>,
    pub overshoot_limit: Option<f64>,
    pub noise_min_limit: Option<f64>,
    pub segments: Option<usize>,
    pub segment_ratios: Option<Vec<f64>>,
    pub margin: Option<usize>,
    pub orientation: Option<OrientationSelection>,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    pub overlay_frames: Option<usize>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_values_fill_defaults() {
        let file: ConfigFile = serde_json::from_str(r#"{"st": 0.05, "contrast": [0.2, 0.8], "segment_ratios": [0.3, 1.0]}"#).unwrap();
        let mut cfg = AnalyzeConfig::default();
        cfg.apply_file(&file);
        assert_eq!(cfg.params.st, 0.05);
        assert_eq!((cfg.params.contrast_min, cfg.params.contrast_max), (0.2, 0.8));
        assert_eq!(cfg.params.esfw, 5);
        assert_eq!(cfg.n_segments(), 2);
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(serde_json::from_str::<ConfigFile>(r#"{"sharpness": 1}"#).is_err());
    }

    #[test]
    fn orientation_selection() {
        let both: OrientationSelection = "both".parse().unwrap();
        assert!(both.includes(Orientation::Vertical) && both.includes(Orientation::Horizontal));
        assert!(!OrientationSelection::Horizontal.includes(Orientation::Vertical));
        assert!("diagonal".parse::<OrientationSelection>().is_err());
    }
}
