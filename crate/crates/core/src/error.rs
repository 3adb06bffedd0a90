use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("no images matched pattern `{pattern}` under {root}")]
    NoImages { root: PathBuf, pattern: String },

    #[error("input directory {0} does not exist")]
    MissingInput(PathBuf),

    #[error("invalid glob pattern `{pattern}`: {source}")]
    Pattern {
        pattern: String,
        source: glob::PatternError,
    },

    #[error("frame {id}: {width}x{height} is below the 64x64 minimum")]
    FrameTooSmall { id: String, width: usize, height: usize },

    #[error("frame {id}: buffer holds {got} samples, expected {expected}")]
    BufferSize {
        id: String,
        got: usize,
        expected: usize,
    },

    #[error("could not decode {path}: {message}")]
    Decode { path: PathBuf, message: String },

    #[error("invalid mask: {0}")]
    InvalidMask(String),

    #[error("mask too small: interior covers {fraction:.4} of the image (minimum 0.01)")]
    MaskTooSmall { fraction: f64 },

    #[error("mask reference size {reference:?} is not proportional to image size {actual:?}")]
    MaskSizeMismatch {
        reference: (u32, u32),
        actual: (usize, usize),
    },

    #[error("validity map has no valid pixels")]
    EmptyValidity,

    #[error("dimension mismatch: {0}")]
    Dimensions(String),

    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("edge not coherent: fit rmse {rmse:.3} px exceeds 0.5 px")]
    EdgeIncoherent { rmse: f64 },

    #[error("insufficient phase coverage: {empty_fraction:.3} of central ESF bins are empty")]
    PhaseCoverage { empty_fraction: f64 },

    #[error("ESF too short: {len} supersampled bins (minimum 64)")]
    EsfTooShort { len: usize },

    #[error("no edge energy in patch")]
    NoEdgeEnergy,

    #[error("location at distance {distance:.3} px lies beyond r_e = {r_e:.3} px")]
    OutsideSegmentation { distance: f64, r_e: f64 },

    #[error("overlapping synthetic patch placement: patch {first} and patch {second}")]
    PatchOverlap { first: usize, second: usize },

    #[error("config: {0}")]
    Config(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("image: {0}")]
    Image(#[from] image::ImageError),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the CLI: 2 for configuration problems, 3 when the
    /// run has nothing to measure, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NoImages { .. } => 3,
            Error::MissingInput(_)
            | Error::Pattern { .. }
            | Error::InvalidMask(_)
            | Error::MaskTooSmall { .. }
            | Error::MaskSizeMismatch { .. }
            | Error::EmptyValidity
            | Error::InvalidParams(_)
            | Error::Config(_)
            | Error::Json(_) => 2,
            _ => 1,
        }
    }
}
