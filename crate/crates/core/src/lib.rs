//! Natural-scene spatial frequency response (NS-SFR) measurement.
//!
//! Slanted edges are found in ordinary frames, measured with the ISO 12233
//! edge method, triaged, and averaged per radial segment of the image.

// NaN-rejecting `!(x > 0.0)` checks and index loops over neighbouring samples
// are deliberate.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod aggregate;
pub mod config;
pub mod error;
pub mod ingest;
pub mod mask;
pub mod pipeline;
pub mod radial;
pub mod report;
pub mod roi;
pub mod sfr;
pub mod synth;
pub mod validate;

pub use error::{Error, Result};
pub use config::{AnalyzeConfig, OrientationSelection};
pub use pipeline::{analyze, analyze_frame, Analysis, Geometry};
