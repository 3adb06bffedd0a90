//! Valid/invalid triage of measured SFR curves using local-extremum limits.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::sfr::SfrCurve;

pub const DEFAULT_OVERSHOOT_LIMIT: f64 = 1.4;
pub const DEFAULT_NOISE_MIN_LIMIT: f64 = 0.4;
/// Local minima below this frequency never trigger the noise rule.
pub const NOISE_BAND_START: f64 = 0.25;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Thresholds {
    pub overshoot_limit: f64,
    pub noise_min_limit: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            overshoot_limit: DEFAULT_OVERSHOOT_LIMIT,
            noise_min_limit: DEFAULT_NOISE_MIN_LIMIT,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Valid,
    Invalid,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reason {
    None,
    Overshoot,
    NoiseFloor,
    EdgeIncoherent,
    PhaseCoverage,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Valid => "valid",
            Status::Invalid => "invalid",
        }
    }
}

impl Reason {
    pub fn as_str(self) -> &'static str {
        match self {
            Reason::None => "none",
            Reason::Overshoot => "overshoot",
            Reason::NoiseFloor => "noise_floor",
            Reason::EdgeIncoherent => "edge_incoherent",
            Reason::PhaseCoverage => "phase_coverage",
        }
    }

    /// Reason recorded for a candidate whose SFR could not be computed.
    pub fn from_measurement_error(e: &Error) -> Reason {
        match e {
            Error::PhaseCoverage { .. } | Error::EsfTooShort { .. } => Reason::PhaseCoverage,
            _ => Reason::EdgeIncoherent,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub status: Status,
    pub reason: Reason,
    pub peak_value: f64,
    pub worst_minimum: Option<f64>,
}

impl Verdict {
    pub fn is_valid(&self) -> bool {
        self.status == Status::Valid
    }

    /// Verdict for a candidate that never produced a curve.
    pub fn failed(reason: Reason) -> Self {
        Verdict {
            status: Status::Invalid,
            reason,
            peak_value: f64::NAN,
            worst_minimum: None,
        }
    }
}

/// An interior extremum: `(frequency, value)`.
pub type Extremum = (f64, f64);

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Extrema {
    pub maxima: Vec<Extremum>,
    pub minima: Vec<Extremum>,
}

/// Strict local extrema over interior grid points. A plateau of equal values
/// counts once, located at its midpoint.
pub fn local_extrema(curve: &SfrCurve) -> Extrema {
    let v = &curve.values;
    let f = &curve.frequencies;
    let mut out = Extrema::default();
    let n = v.len();
    let mut i = 1;
    while i + 1 < n {
        let mut j = i;
        while j + 1 < n && v[j + 1] == v[i] {
            j += 1;
        }
        if j + 1 >= n {
            break;
        }
        let (before, after) = (v[i - 1], v[j + 1]);
        let mid_f = 0.5 * (f[i] + f[j]);
        if before < v[i] && after < v[i] {
            out.maxima.push((mid_f, v[i]));
        } else if before > v[i] && after > v[i] {
            out.minima.push((mid_f, v[i]));
        }
        i = j + 1;
    }
    out
}

pub fn classify(curve: &SfrCurve, thresholds: &Thresholds) -> Verdict {
    let ext = local_extrema(curve);
    let peak_value = curve.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let worst_minimum = ext
        .minima
        .iter()
        .filter(|(f, _)| *f >= NOISE_BAND_START)
        .map(|(_, v)| *v)
        .reduce(f64::max);
    let reason = if ext.maxima.iter().any(|(_, v)| *v >= thresholds.overshoot_limit) {
        Reason::Overshoot
    } else if worst_minimum.is_some_and(|m| m > thresholds.noise_min_limit) {
        Reason::NoiseFloor
    } else {
        Reason::None
    };
    Verdict {
        status: if reason == Reason::None {
            Status::Valid
        } else {
            Status::Invalid
        },
        reason,
        peak_value,
        worst_minimum,
    }
}
