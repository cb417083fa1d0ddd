use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("OAM number l must be nonzero")]
    ZeroOam,

    #[error("non-finite rotation angle at B = {b_gauss} G")]
    NonFinite { b_gauss: f64 },

    #[error("no zero crossing of the rotation curve in (0, {b_max}] G")]
    NoCrossing { b_max: f64 },

    #[error("rotation curve has no stationary point in (0, {b_max}] G")]
    NoExtremum { b_max: f64 },

    #[error("rotation angle {theta_deg} deg is outside the monotone branch (|theta| < {limit_deg} deg)")]
    OutsideMonotoneBranch { theta_deg: f64, limit_deg: f64 },

    #[error("insensitive operating point: |dtheta/dB| = {slope_deg_per_gauss:e} deg/G")]
    InsensitiveOperatingPoint { slope_deg_per_gauss: f64 },

    #[error("image geometries differ")]
    GeometryMismatch,

    #[error("empty annulus: {0}")]
    EmptyAnnulus(String),

    #[error("degenerate correlation mask: one image is constant on the mask")]
    DegenerateMask,

    #[error("ambiguous correlation peak: top two peaks at {first_deg} and {second_deg} deg differ by {gap:e}")]
    AmbiguousPeak { first_deg: f64, second_deg: f64, gap: f64 },

    #[error("degenerate sweep data: {0}")]
    DegenerateData(String),

    #[error("malformed PGM: {0}")]
    MalformedPgm(String),

    #[error("truncated PGM payload: expected {expected} bytes, found {found}")]
    TruncatedPgm { expected: usize, found: usize },

    #[error("unsupported PGM maxval {maxval}{}", expected_note(*.expected_bits))]
    UnsupportedMaxval { maxval: u32, expected_bits: Option<u8> },

    #[error("malformed CSV at line {line}: {reason}")]
    Csv { line: usize, reason: String },

    #[error("config {path}: line {line}: {reason}")]
    Config { path: PathBuf, line: usize, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn expected_note(bits: Option<u8>) -> String {
    match bits {
        Some(b) => format!(" for {b}-bit image"),
        None => String::new(),
    }
}

impl Error {
    /// True for failures of the numerical model (as opposed to bad input).
    pub fn is_numeric_domain(&self) -> bool {
        matches!(
            self,
            Error::NonFinite { .. }
                | Error::NoCrossing { .. }
                | Error::NoExtremum { .. }
                | Error::OutsideMonotoneBranch { .. }
                | Error::InsensitiveOperatingPoint { .. }
                | Error::DegenerateMask
                | Error::AmbiguousPeak { .. }
                | Error::DegenerateData(_)
                | Error::EmptyAnnulus(_)
        )
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
