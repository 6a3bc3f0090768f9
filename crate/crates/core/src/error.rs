use std::fmt;

use serde::Serialize;

/// Pipeline stage a decode failure is attributed to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Stage {
    NoMarkerFound,
    NoRingsFound,
    UndecodableRing,
    AmbiguousBands,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::NoMarkerFound => "NoMarkerFound",
            Stage::NoRingsFound => "NoRingsFound",
            Stage::UndecodableRing => "UndecodableRing",
            Stage::AmbiguousBands => "AmbiguousBands",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid digit {0}, expected 0..=9")]
    InvalidDigit(u8),
    #[error("invalid side pattern {0:#06b}")]
    InvalidPattern(u8),
    #[error("invalid number {0:?}: expected 1 or more decimal digits")]
    InvalidNumber(String),
    #[error("invalid marker style: {0}")]
    InvalidStyle(String),
    #[error("layout overflow: {digits} rings do not fit in a {canvas_px}px canvas")]
    LayoutOverflow { digits: usize, canvas_px: u32 },
    #[error("ring index {0} out of range")]
    InvalidRing(usize),
    #[error("unsupported raster format: {0}")]
    UnsupportedFormat(String),
    #[error("degenerate histogram: image has a single intensity")]
    DegenerateHistogram,
    #[error("no marker found: {0}")]
    NoMarkerFound(String),
    #[error("degenerate quadrilateral")]
    DegenerateQuad,
    #[error("point ({x:.2}, {y:.2}) lies outside the quadrilateral")]
    OutOfDomain { x: f64, y: f64 },
    #[error("no code rings found: {0}")]
    NoRingsFound(String),
    #[error("ambiguous ring bands: {0}")]
    AmbiguousBands(String),
    #[error("ring {index} is undecodable (pattern {pattern:#06b})")]
    UndecodableRing { index: usize, pattern: u8 },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("no data to plot")]
    NoData,
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("image format error: {0}")]
    Format(String),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Decode stage for pipeline failures, `None` for everything else.
    pub fn stage(&self) -> Option<Stage> {
        match self {
            Error::NoMarkerFound(_) | Error::DegenerateQuad => Some(Stage::NoMarkerFound),
            Error::NoRingsFound(_) => Some(Stage::NoRingsFound),
            Error::UndecodableRing { .. } | Error::InvalidPattern(_) => {
                Some(Stage::UndecodableRing)
            }
            Error::AmbiguousBands(_) => Some(Stage::AmbiguousBands),
            _ => None,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
