use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration key failed to parse or validate.
    #[error("config error at key `{key}`{}: {message}", line.map(|l| format!(" (line {l})")).unwrap_or_default())]
    Config {
        key: String,
        line: Option<usize>,
        message: String,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Aperture intervals are unordered, overlapping or degenerate.
    #[error("invalid aperture: {0}")]
    InvalidAperture(String),

    #[error("invalid propagation times: t1 = {t1} s, t = {t} s (need t > t1 >= 0)")]
    InvalidTime { t1: f64, t: f64 },

    /// Amplitude approximation could not reach the requested tolerance.
    #[error(
        "quadrature tolerance not reached on interval [{lower:e}, {upper:e}] m: \
         estimated error {achieved:e} > {requested:e}"
    )]
    Tolerance {
        lower: f64,
        upper: f64,
        achieved: f64,
        requested: f64,
    },

    #[error("sample budget exceeded: {required} samples required, budget is {budget}")]
    SampleBudget { required: u64, budget: u64 },

    #[error("density has zero total mass")]
    ZeroMass,

    #[error(
        "detector window too small: edge density is {edge_ratio:e} of peak \
         (tolerance {tolerance:e})"
    )]
    WindowTooSmall { edge_ratio: f64, tolerance: f64 },

    #[error("position {x:e} m lies outside the grid window [{lower:e}, {upper:e}] m")]
    OutsideWindow { x: f64, lower: f64, upper: f64 },

    #[error("smoothing width {width:e} m exceeds a quarter of the window {window:e} m")]
    SmoothingTooWide { width: f64, window: f64 },

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed CSV: {0}")]
    Csv(String),

    #[error("plot rendering failed: {0}")]
    Plot(String),
}

impl Error {
    pub fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            line: None,
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// Innermost error, skipping context wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Context { source, .. } => source.root(),
            e => e,
        }
    }

    /// Process exit code: 2 config, 3 numerical tolerance, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self.root() {
            Error::Config { .. }
            | Error::InvalidParameter(_)
            | Error::InvalidAperture(_)
            | Error::InvalidTime { .. } => 2,
            Error::Io { .. } | Error::Csv(_) | Error::Plot(_) => 4,
            _ => 3,
        }
    }
}
