use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    Validation { field: &'static str, reason: String },

    #[error("thermal population at grid edge |p| = {half_width} is {edge:e}, above tolerance {tolerance:e}")]
    EdgePopulationTooLarge {
        half_width: usize,
        edge: f64,
        tolerance: f64,
    },

    #[error("shape mismatch: expected {expected} {what}, got {got}")]
    ShapeMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("pump detuning must be nonzero")]
    ZeroDetuning,

    #[error("unit `{0}` must be strictly positive")]
    NonPositiveUnit(&'static str),

    #[error("input `{0}` must be strictly positive")]
    NonPositiveInput(&'static str),

    #[error("probe input amplitude is zero")]
    ZeroProbeInput,

    #[error("step limit of {0} exceeded")]
    StepLimitExceeded(usize),

    #[error("step size {dt:e} underflowed at t = {t}")]
    StepUnderflow { t: f64, dt: f64 },

    #[error("non-finite state at t = {0}")]
    NonFiniteState(f64),

    #[error("steady state not reached for delta = {delta} within {max_steps} steps")]
    SteadyStateNotReached { delta: f64, max_steps: usize },

    #[error("degenerate fit: {0}")]
    FitDegenerate(String),

    #[error("power-law fit requires positive data")]
    NonPositiveData,

    #[error("all abscissae are equal")]
    DegenerateAbscissa,

    #[error("spectra do not share a detuning grid")]
    GridMismatch,

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("unknown key `{key}` at line {line}")]
    UnknownKey { key: String, line: usize },

    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

impl Error {
    /// Whether the error comes from configuration rather than from a run.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::Validation { .. }
                | Error::EdgePopulationTooLarge { .. }
                | Error::ShapeMismatch { .. }
                | Error::ZeroDetuning
                | Error::NonPositiveUnit(_)
                | Error::NonPositiveInput(_)
                | Error::ZeroProbeInput
                | Error::Parse { .. }
                | Error::UnknownKey { .. }
        )
    }

    pub(crate) fn io(path: &std::path::Path, err: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            message: err.to_string(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Error {
    Error::Validation {
        field,
        reason: reason.into(),
    }
}
