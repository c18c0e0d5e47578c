use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An input value violates a documented invariant.
    #[error("invalid `{field}`: {reason}")]
    Validation { field: String, reason: String },

    /// One or more problems found while reading a configuration document.
    #[error("configuration schema error: {}", .problems.join("; "))]
    Schema { problems: Vec<String> },

    /// A function was evaluated outside its mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// An iterative numerical method failed.
    #[error("numerical failure: {0}")]
    Numeric(String),

    /// The Mathieu branch connected to the requested order could not be identified.
    #[error("mathieu branch resolution failed: {0}")]
    BranchResolution(String),

    /// A closed-form expression hit a pole.
    #[error("singular expression: {0}")]
    Singular(String),

    /// Grid or packet geometry does not fit the requested setup.
    #[error("geometry error: {0}")]
    Geometry(String),

    /// The propagation setup would produce an inaccurate or unstable run.
    #[error("propagation setup rejected: {0}")]
    Setup(String),

    /// The wave packet reached the edge of the grid.
    #[error("containment violated at t = {time_s:.6e} s (edge/peak amplitude {ratio:.3e}); increase z_max")]
    Containment { time_s: f64, ratio: f64 },

    /// No revival peak could be identified in the requested window.
    #[error("revival detection failed: {0}")]
    Detection(String),

    /// Two inputs that should describe the same grid do not.
    #[error("mismatched inputs: {0}")]
    Mismatch(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Short machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Validation { .. } => "validation",
            Error::Schema { .. } => "schema",
            Error::Domain(_) => "domain",
            Error::Numeric(_) => "numeric",
            Error::BranchResolution(_) => "branch_resolution",
            Error::Singular(_) => "singular",
            Error::Geometry(_) => "geometry",
            Error::Setup(_) => "setup",
            Error::Containment { .. } => "containment",
            Error::Detection(_) => "detection",
            Error::Mismatch(_) => "mismatch",
            Error::Io(_) => "io",
        }
    }

    pub(crate) fn validation(field: &str, reason: impl Into<String>) -> Self {
        Error::Validation {
            field: field.to_string(),
            reason: reason.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
