use crate::dynamics::Trajectory;

/// Errors raised anywhere in the library.
///
/// `Config` and `Invalid` are user-input problems (CLI exit code 2);
/// `Integrator` and `Numeric` are failures of the numerics (exit code 3).
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {msg}")]
    Config { path: String, msg: String },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("integrator failure at t = {t:.3} fs: {msg}")]
    Integrator {
        t: f64,
        msg: String,
        partial: Option<Box<Trajectory>>,
    },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(path: impl Into<String>, msg: impl Into<String>) -> Self {
        Error::Config { path: path.into(), msg: msg.into() }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    /// True for errors caused by bad input rather than failed numerics.
    pub fn is_input_error(&self) -> bool {
        matches!(self, Error::Config { .. } | Error::Invalid(_) | Error::Json(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
