use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("zero reset duration with nonzero current excess (ln argument {argument})")]
    ZeroResetDuration { argument: f64 },

    #[error(
        "current reset unreachable by decay: |i(T_C)| = {at_switch:e} vs target |i0| = {target:e}"
    )]
    UnreachableReset { at_switch: f64, target: f64 },

    #[error("charge bound inapplicable: per-cycle bracket {bracket} is negative")]
    BoundInapplicable { bracket: f64 },

    #[error("unknown {kind} strategy `{name}` (registered: {known})")]
    UnknownStrategy {
        kind: &'static str,
        name: String,
        known: String,
    },

    #[error("trajectories are not comparable: {0}")]
    GridMismatch(String),

    #[error("config error at `{path}`: {reason}")]
    Config { path: String, reason: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn config(path: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            reason: reason.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
