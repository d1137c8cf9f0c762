use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("spatial dimension must be 2 or 3, got {0}")]
    UnsupportedDimension(usize),

    #[error("aliasing guard: requested momentum cutoff {requested:.6e} exceeds the usable band {limit:.6e} of the sampling grid (spacing {spacing:.6e})")]
    Aliasing {
        requested: f64,
        limit: f64,
        spacing: f64,
    },

    #[error("mass truncation {m_max:.6e} too small: tail/peak ratio {tail_ratio:.3e}; adaptive truncation suggests {suggested:.6e}")]
    MassTruncation {
        m_max: f64,
        tail_ratio: f64,
        suggested: f64,
    },

    #[error("quadrature rule mismatch between one-particle vectors")]
    RuleMismatch,

    #[error("charge label mismatch: {0}")]
    ChargeMismatch(String),

    #[error("degenerate generator family at scale {lambda:.6e}: floor removed {floored} of {total} Gram eigenvalues")]
    DegenerateFamily {
        lambda: f64,
        floored: usize,
        total: usize,
    },

    #[error("exponent window violation: {0}")]
    ExponentWindow(String),

    #[error("not a group: {0}")]
    NotAGroup(String),

    #[error("conjugation structure: {0}")]
    Conjugation(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
