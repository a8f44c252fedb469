use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error("matrix is not unimodular: det = {det}")]
    NotUnimodular { det: f64 },

    #[error("non-finite value encountered: {0}")]
    NumericOverflow(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid root system: {0}")]
    InvalidSpec(String),

    #[error("internal consistency check failed: {0}")]
    Consistency(String),

    #[error("weight k = {k} is not integrable (need k >= 3)")]
    NotIntegrable { k: i64 },

    #[error("integral diverges: {0}")]
    Divergent(String),

    #[error("enveloping word has {len} letters; at most {cap} supported")]
    WordTooLong { len: usize, cap: usize },

    #[error("derivative requires a non-empty word")]
    EmptyWord,

    #[error("too few usable samples: {usable} (need at least {needed})")]
    InsufficientSamples { usable: usize, needed: usize },

    #[error("quadrature resolution too low: {0}")]
    Resolution(String),

    #[error("tail cannot be certified: {0}")]
    UncertifiedTail(String),

    #[error("enumeration needs {needed} scan candidates, cap is {cap}")]
    Capacity { needed: u128, cap: u128 },

    #[error("search radius {given} too small; use at least {suggested}")]
    WidenRadius { given: f64, suggested: f64 },

    #[error("usage: {0}")]
    Usage(String),

    #[error("i/o: {0}")]
    Io(String),
}

impl LabError {
    /// Stable machine-readable tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Self::NotUnimodular { .. } => "not-unimodular",
            Self::NumericOverflow(_) => "numeric-overflow",
            Self::Domain(_) => "domain",
            Self::InvalidSpec(_) => "invalid-spec",
            Self::Consistency(_) => "consistency",
            Self::NotIntegrable { .. } => "not-integrable",
            Self::Divergent(_) => "divergent",
            Self::WordTooLong { .. } => "word-too-long",
            Self::EmptyWord => "empty-word",
            Self::InsufficientSamples { .. } => "insufficient-samples",
            Self::Resolution(_) => "resolution",
            Self::UncertifiedTail(_) => "uncertified-tail",
            Self::Capacity { .. } => "capacity",
            Self::WidenRadius { .. } => "widen-radius",
            Self::Usage(_) => "usage",
            Self::Io(_) => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, LabError>;
