use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("channel taps are all zero")]
    ZeroChannel,
    #[error("unknown channel `{0}` (expected one of h1, h2, h3, h4)")]
    UnknownChannel(String),
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("invalid span: {0}")]
    InvalidSpan(String),
    #[error("noise variance must be positive for tap design, got {0}")]
    NonPositiveNoise(f64),
    #[error("normal-equation matrix is not positive definite")]
    Singular,
    #[error("channel memory {0} exceeds the trellis limit of {max}", max = crate::trellis::MAX_TRELLIS_MEMORY)]
    TrellisTooLarge(usize),
    #[error("correlation coefficient {0} must satisfy |rho| < 1")]
    DegenerateCorrelation(f64),
    #[error("invalid configuration field `{field}`: {reason}")]
    Config { field: String, reason: String },
    #[error("config parse error: {0}")]
    ConfigParse(#[from] toml::de::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
