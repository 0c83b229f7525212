use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("operator is not Hermitian: max |H - H^dagger| = {deviation:e}")]
    NotHermitian { deviation: f64 },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("time {t} ms outside protocol window [0, {tau}] ms")]
    TimeOutOfRange { t: f64, tau: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("readout model is singular (|det T| = {det:e})")]
    SingularModel { det: f64 },

    #[error("inconsistent readout data: corrected entry ({row}, {col}) = {value} outside [-0.05, 1.05]")]
    InconsistentData { row: usize, col: usize, value: f64 },

    #[error("numerical contract violated: {0}")]
    Contract(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
