use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Input outside the admissible set (bad ε, N not divisible by 8, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The coefficients violate `b ≥ β² > 0` or the coercivity bound `δ > 0`.
    #[error("problem outside the coercivity assumptions: {0}")]
    Assumption(String),

    #[error("history function evaluated outside [-1, 0] at x = {0}")]
    HistoryDomain(f64),

    #[error("point x = {0} outside the domain [0, 2]")]
    OutOfDomain(f64),

    #[error("mesh construction failed: {0}")]
    Mesh(String),

    #[error("objects built for different spaces: {0}")]
    SpaceMismatch(String),

    #[error("singular or ill-conditioned system: {0}")]
    Singular(String),

    #[error("reference solution does not dominate the run: {0}")]
    Domination(String),

    #[error("configuration error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("malformed file: {0}")]
    Parse(String),
}

impl Error {
    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }
}
