use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("schema error at row {row}, column `{column}`: {message}")]
    Schema {
        row: usize,
        column: String,
        message: String,
    },

    #[error("consistency error at row {row}: d = 0 but y = {y}")]
    Consistency { row: usize, y: f64 },

    #[error("degenerate design: {0}")]
    DegenerateDesign(String),

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error("identification assumption violated: {0}")]
    AssumptionViolation(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}

impl Error {
    /// Copies an error so one failure can be reported by several consumers.
    pub fn from_ref(e: &Error) -> Error {
        match e {
            Error::InvalidArgument(s) => Error::InvalidArgument(s.clone()),
            Error::Schema { row, column, message } => Error::Schema {
                row: *row,
                column: column.clone(),
                message: message.clone(),
            },
            Error::Consistency { row, y } => Error::Consistency { row: *row, y: *y },
            Error::DegenerateDesign(s) => Error::DegenerateDesign(s.clone()),
            Error::Calibration(s) => Error::Calibration(s.clone()),
            Error::AssumptionViolation(s) => Error::AssumptionViolation(s.clone()),
            Error::Config(s) => Error::Config(s.clone()),
            Error::Io(io) => Error::Io(std::io::Error::new(io.kind(), io.to_string())),
            other => Error::InvalidArgument(other.to_string()),
        }
    }
}
