use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Input that violates a documented precondition or type invariant.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A malformed data row; `row` is 1-based and counts the header line.
    #[error("row {row}{}: {message}", field.as_ref().map(|f| format!(", field `{f}`")).unwrap_or_default())]
    Row {
        row: usize,
        field: Option<String>,
        message: String,
    },

    #[error("missing data: {0}")]
    MissingData(String),

    /// A parameter outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("undefined ratio: {0}")]
    UndefinedRatio(String),

    #[error("calibration infeasible: {0}")]
    CalibrationInfeasible(String),

    #[error("degenerate variance: {0}")]
    DegenerateVariance(String),

    #[error("bandwidth required: {0}")]
    BandwidthRequired(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// True for errors caused by malformed or inconsistent input data, as
    /// opposed to a computation that cannot be carried out.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidInput(_) | Error::Row { .. } | Error::MissingData(_) | Error::Io(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        let row = e.position().map(|p| p.line() as usize);
        match row {
            Some(row) => Error::Row {
                row,
                field: None,
                message: e.to_string(),
            },
            None => Error::Io(e.to_string()),
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::InvalidInput(e.to_string())
    }
}
