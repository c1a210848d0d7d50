use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("{name} = {value} is out of range (expected {range})")]
    OutOfRange {
        name: &'static str,
        value: String,
        range: String,
    },

    #[error("duplicate target site {0}")]
    DuplicateTarget(usize),

    #[error("measurement outcome {outcome} on site {site} has probability {probability:e}")]
    ZeroProbability {
        site: usize,
        outcome: usize,
        probability: f64,
    },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not unitary (max deviation {deviation:e} > {tol:e})")]
    NotUnitary { deviation: f64, tol: f64 },

    #[error("state has zero norm")]
    ZeroNorm,

    #[error("non-finite parameter at index {0}")]
    NonFinite(usize),

    #[error("invalid argument: {0}")]
    Invalid(String),
}

impl Error {
    pub(crate) fn out_of_range(
        name: &'static str,
        value: impl ToString,
        range: impl ToString,
    ) -> Self {
        Error::OutOfRange {
            name,
            value: value.to_string(),
            range: range.to_string(),
        }
    }
}
