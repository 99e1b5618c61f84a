use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("value out of bounds: {0}")]
    Bounds(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("game too large for enumeration: {rows}x{cols} (limit {limit}x{limit})")]
    Size { rows: usize, cols: usize, limit: usize },
    #[error("degenerate game: {0}")]
    Degenerate(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("step size underflow at t = {t}")]
    Stiffness { t: f64, last_state: Vec<f64> },
    #[error("not enough data: {0}")]
    TooFewSamples(String),
    #[error("inconclusive: {0}")]
    Inconclusive(String),
    #[error("invalid input: {0}")]
    Parse(String),
    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
