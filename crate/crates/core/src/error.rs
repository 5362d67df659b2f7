use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("non-finite input: {0}")]
    NonFinite(&'static str),

    #[error("vector is not a unit vector (|x| = {norm})")]
    NotUnit { norm: f64 },

    #[error("quadrature did not converge (achieved error {achieved:.3e}, requested {requested:.3e})")]
    Quadrature { achieved: f64, requested: f64 },

    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64 },

    #[error("missing moment of order {0}")]
    MissingMoment(f64),

    #[error("not enough points for a fit: {got} < {need}")]
    TooFewPoints { got: usize, need: usize },

    #[error("{0}")]
    Undefined(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
