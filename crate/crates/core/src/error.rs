use thiserror::Error;

/// Errors raised by the simulation laboratory.
#[derive(Debug, Error)]
pub enum Error {
    /// A model or run parameter is outside its admissible range.
    #[error("parameter error: {0}")]
    Parameter(String),
    /// An argument is outside the domain of the operation (bad site, bad time).
    #[error("domain error: {0}")]
    Domain(String),
    /// A precondition on the inputs of an operation does not hold.
    #[error("precondition error: {0}")]
    Precondition(String),
    /// The parameter point is excluded for this construction.
    #[error("excluded regime: {0}")]
    ExcludedRegime(String),
    /// The process is only defined for nearest-neighbour interactions.
    #[error("unsupported interaction range M={0}: only M=1 is supported")]
    UnsupportedRange(usize),
    /// Malformed input file.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    /// Failure while reading or writing a file.
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by bad user-supplied parameters.
    pub fn is_parameter_error(&self) -> bool {
        !matches!(self, Error::Io(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param(msg: impl Into<String>) -> Error {
    Error::Parameter(msg.into())
}
