use thiserror::Error;

/// Errors raised by population handling, estimation, theory and I/O.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid population frame: {0}")]
    InvalidFrame(String),
    #[error("attribute is degenerate (P = {0}); need 0 < P < 1")]
    DegenerateAttribute(f64),
    #[error("auxiliary variable has zero variance")]
    DegenerateAuxiliary,
    #[error("auxiliary population mean is zero")]
    ZeroMean,
    #[error("invalid design: n = {n}, N = {population}; need 2 <= n <= N")]
    InvalidDesign { n: usize, population: usize },
    #[error("duplicate sample index {0}")]
    DuplicateIndex(usize),
    #[error("sample index {index} out of range for population of size {population}")]
    IndexOutOfRange { index: usize, population: usize },
    #[error("sample mean of the auxiliary variable is zero")]
    ZeroSampleMean,
    #[error("transformed auxiliary mean is not strictly positive ({0})")]
    NonpositiveTransform(f64),
    #[error("base of a real power is not strictly positive ({0})")]
    NonpositiveBase(f64),
    #[error("moment denominator (lambda04 - 1 - lambda03^2) = {0} is not positive")]
    DegenerateMoments(f64),
    #[error("singular system in optimal-constant solve (determinant {0:e})")]
    SingularSystem(f64),
    #[error("first-order MSE evaluates to a negative value ({value:e}) for {estimator}")]
    NegativeMse { estimator: String, value: f64 },
    #[error("MSE must be strictly positive for a relative efficiency, got {0:e}")]
    NonpositiveMse(f64),
    #[error("{subsets} subsets exceed the enumeration limit of {limit}")]
    TooLarge { subsets: u128, limit: u128 },
    #[error("synthetic population stayed degenerate after {0} attempts")]
    DegenerateGeneration(u32),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("schema error: {0}")]
    Schema(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// True for failures of the numerics rather than of the input data.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::SingularSystem(_)
                | Error::NegativeMse { .. }
                | Error::NonpositiveMse(_)
                | Error::DegenerateMoments(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
