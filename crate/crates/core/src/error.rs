use thiserror::Error;

/// Errors raised by the state, operator and probability routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("state is not normalized: squared norm {norm_sqr}")]
    NotNormalized { norm_sqr: f64 },

    #[error("invalid projector: {0}")]
    InvalidProjector(String),

    #[error("dimension {dim} exceeds the dense limit {cap}")]
    SizeLimit { dim: u128, cap: usize },

    #[error("too many copies for eigen-projector enumeration: {n} > {cap}")]
    TooManyCopies { n: usize, cap: usize },

    #[error("expectation value has imaginary part {imag:e}; operator is not Hermitian")]
    ComplexExpectation { imag: f64 },

    #[error("{name} = {value} is out of range ({expected})")]
    OutOfRange {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("probability p = {0} is extreme; only 0 < p < 1 is admissible here")]
    ExtremeProbability(f64),

    #[error("outcome {outcome} is unreachable: projected norm is zero")]
    UnreachableOutcome { outcome: bool },

    #[error("{what} disagree by {deviation:e}")]
    Inconsistent { what: &'static str, deviation: f64 },

    #[error("eigen-projector family does not match the operator: {0}")]
    MismatchedFamily(String),

    #[error("eigenvalue iteration did not converge for dimension {dim}")]
    Diagonalization { dim: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("csv output failed: {0}")]
    Csv(String),
}

impl From<csv::Error> for Error {
    fn from(err: csv::Error) -> Self {
        Error::Csv(err.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_range(
    name: &'static str,
    value: f64,
    ok: bool,
    expected: &'static str,
) -> Result<()> {
    if ok && value.is_finite() {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            name,
            value,
            expected,
        })
    }
}
