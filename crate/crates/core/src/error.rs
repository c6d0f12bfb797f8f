use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("matrix is not positive semidefinite (min eigenvalue {0:e})")]
    NotPositive(f64),

    #[error("trace {0} differs from 1")]
    TraceNotOne(f64),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("invalid probability data: {0}")]
    InvalidProbability(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{family} order {alpha} is outside the admitted range for dimension {dim}")]
    OrderOutOfRange {
        family: &'static str,
        alpha: f64,
        dim: usize,
    },

    #[error("unknown entropy functional `{0}`")]
    UnknownFunctional(String),

    #[error("unknown outcome label `{0}`")]
    UnknownOutcome(String),

    #[error("outcome `{label}` has probability {probability:e}")]
    ZeroProbabilityOutcome { label: String, probability: f64 },

    #[error("decision rule does not match the joint distribution: {0}")]
    LabelMismatch(String),

    #[error("bound requires the standard decision but the supplied rule has error {rule_error} vs {standard_error}")]
    RuleMismatch {
        rule_error: f64,
        standard_error: f64,
    },

    #[error("invalid projective observable: {0}")]
    NotProjective(String),

    #[error("completeness violated (residual {0:e})")]
    Incomplete(f64),

    #[error("observable is degenerate; the fidelity identity needs rank-one projectors")]
    DegenerateObservable,

    #[error("constraint violated: {0}")]
    ConstraintViolation(String),

    #[error("inadmissible parameters: {0}")]
    Admissibility(String),

    #[error("unknown trade-off relation `{0}`")]
    UnknownRelation(String),

    #[error("unknown correction strategy `{0}`")]
    UnknownStrategy(String),

    #[error("malformed input: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
