use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("true parameter assigns zero density to the observed sample")]
    NonDominated,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("densities live on different grids ({0} vs {1} points)")]
    GridMismatch(usize, usize),
    #[error("empty list")]
    EmptyList,
    #[error("product space has {states} states, limit is {limit}")]
    StateSpaceTooLarge { states: f64, limit: usize },
    #[error("matrix is not symmetric positive definite")]
    NotPositiveDefinite,
    #[error("{what} = {value} outside [{lo}, {hi}]")]
    OutOfRange {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error("{what} is not supported by {by}")]
    UnsupportedKind { what: String, by: String },
    #[error("Monte Carlo budget must be positive")]
    BudgetZero,
    #[error("every parameter has zero likelihood")]
    AllZeroLikelihood,
    #[error("effective sample size {ess:.2} below 10{}", at.map(|n| format!(" at n = {n}")).unwrap_or_default())]
    DegenerateEss { ess: f64, at: Option<usize> },
    #[error("parameter outside prior support")]
    OutOfSupport,
    #[error("metric violates d^2 <= -(2/n) log(1 - H^2/2) for pair ({0}, {1})")]
    MetricViolatesIneq1(usize, usize),
    #[error("density-ratio bounds certificate invalid: {0}")]
    BoundsCertificateInvalid(String),
    #[error("neighborhood has zero prior mass")]
    EmptyNeighborhood,
    #[error("regression function sup {sup} exceeds amplitude bound {bound}")]
    AmplitudeExceeded { sup: f64, bound: f64 },
    #[error("quadrature did not converge")]
    QuadratureFailure,
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("invalid pmf: {0}")]
    InvalidPmf(String),
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
}

pub type Result<T> = std::result::Result<T, Error>;
