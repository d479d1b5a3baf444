use thiserror::Error;

/// Errors produced anywhere in the discretization, factorization and solve pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum HpsError {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("invalid mesh configuration: {0}")]
    InvalidMesh(String),

    #[error("polynomial order p = {p} is below the minimum of {min}")]
    OrderTooSmall { p: usize, min: usize },

    #[error("leaf id {leaf} out of range (discretization has {count} leaves)")]
    LeafOutOfRange { leaf: usize, count: usize },

    #[error("operator has cross-derivative terms; corner dropping requires LegendreFaces mode")]
    CrossTermsRequireLegendre,

    #[error("coefficient field declared without cross terms but a nonzero mixed coefficient was found at {point:?}")]
    UndeclaredCrossTerms { point: Vec<f64> },

    #[error("non-finite coefficient at {point:?}")]
    NonFiniteCoefficient { point: Vec<f64> },

    #[error("interior block of leaf {leaf} is singular (zero pivot at elimination step {step})")]
    SingularLeaf { leaf: usize, step: usize },

    #[error("matrix is structurally singular: {0}")]
    StructurallySingular(String),

    #[error("matrix is numerically singular: no acceptable pivot at elimination step {step}")]
    NumericallySingular { step: usize },

    #[error("dimension mismatch: expected {expected}, got {got} ({context})")]
    DimensionMismatch {
        expected: usize,
        got: usize,
        context: &'static str,
    },

    #[error("memory budget of {budget} bytes cannot hold a single leaf workspace of {required} bytes")]
    BudgetTooSmall { budget: usize, required: usize },

    #[error("dense oracle cap exceeded: {dofs} unknowns > cap {cap}")]
    OracleCapExceeded { dofs: usize, cap: usize },

    #[error("invalid parameter map: {0}")]
    InvalidParameterMap(String),

    #[error("invalid problem: {0}")]
    InvalidProblem(String),

    #[error("invalid time-step configuration: {0}")]
    InvalidTimeStep(String),

    #[error("zero-norm reference in relative error")]
    ZeroNormReference,

    #[error("worker thread panicked")]
    WorkerPanicked,
}

pub type Result<T> = std::result::Result<T, HpsError>;
