use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("derivative order {order} exceeds declared smoothness class {class}")]
    SmoothnessExceeded { order: usize, class: usize },

    #[error("derivative order {0} is above the supported maximum of 5")]
    OrderUnsupported(usize),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("non-positive metric factor {value:.6e} at s = {s}, offset = {offset:?}")]
    DegenerateMetric { s: f64, offset: [f64; 2], value: f64 },

    #[error("assumption violated: {0}")]
    AssumptionViolated(String),

    #[error("transverse point {offset:?} lies outside the cross-section")]
    OutsideCrossSection { offset: [f64; 2] },

    #[error("transverse node count must be odd so the centerline is a grid line, got {0}")]
    EvenTransverseCount(usize),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("{stage} did not converge after {iterations} iterations (best residual {best_residual:.3e})")]
    NotConverged {
        stage: &'static str,
        iterations: usize,
        best_residual: f64,
        history: Vec<f64>,
    },

    #[error("factorization failed: pivot {pivot:.3e} at row {row} (matrix not positive definite)")]
    NotPositiveDefinite { row: usize, pivot: f64 },

    #[error("dense oracle refused: {n} unknowns exceeds the limit of {limit}")]
    OracleTooLarge { n: usize, limit: usize },

    #[error("eigenfunction vanishes on the centerline at this resolution (empty mask)")]
    EmptyMask,

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed field file: {0}")]
    FieldFormat(String),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
