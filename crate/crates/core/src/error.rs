use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("H' entry {value} at axis {axis}, interval {index} lies outside (0, 1)")]
    InvalidHurstPrime { axis: usize, index: usize, value: f64 },

    #[error("scale parameter {value} on axis {axis} must exceed 1")]
    InvalidScale { axis: usize, value: f64 },

    #[error("Hurst exponent {value} on axis {axis} is not admissible")]
    InvalidHurst { axis: usize, value: f64 },

    #[error("length mismatch for {what}: expected {expected}, found {found}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid field data: {0}")]
    InvalidField(String),

    #[error("point ({0}, {1}) is not on the sampling lattice")]
    OffLattice(f64, f64),

    #[error("dilation ({0}, {1}) is not a non-negative integer power of the lattice base")]
    NonLatticeScale(f64, f64),

    #[error("point ({0}, {1}) lies outside the modeled domain")]
    OutOfDomain(f64, f64),

    #[error("covariance matrix is not positive semidefinite (last jitter {jitter:e})")]
    FactorizationFailure { jitter: f64 },

    #[error("imaginary residue {0:e} exceeds tolerance")]
    NonRealResidue(f64),

    #[error("zero variance or zero lag-one correlation at axis {axis}, index {index}")]
    ZeroVariance { axis: usize, index: usize },

    #[error("negative lattice index {0}")]
    NegativeIndex(i64),

    #[error("series too short: need at least {needed} values, got {got}")]
    TooShort { needed: usize, got: usize },

    #[error("zero-length scale interval at breakpoint {0}")]
    DegenerateInterval(usize),

    #[error("ratio {0} must be positive and finite")]
    InvalidRatio(f64),

    #[error("scale {0} must be positive and different from 1")]
    UnitScale(f64),

    #[error("denominator vanishes in dyadic ratio for interval {0}")]
    ZeroDenominator(usize),

    #[error("breakpoint {0} is not an integer strip index")]
    NonIntegralBreakpoint(f64),

    #[error("rectangle ({0}, {1}) is missing")]
    MissingRectangle(usize, usize),

    #[error("cannot predict backwards from ({0}, {1}) to ({2}, {3})")]
    BackwardPrediction(usize, usize, usize, usize),

    #[error("actual value for rectangle ({0}, {1}) is zero")]
    ZeroActual(usize, usize),

    #[error("no rectangles left to evaluate")]
    EmptySet,

    #[error("ragged input: line {line} has {found} columns, expected {expected}")]
    Ragged {
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("non-numeric value {value:?} on line {line}")]
    NonNumeric { line: usize, value: String },

    #[error("negative value {value} on line {line}")]
    Negative { line: usize, value: f64 },

    #[error("breakpoint {value} outside the grid extent 0..{extent}")]
    OutOfExtent { value: f64, extent: usize },

    #[error("{0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
