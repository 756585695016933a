use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("field of order {p}^{degree} exceeds the configured bound {bound}")]
    BoundExceeded { p: u32, degree: usize, bound: u64 },

    #[error("level {0} has not been constructed")]
    MissingLevel(usize),

    #[error("cannot embed level {from} into level {to}: {from} does not divide {to}")]
    IncompatibleLevels { from: usize, to: usize },

    #[error("{0} is not a prime")]
    NotPrime(u32),

    #[error("variable index {index} out of range for {vars} variables")]
    IndexOutOfRange { index: usize, vars: usize },

    #[error("expected {expected} coordinates, got {got}")]
    CoordinateCount { expected: usize, got: usize },

    #[error("point has no invertible coordinate")]
    NoInvertibleCoordinate,

    #[error("polynomial is not homogeneous: {0}")]
    NotHomogeneous(String),

    #[error("enumeration of {size} candidates at level {level} exceeds budget {budget}")]
    BudgetExceeded { level: usize, size: u128, budget: u64 },

    #[error("scheme dimension must be given when closed equations are present")]
    MissingDimension,

    #[error("not smooth of dimension {m} at {point}: Jacobian rank {rank}, expected {expected}")]
    NotSmooth { point: String, m: usize, rank: usize, expected: usize },

    #[error("point {0} does not lie on V = Z ∩ U")]
    NotOnV(String),

    #[error("no stabilization S_1·I_d = I_(d+1) observed below d_max = {0}")]
    WindowTooSmall(usize),

    #[error("Y∩Z=∅ violated: Y point {0} lies on Z")]
    YMeetsZ(String),

    #[error("jet-space guard tripped at {point}: {observed} != {expected} (generators may not be saturated)")]
    NonSaturated { point: String, observed: String, expected: String },

    #[error("exhaustive enumeration needs {bits:.1} bits, cap is {cap}")]
    CapExceeded { bits: f64, cap: u32 },

    #[error("count horizon {horizon} is below r = {r}")]
    HorizonTooSmall { horizon: usize, r: usize },

    #[error("local condition set: {0}")]
    BadConditions(String),

    #[error("trial count must be positive")]
    NoTrials,

    #[error("{0}")]
    Invalid(String),
}
