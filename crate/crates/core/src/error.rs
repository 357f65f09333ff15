use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("the set is empty")]
    EmptySet,

    #[error("point is not in the set (distance {distance:e} exceeds {tol:e})")]
    NotInSet { distance: f64, tol: f64 },

    #[error("point already lies in the sublevel set (f = {value})")]
    InSet { value: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("perturbation too large: L = {lipschitz} must be below {limit}")]
    InvalidPerturbation { lipschitz: f64, limit: f64 },

    #[error("no admissible samples out of {tried}")]
    NoAdmissibleSamples { tried: usize },

    #[error("the constraint set is not polyhedral")]
    NotPolyhedral,

    #[error("the base map is not affine")]
    NotAffine,

    #[error("unknown instance `{0}`")]
    UnknownInstance(String),

    #[error("lattice of {points} points exceeds the cap of {cap}")]
    GridTooLarge { points: u128, cap: u128 },

    #[error("dimension {dim} exceeds the oracle cap of {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("simplex iteration limit reached ({0} pivots)")]
    CycleLimit(usize),

    #[error("parameter {param}: {source}")]
    AtParameter { param: f64, source: Box<Error> },
}

impl Error {
    /// Internal guards (lattice cap, pivot limit) as opposed to bad input.
    pub fn is_guard(&self) -> bool {
        match self {
            Error::GridTooLarge { .. } | Error::DimensionCap { .. } | Error::CycleLimit(_) => true,
            Error::AtParameter { source, .. } => source.is_guard(),
            _ => false,
        }
    }
}
