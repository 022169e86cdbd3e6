use thiserror::Error;

/// Everything that can go wrong while building or validating the structures
/// in this crate.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid algebra: {0}")]
    InvalidAlgebra(String),

    #[error("map is not multiplicative: basis pair ({left}, {right}) has residual {residual:.3e}")]
    NotMultiplicative {
        left: usize,
        right: usize,
        residual: f64,
    },

    #[error("map is not *-preserving: basis element {index} has residual {residual:.3e}")]
    NotStarPreserving { index: usize, residual: f64 },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("element is not a projection (residual {0:.3e})")]
    NotProjection(f64),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("modules live over different base algebras")]
    BaseMismatch,

    #[error("endpoint mismatch: {0}")]
    EndpointMismatch(String),

    #[error("operator is not unitary (residual {0:.3e})")]
    NotUnitary(f64),

    #[error("operator is not right-linear (residual {0:.3e})")]
    NotRightLinear(f64),

    #[error("operator does not intertwine the left actions (residual {0:.3e})")]
    NotIntertwining(f64),

    #[error("left action is not unital (residual {0:.3e})")]
    NotUnital(f64),

    #[error("balanced map is not well defined on the tensor product (residual {0:.3e})")]
    NotBalanced(f64),

    #[error("unit condition violated at ({i}, {k}): {reason}")]
    UnitConditionViolated { i: usize, k: usize, reason: String },

    #[error("pentagon violated at ({i}, {j}, {k}, {l}) with residual {residual:.3e}")]
    PentagonViolated {
        i: usize,
        j: usize,
        k: usize,
        l: usize,
        residual: f64,
    },

    #[error("map {0:?} is not weakly increasing")]
    NotMonotone(Vec<usize>),

    #[error("horn cannot be filled: {0}")]
    Unfillable(String),

    #[error("horn faces are incompatible: {0}")]
    IncompatibleFaces(String),

    #[error("edge is not an equivalence: {0}")]
    NotAnEquivalence(String),

    #[error("dimension {got} exceeds the supported maximum {max}")]
    DimensionTooLarge { got: usize, max: usize },

    #[error("index {index} out of range for a simplex of dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("chain has invalid shape: {0}")]
    ShapeViolation(String),

    #[error("subsets are not nested: {0}")]
    NotNested(String),

    #[error("functoriality violated for chain {s:?} ⊆ {t:?} ⊆ {u:?} (residual {residual:.3e})")]
    FunctorialityViolated {
        s: Vec<usize>,
        t: Vec<usize>,
        u: Vec<usize>,
        residual: f64,
    },

    #[error("oracle failed to fill horn {0}")]
    OracleFillFailed(String),

    #[error("compatibility violated on chain {chain} at face {face}")]
    CompatibilityViolated { chain: String, face: usize },

    #[error("boundary mismatch: {0}")]
    BoundaryMismatch(String),

    #[error("functor is not C*-stable on the diagram: {0}")]
    NotStableOnDiagram(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("schema error at {location}: {message}")]
    Schema { location: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn schema(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema {
            location: location.into(),
            message: message.into(),
        }
    }
}
