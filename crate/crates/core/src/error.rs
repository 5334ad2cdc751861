use thiserror::Error;

/// Every failure mode of the toolkit.
///
/// Variants are grouped by the layer that raises them, but a single enum is
/// shared so that the command-line front end can map outcomes to exit codes
/// in one place.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeoError {
    // linalg
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix pencil is singular (det(sU1 - U2) vanishes identically)")]
    SingularPencil,
    #[error("generalized eigenvalue {re:+.3e}{im:+.3e}i is too close to the region boundary to classify")]
    BoundaryAmbiguity { re: f64, im: f64 },

    // sysmodel
    #[error("shape mismatch in {field}: {detail}")]
    ShapeMismatch { field: String, detail: String },
    #[error("non-finite entry in {field} at ({row}, {col})")]
    NonFiniteEntry {
        field: String,
        row: usize,
        col: usize,
    },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },

    // markov
    #[error("Markov parameter matrix order must be at least 1")]
    InvalidOrder,
    #[error("space of admissible impulsive inputs is infinite-dimensional (kernel dimensions {kernel_dims:?} exceed n = {n})")]
    InfiniteImpulsiveSpace { n: usize, kernel_dims: Vec<usize> },
    #[error("input has no coefficient left to shift")]
    NothingToShift,
    #[error("input has fewer than two coefficients, so the state has no impulsive part")]
    NoImpulsivePart,
    #[error("impulsive input is not admissible")]
    NotAdmissible,

    // shared by markov / slowspace / transferdim
    #[error("numerical inconsistency: {0}")]
    NumericalInconsistency(String),
    #[error("system is not square (p = {p}, m = {m})")]
    NotSquare { p: usize, m: usize },
    #[error("transfer matrix is not left-invertible")]
    NotLeftInvertible,
    #[error("no transfer-matrix dimension formula applies to this system")]
    Inapplicable,
}

pub type Result<T> = std::result::Result<T, GeoError>;
