use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Failure modes shared by every module of the crate.
///
/// Most of the numerical variants signal a non-generic parameter point rather
/// than a bug: the caller asked for a factorization or a transformation that
/// does not exist at that point (a vanishing pivot, a colliding spectrum).
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix entry ({row}, {col}) is not finite")]
    NonFinite { row: usize, col: usize },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("matrix is singular")]
    Singular,
    #[error("leading principal minor {0} vanishes (zero pivot)")]
    ZeroPivot(usize),
    #[error("matrix is not diagonalizable (eigenvalue {re}{im:+}i is defective)")]
    NotDiagonalizable { re: f64, im: f64 },
    #[error("system cannot be written as Q(x-T)^-1 P + S: {0}")]
    NotRealizable(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("invalid system: {0}")]
    InvalidSystem(String),
    #[error("invalid spectral type: {0}")]
    InvalidType(String),
    #[error("type has no shape admissible for the Laplace move: {0}")]
    ShapeMismatch(String),
    #[error("partitions {0} and {1}: neither refines the other")]
    NotARefinement(String, String),
    #[error("degenerate Moebius map (ad - bc = 0)")]
    DegenerateMap,
    #[error("separation parameter must be nonzero")]
    ZeroEpsilon,
    #[error("spectral collision: {0}")]
    SpectralCollision(String),
    #[error("kernel of theta_inf1 + M^T has dimension {0}, expected 1")]
    KernelDimension(usize),
    #[error("division by a vanishing quantity: {0}")]
    DivideByZero(String),
    #[error("no multiplier realizes the requested shift: {0}")]
    NoSolution(String),
    #[error("multiplier is not unique up to the diagonal torus: {0}")]
    NonUnique(String),
    #[error("Hamiltonian has a pole: t1 = t2")]
    PoleAtCoincidence,
    #[error("invalid Garnier state: {0}")]
    InvalidState(String),
    #[error("integrator step fell below the floor at path parameter {0}")]
    StepFloor(f64),
    #[error("path passes too close to a singular point: {0}")]
    PathTooClose(String),
    #[error("parse error: {0}")]
    Parse(String),
}
