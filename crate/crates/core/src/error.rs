use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("size mismatch: expected {expected}, got {got}")]
    SizeMismatch { expected: usize, got: usize },
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("symbol is not finite at wave vector {0:?}")]
    NonFiniteSymbol(Vec<f64>),
    #[error("block index {j} outside resolvable range [{min}, {max}]")]
    BlockOutOfRange { j: i32, min: i32, max: i32 },
    #[error("composition domain violated: {0}")]
    CompositionDomain(String),
    #[error("density positivity lost: min(1 + a) = {0:.3e}")]
    DensityPositivity(f64),
    #[error("ellipticity violated: {0}")]
    Ellipticity(String),
    #[error("step rejected, retry with h = {suggested:.3e}")]
    StepRejected { suggested: f64 },
    #[error("{halvings} consecutive step halvings at t = {t:.4}")]
    RejectionCascade { halvings: usize, t: f64 },
    #[error("instability: {0}")]
    Instability(String),
    #[error("iteration diverged: {0}")]
    Divergence(String),
    #[error("Newton iteration failed at point {point}: residual {residual:.3e}")]
    NewtonFailure { point: usize, residual: f64 },
    #[error("Jacobian not positive: min J = {0:.3e}")]
    NonPositiveJacobian(f64),
    #[error("flow map is not a diffeomorphism: {0}")]
    NotDiffeomorphic(String),
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("refused: {0}")]
    Refused(String),
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
