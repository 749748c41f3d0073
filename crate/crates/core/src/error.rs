use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid size {0} must be even and at least 16")]
    InvalidGrid(usize),

    #[error("fields live on different grids (n = {0} vs n = {1})")]
    GridMismatch(usize, usize),

    #[error("expected {expected} samples, got {got}")]
    ShapeMismatch { expected: usize, got: usize },

    #[error("non-finite sample at index {0}")]
    NonFinite(usize),

    #[error("field mean {mean:e} exceeds the zero-mean tolerance {tol:e}")]
    NotMeanZero { mean: f64, tol: f64 },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid bump: {0}")]
    InvalidBump(String),

    #[error("invalid eps list: {0}")]
    InvalidEpsList(String),

    #[error("invalid minimax options: {0}")]
    InvalidOptions(String),

    #[error("parameters ({0}, {1}) lie outside the admissible region")]
    OutsideRegion(f64, f64),

    #[error("max(lambda1, lambda2) = {0} does not exceed 8*pi; the energy is bounded below")]
    BoundedBelow(f64),

    #[error("no scanned bubble reached negative energy (best total {best_total:.6} at eps {best_eps:e})")]
    NoNegativeEndpoint { best_total: f64, best_eps: f64 },

    #[error("deformation stagnated: step fell below {min_step:e} at node {node}")]
    Stagnation { node: usize, min_step: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
