use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("forcing term is negative at index {index} (value {value:e})")]
    NegativeForcing { index: usize, value: f64 },

    #[error("zero pivot at row {row} in tridiagonal solve")]
    ZeroPivot { row: usize },

    #[error("singular banded system at column {column}")]
    SingularBanded { column: usize },

    #[error("Newton iteration did not converge in {iterations} iterations (residual {residual:e})")]
    MaxIterations {
        iterations: usize,
        residual: f64,
        history: Vec<f64>,
    },

    #[error("non-finite value produced at iteration {iteration}")]
    NonFinite { iteration: usize },

    #[error("continuation step underflow at r = {reached} (step {step:e})")]
    StepUnderflow { reached: f64, step: f64 },

    #[error("loop violates the mean-Hamiltonian constraint: |mean H| = {violation:e} > {tolerance:e}")]
    ConstraintViolated { violation: f64, tolerance: f64 },

    #[error("lifted angle is discontinuous at sample {index} (jump {jump})")]
    LiftInconsistent { index: usize, jump: f64 },

    #[error("rotation {rotation} is not a multiple of the grid spacing 1/{points}")]
    IncompatibleRotation { rotation: f64, points: usize },

    #[error("iteration by {factor} aliases on a {points}-point circle grid")]
    Aliasing { factor: usize, points: usize },

    #[error("loops do not share a basepoint (distance {distance:e})")]
    BasepointMismatch { distance: f64 },

    #[error("incompatible windings {0} and {1}")]
    IncompatibleWinding(i64, i64),

    #[error("b profile is negative beyond tolerance (min {min:e})")]
    NegativeProfile { min: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
