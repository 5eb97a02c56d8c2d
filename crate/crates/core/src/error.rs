use thiserror::Error;

/// Errors raised by the field evaluators, solvers and integrators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("coincident points: separation {distance:e} is below the singular radius {radius:e}")]
    CoincidentPoints { distance: f64, radius: f64 },

    #[error("point lies on the source axis: in-plane distance {distance:e} is below the singular radius {radius:e}")]
    OnAxis { distance: f64, radius: f64 },

    #[error("path passes through the source axis at segment {segment}")]
    AxisCrossing { segment: usize },

    #[error("out of regime: {0}")]
    OutOfRegime(String),

    #[error("singular linear system: {0}")]
    SingularSystem(String),

    #[error("finite-difference step failure: {0}")]
    StepFailure(String),

    #[error("quadrature did not converge: {0}")]
    NonConvergence(String),

    #[error("step size underflow at t = {t:e} (h = {h:e}); state: {state}")]
    StepSizeUnderflow { t: f64, h: f64, state: String },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
