use crate::model::Vec2;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Failures surfaced by the numerical routines.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("fixed-point iteration stalled after {iterations} iterations (residual {residual:.3e}, last iterate ({:.6}, {:.6}))", last.x, last.y)]
    NoConvergence {
        iterations: usize,
        residual: f64,
        last: Vec2,
    },

    #[error("Lagrangian ascent stalled after {iterations} iterations (gradient norm {grad_norm:.3e})")]
    AscentStalled { iterations: usize, grad_norm: f64 },

    #[error("step size underflow at t = {t} (h = {step:.3e})")]
    StepSizeUnderflow { t: f64, step: f64, state: Vec<f64> },

    #[error("singular linearization: 2x2 determinant {determinant:.3e}")]
    Singular { determinant: f64 },

    #[error("exponent overflow: momentum difference {0} exceeds the +-700 cap")]
    Overflow(f64),

    #[error("parameter regime violation: {0}")]
    Regime(String),

    #[error("simulation aborted at t = {t} after {events} events: {source}")]
    SimulationAborted {
        t: f64,
        events: usize,
        #[source]
        source: Box<Error>,
        partial: Box<crate::stochastic::JumpPath>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// Whether the error comes from an iterative method that failed to converge.
    pub fn is_convergence_failure(&self) -> bool {
        match self {
            Error::NoConvergence { .. }
            | Error::AscentStalled { .. }
            | Error::StepSizeUnderflow { .. }
            | Error::Singular { .. } => true,
            Error::SimulationAborted { source, .. } => source.is_convergence_failure(),
            _ => false,
        }
    }
}
