use thiserror::Error;

/// Errors raised by the synthesis, calibration and simulation layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("shape error: expected length {expected}, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("quadrature did not converge (achieved error estimate {achieved:.3e})")]
    Quadrature { achieved: f64 },

    #[error("calibration failed: {inequality} violated at {witness:?} (value {value:.6e})")]
    Calibration {
        inequality: String,
        witness: Vec<f64>,
        value: f64,
    },

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("simulation diverged at t = {time}: last finite state {last_state:?}")]
    Divergence { time: f64, last_state: Vec<f64> },

    #[error("trajectory channel missing: {0}")]
    MissingChannel(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Shape { expected, got })
    }
}
