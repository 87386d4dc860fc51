use thiserror::Error;

/// Errors raised by model construction, solvers and oracles.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Parameters or states outside the model's valid domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// A visit function was not defined where the recurrence needs it.
    #[error("evaluation error: {0}")]
    Evaluation(String),

    /// The request exceeds a declared capability (e.g. quadrature dimension).
    #[error("capability error: {0}")]
    Capability(String),

    /// The requested configuration cannot deliver the required accuracy.
    #[error("accuracy error: {0}")]
    Accuracy(String),

    /// Fixed-point iteration hit its iteration budget before converging.
    #[error("iteration error: no convergence after {iterations} iterations (last update {last_update:e})")]
    Iteration { iterations: usize, last_update: f64 },

    /// A simulated walk exceeded the hard step cap.
    #[error("simulation error: {0}")]
    Simulation(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
