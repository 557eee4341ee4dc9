use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter or configuration value outside its admissible range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Two objects that must share a radial grid do not.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// The seed cannot be moved onto the requested level set.
    #[error("infeasible seed for level {level}: {reason}")]
    Infeasible { level: f64, reason: String },

    /// An iterative method ran out of budget; `best` is the last usable estimate.
    #[error("{method} did not converge after {iterations} iterations (best value {best:e})")]
    NotConverged {
        method: &'static str,
        iterations: usize,
        best: f64,
    },

    /// The sampled level curve never changes sign, so the upper root cannot be located.
    #[error("no sign change of i - lambda in [{lambda_min:e}, {lambda_max:e}]; widen the sweep")]
    NoSignChange { lambda_min: f64, lambda_max: f64 },

    /// Path deformation could not make progress even with the smallest allowed step.
    #[error("path deformation stagnated after {sweeps} sweeps at max energy {max_energy:e}")]
    Stagnated { sweeps: usize, max_energy: f64 },

    #[error("parse error: {0}")]
    Parse(String),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
