use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Malformed or out-of-contract input (shape mismatch, bad parameter, unknown id).
    #[error("input error: {0}")]
    Input(String),

    /// A point outside the domain of a functional where a finite value is required.
    #[error("domain error at node {node}: {reason}")]
    Domain { node: usize, reason: String },

    /// An iterative solver or refinement loop gave up.
    #[error("numerical error: {message} (residual {residual:.3e})")]
    Numerical { message: String, residual: f64 },

    /// A step of a proximal chain failed.
    #[error("prox failure at step {step}: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    /// Segment samples did not settle while extracting a limiting ray.
    #[error("ray extraction did not stabilize (oscillation {oscillation:.3e} at ray time {ray_time})")]
    NonStabilizing { oscillation: f64, ray_time: f64 },

    /// A hypothesis of the two-functional pipeline does not hold.
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
}

impl Error {
    pub fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub fn numerical(msg: impl Into<String>, residual: f64) -> Self {
        Error::Numerical {
            message: msg.into(),
            residual,
        }
    }

    /// True for errors caused by the caller's configuration rather than the numerics.
    pub fn is_config(&self) -> bool {
        match self {
            Error::Input(_) | Error::Hypothesis(_) => true,
            Error::Step { source, .. } => source.is_config(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
