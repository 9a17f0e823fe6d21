use thiserror::Error;

/// Errors raised by the numerical kernel and the identity registry.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("singular parameter {param} at index {index}")]
    SingularParameter { param: String, index: usize },

    #[error("series diverges: term magnitudes stopped decreasing after {terms} terms")]
    Divergence { terms: usize },

    #[error("series did not converge within {terms} terms")]
    NotConverged { terms: usize },

    #[error("boundary limit did not stabilize: {0}")]
    LimitDivergence(String),

    #[error("precision escalation exhausted at {bits} bits (last disagreement {deviation:e})")]
    EscalationExhausted { bits: u32, deviation: f64 },

    #[error("degenerate ratio: {0}")]
    Degenerate(String),

    #[error("no admissible solution: {0}")]
    NoSolution(String),

    #[error("point rejected: constraint `{0}` violated")]
    RejectedPoint(String),

    #[error("sampler starved for {id}: {attempts} rejections without an admissible point")]
    SamplerStarvation { id: String, attempts: usize },

    #[error("extrapolation failed: {0}")]
    ExtrapolationFailure(String),

    #[error("unknown identifier `{0}`")]
    Unknown(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// True for failures caused by the numerics (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Divergence { .. }
                | Error::NotConverged { .. }
                | Error::LimitDivergence(_)
                | Error::EscalationExhausted { .. }
                | Error::ExtrapolationFailure(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
