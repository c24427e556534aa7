use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch in {op}: {left:?} vs {right:?}")]
    Dimension {
        op: &'static str,
        left: Vec<usize>,
        right: Vec<usize>,
    },

    #[error("invalid shape {shape:?} for {len} values")]
    Shape { shape: Vec<usize>, len: usize },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("sequence length {len} exceeds position-bias capacity {max}")]
    Capacity { len: usize, max: usize },

    #[error("constraint violation: {0}")]
    Constraint(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("feature `{feature}` is degenerate: {reason}")]
    DegenerateFeature { feature: String, reason: String },

    #[error(
        "optimizer failed to improve on its starting point \
         (best log-likelihood {best_loglik}, params {best_params:?})"
    )]
    FitFailure { best_params: Vec<f64>, best_loglik: f64 },

    #[error("non-finite gradient for parameter `{param}`")]
    NonFiniteGradient { param: String },

    #[error("training diverged at epoch {epoch}: {reason}")]
    Diverged { epoch: usize, reason: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
