use thiserror::Error;

/// Errors raised anywhere in the curvature pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdentifier { name: String, offset: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("jet order exhausted: {0}")]
    OrderExhausted(String),

    #[error("variance error: {0}")]
    Variance(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("singular metric: {0}")]
    SingularMetric(String),

    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("unknown chart kind `{0}`")]
    UnknownChartKind(String),

    #[error("invalid chart: {0}")]
    InvalidChart(String),

    #[error("not conformal Killing: {0}")]
    NotConformalKilling(String),

    #[error("invalid quadrature spec: {0}")]
    Quadrature(String),

    #[error("evaluation failed at node {coords:?}: {source}")]
    NodeEvaluation { coords: Vec<f64>, source: Box<Error> },

    #[error("non-finite value at node {0:?}")]
    NonFiniteValue(Vec<f64>),
}

pub type Result<T> = std::result::Result<T, Error>;
