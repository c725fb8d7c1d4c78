use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unknown kernel `{0}`")]
    UnknownKernel(String),
    #[error("kernel `{kernel}` takes no parameter `{name}`")]
    UnknownParameter { kernel: String, name: String },
    #[error("missing parameter `{0}`")]
    MissingParameter(String),
    #[error("parameter `{name}` = {value} is out of range ({expected})")]
    ParameterOutOfRange {
        name: String,
        value: f64,
        expected: &'static str,
    },
    #[error("layer index {index} out of range for {layers} layer(s)")]
    LayerOutOfRange { index: usize, layers: usize },
    #[error("need at least {required} vertices, got {n}")]
    TooFewVertices { n: usize, required: usize },
    #[error("invalid hypergraph: {0}")]
    InvalidHypergraph(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
}

pub type Result<T> = std::result::Result<T, Error>;
