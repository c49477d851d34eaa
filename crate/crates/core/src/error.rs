use thiserror::Error;

/// Errors raised by the curvature engine and its data model.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid direction matrix: {0}")]
    InvalidDirectionMatrix(String),

    #[error("full system matrix requested for n = {n}, limit is {limit}")]
    SizeLimit { n: usize, limit: usize },

    #[error("tensor is not symmetric in its {indices} indices (deviation {deviation:e})")]
    AsymmetricInput { indices: &'static str, deviation: f64 },

    #[error("invalid kernel profile: {0}")]
    InvalidProfile(String),

    #[error("quadrature did not converge (estimated error {estimate:e})")]
    Quadrature { estimate: f64 },

    #[error("invalid point cloud: {0}")]
    InvalidCloud(String),

    #[error("degenerate neighborhood at point {index}: {reason}")]
    DegenerateNeighborhood { index: usize, reason: String },

    #[error("zero mass radius at point {index}")]
    ZeroRadius { index: usize },

    #[error("isolated point {index}: kernel mass vanishes on its neighborhood")]
    IsolatedPoint { index: usize },

    #[error("scalar curvatures require codimension one, got d = {d}, n = {n}")]
    Codimension { d: usize, n: usize },

    #[error("junction direction {index} is not a unit vector (norm {norm})")]
    NonUnitDirection { index: usize, norm: f64 },

    #[error("unknown shape `{0}`")]
    UnknownShape(String),

    #[error("invalid convergence schedule: {0}")]
    InvalidSchedule(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
