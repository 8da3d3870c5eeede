use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}:{line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },

    #[error("face {face} is degenerate (area {area:e} m^2)")]
    DegenerateFace { face: usize, area: f64 },

    #[error("face {face} references vertex {index} but mesh has {count} vertices")]
    IndexOutOfRange { face: usize, index: usize, count: usize },

    #[error("face {face} duplicates face {other}")]
    DuplicateFace { face: usize, other: usize },

    #[error("vertex {0} has no incident faces")]
    IsolatedVertex(usize),

    #[error("spatial index needs at least one point")]
    EmptyPointSet,

    #[error("vertices {i} and {j} coincide (distance {distance:e} m)")]
    CoincidentPair { i: usize, j: usize, distance: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("skinning weights of vertex {vertex} are invalid: {reason}")]
    InvalidWeights { vertex: usize, reason: String },

    #[error("solver diverged at stage {stage}, iteration {iteration}: {reason}")]
    Divergence {
        stage: usize,
        iteration: usize,
        reason: String,
    },

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }
}
