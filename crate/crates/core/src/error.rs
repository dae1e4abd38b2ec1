use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("potential validation failed: {}", .0.join("; "))]
    ValidationFailure(Vec<String>),

    #[error("bad initialization: {0}")]
    BadInit(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("symmetry mismatch: {0}")]
    SymmetryMismatch(String),

    #[error("snapshot format error at byte {offset}: {msg}")]
    FormatError { offset: u64, msg: String },

    #[error("energy became non-finite at iteration {iteration}")]
    NonFiniteEnergy { iteration: usize },

    #[error("transition layer touches the boundary ring (domain too small)")]
    DomainTooSmall,

    #[error("radius {radius} does not fit inside the grid around the center")]
    RadiusOutOfGrid { radius: f64 },

    #[error("ball of radius {radius} around the probe point leaves the grid")]
    BallOutOfGrid { radius: f64 },

    #[error("point is not on the free boundary: {0}")]
    NotOnFreeBoundary(String),

    #[error("degenerate fit: only {positive} positive points (need at least {needed})")]
    DegenerateFit { positive: usize, needed: usize },

    #[error("census domain does not fit in the grid: {0}")]
    GridTooSmall(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("config error at `{path}`: {msg}")]
    Config { path: String, msg: String },

    #[error("i/o error on {path:?}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
