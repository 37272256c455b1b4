use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("paperclip generation exhausted after {attempts} attempts (class {class_id})")]
    GenerationExhausted { class_id: u64, attempts: u32 },
    #[error("degenerate object: all vertices coincide")]
    DegenerateObject,
    #[error("point {index} is behind the camera (depth {depth})")]
    BehindCamera { index: usize, depth: f64 },
    #[error("mesh has no triangles")]
    EmptyMesh,
    #[error("image size mismatch: {left:?} vs {right:?}")]
    SizeMismatch {
        left: (u32, u32, u8),
        right: (u32, u32, u8),
    },
    #[error("view library is empty")]
    EmptyLibrary,
    #[error("training views span rank {rank} < 3 (class {class_id})")]
    DegenerateSpan { class_id: u64, rank: usize },
    #[error("need at least {needed} views, got {got}")]
    InsufficientViews { needed: usize, got: usize },
    #[error("measurement matrix is rank deficient (sigma3/sigma1 = {ratio:e})")]
    RankDeficient { ratio: f64 },
    #[error("singular value decomposition did not converge")]
    NoConvergence,
    #[error("training loss diverged at epoch {epoch}")]
    DivergedLoss { epoch: usize },
    #[error("manifest lacks pose {pose} for class {class_id}")]
    MissingPoses { class_id: u64, pose: String },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("condition {condition} (seed {seed}): {source}")]
    Condition {
        condition: String,
        seed: u64,
        #[source]
        source: Box<Error>,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: image::ImageError,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
