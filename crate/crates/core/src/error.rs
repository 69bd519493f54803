use thiserror::Error;

use crate::linalg::LinalgError;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("invalid channel: {0}")]
    InvalidChannel(String),
    #[error("invalid precoder: {0}")]
    InvalidPrecoder(String),
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("precoder is identically zero")]
    ZeroPrecoder,
    #[error("precoder column {0} is zero")]
    ZeroColumn(usize),
    #[error("reference SINR of user {0} is not positive")]
    ZeroReferenceSinr(usize),
    #[error("user {0} receives zero signal")]
    ZeroSignal(usize),
    #[error("weights do not map to a boundary point: {0}")]
    InfeasibleWeights(String),
    #[error("z_jj = {z} for user {user} is too close to 1 for double precision")]
    InstabilityGuard { user: usize, z: f64 },
    #[error("every per-antenna constraint is tight")]
    NoSlackRow,
    #[error("improvement system is rank deficient")]
    RankDeficient,
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed file {path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
