use thiserror::Error;

use crate::gripper::Finger;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("point cloud is empty")]
    EmptyCloud,

    #[error("point cloud has no normals; estimate them first")]
    MissingNormals,

    #[error("invalid point cloud: {0}")]
    InvalidCloud(String),

    #[error("need at least {needed} points for this operation, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("degenerate neighbourhood around point {index}: all neighbours coincide")]
    DegenerateNeighborhood { index: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("correspondence matching left {finger} with {found} pairs (minimum {required})")]
    OneSidedCorrespondence {
        finger: Finger,
        found: usize,
        required: usize,
    },

    #[error("empty correspondence set")]
    EmptyCorrespondence,

    #[error("normal equations are singular")]
    SingularSystem,

    #[error("aperture update is degenerate: no object normal has a component along the finger axis")]
    DegenerateAperture,

    #[error("k-means produced an empty cluster")]
    EmptyCluster,

    #[error("no cluster survived filtering")]
    NoClusters,

    #[error("cluster shrank to {remaining} points (minimum {required})")]
    ClusterTooSmall { remaining: usize, required: usize },

    #[error("heading direction is degenerate after projection onto the table plane")]
    DegenerateHeading,

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
