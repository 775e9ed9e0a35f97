use crate::tree::NodeId;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("tree would have {requested} nodes, above the materialization limit of {limit}")]
    LimitExceeded { requested: u64, limit: u64 },

    #[error("nodes {0} and {1} are not comparable")]
    NotComparable(NodeId, NodeId),

    #[error("edge list line {line}: {reason}")]
    EdgeList { line: usize, reason: String },

    #[error("weights line {line}: {reason}")]
    WeightsFile { line: usize, reason: String },

    #[error("sigma increases along {} edge(s), first (parent, child) = {:?}", .edges.len(), .edges.first())]
    SigmaNotMonotone { edges: Vec<(NodeId, NodeId)> },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("outside domain: {0}")]
    Domain(String),

    #[error("hypothesis fails at node {node}: {detail}")]
    Hypothesis { node: NodeId, detail: String },

    #[error("exact set cover limited to {limit} candidates, instance has {got}")]
    ExactLimit { limit: usize, got: usize },

    #[error("certificate is not verified")]
    Unverified,

    #[error("construction failed verification: {0}")]
    Verification(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
