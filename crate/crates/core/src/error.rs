use thiserror::Error;

/// Errors raised anywhere in the toolkit. Each variant names the stage that
/// produced it so front ends can report a module-tagged message.
#[derive(Debug, Error)]
pub enum Error {
    #[error("topology: {0}")]
    Topology(String),

    #[error("topology: embedding inconsistency: {0}")]
    Embedding(String),

    #[error("topology: cut is invalid: {0}")]
    InvalidCut(String),

    #[error("topology: edge set is not an odd-vertex pairing (remaining graph is not bipartite)")]
    NotBipartite,

    #[error("suppression: {0}")]
    Suppression(String),

    #[error("suppression: graph with {0} vertices is too large for exhaustive search (limit 20)")]
    TooLarge(usize),

    #[error("circuit: line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("circuit: {0}")]
    Circuit(String),

    #[error("scheduler: {0}")]
    Schedule(String),

    #[error("pulse: {0}")]
    Pulse(String),

    #[error("sim: {0}")]
    Sim(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
