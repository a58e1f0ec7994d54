use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("signature error: {0}")]
    Signature(String),

    #[error("structure error: {0}")]
    Structure(String),

    #[error("search budget exceeded after {nodes} nodes")]
    BudgetExceeded { nodes: u64 },

    #[error("size cap exceeded: {0}")]
    CapExceeded(String),

    #[error("amalgamation error: {0}")]
    Amalgam(String),

    #[error("class framework error: {0}")]
    Class(String),

    #[error("builder error: {0}")]
    Builder(String),

    #[error("parse error at {line}:{col}: {msg}")]
    Parse { line: usize, col: usize, msg: String },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}
