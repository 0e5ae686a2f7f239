use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("undecodable bytecode: {0}")]
    Decode(String),
    #[error("assembly error at line {line}: {msg}")]
    Asm { line: usize, msg: String },
    #[error("malformed ABI: {0}")]
    Abi(String),
    #[error("loop unrolling exceeded the block budget of {budget} blocks")]
    UnrollBudget { budget: usize },
    #[error("empty generation")]
    EmptyGeneration,
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("report error: {0}")]
    Report(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
