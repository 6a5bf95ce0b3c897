use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("basis cap exceeded: {what} needs {needed} basis elements, cap is {cap}")]
    ResourceCap { what: String, needed: u128, cap: u128 },
    #[error("generator completion failed: {0}")]
    Completion(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("cache format error: {0}")]
    Cache(String),
}

pub type Result<T> = std::result::Result<T, Error>;
