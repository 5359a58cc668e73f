use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("malformed input: {0}")]
    Malformed(String),
    #[error("not a premap: {0}")]
    NotPreMap(String),
    #[error("domain mismatch")]
    DomainMismatch,
    #[error("term cap exceeded: {needed} terms > cap {cap}")]
    CapExceeded { needed: u128, cap: u128 },
    #[error("not bracketable: {0}")]
    NotBracketable(crate::bracket::Obstruction),
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("manifest error: {0}")]
    Manifest(String),
    #[error("Gram matrix singular at N = {0}")]
    SingularGram(u64),
    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
