use alloc::string::String;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Error {
    #[error("invalid rule: {0}")]
    InvalidRule(&'static str),
    #[error("space mismatch: {0}")]
    SpaceMismatch(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("events {0} and {1} are not disjoint")]
    NotDisjoint(usize, usize),
    #[error("missing price for {0}")]
    MissingPrice(String),
    #[error("negative weight {0}")]
    NegativeWeight(String),
    #[error("expectation {0} is not zero")]
    NonzeroExpectation(crate::rational::Q),
    #[error("index map is not a bijection: {0}")]
    NotBijective(String),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::Invalid(msg.into())
}

pub(crate) fn unsupported(msg: impl Into<String>) -> Error {
    Error::Unsupported(msg.into())
}
