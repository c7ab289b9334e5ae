use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("overflow: {0}")]
    Overflow(String),
    #[error("envelope is unbounded: {0}")]
    UnboundedEnvelope(String),
    #[error("rate is not negative on the tail: {0}")]
    Sign(String),
    #[error("inconclusive: {0}")]
    Inconclusive(String),
    #[error("concavity hint rejected: {0}")]
    ConcavityMismatch(String),
    #[error("solution blew up: {0}")]
    BlowUp(String),
    #[error("tail integral diverges, no solution from infinity: {0}")]
    NotOsgood(String),
    #[error("no root: {0}")]
    NoRoot(String),
    #[error("no convergence: {0}")]
    Convergence(String),
    #[error("envelope dominance fails: {0}")]
    EnvelopeDominance(String),
    #[error("operator growth condition fails: {0}")]
    ConditionL1(String),
    #[error("no certifying K in range: {0}")]
    KExhausted(String),
    #[error("scheme instability: {0}")]
    Stability(String),
    #[error("Newton iteration diverged: {0}")]
    NewtonDivergence(String),
    #[error("invalid input: {0}")]
    Invalid(String),
}
