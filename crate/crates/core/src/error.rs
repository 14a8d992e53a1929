use thiserror::Error;

use crate::token::TokenId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("vocabulary mismatch: expected {expected} entries, got {actual}")]
    VocabMismatch { expected: usize, actual: usize },

    #[error("residual distribution is all zero (target equals draft)")]
    AllZeroResidual,

    #[error("token {0} has zero draft probability")]
    ZeroDraftProb(TokenId),

    #[error("verification inputs disagree in length: {tokens} tokens, {draft} draft dists, {target} target dists")]
    LengthMismatch { tokens: usize, draft: usize, target: usize },

    #[error("nothing to verify")]
    EmptyChain,

    #[error("corpus is empty")]
    EmptyCorpus,

    #[error("n-gram order must be at least 1, got {0}")]
    InvalidOrder(usize),

    #[error("alpha must lie in [0, 1], got {0}")]
    InvalidAlpha(f64),

    #[error("invalid latency profile: {0}")]
    InvalidLatency(String),

    #[error("invalid engine configuration: {0}")]
    InvalidConfig(String),

    #[error("trace step {step} was produced by {found:?}, expected {expected:?}")]
    MismatchedEngine {
        step: usize,
        expected: crate::engines::EngineKind,
        found: crate::engines::EngineKind,
    },

    #[error("malformed model file: {0}")]
    ModelFormat(String),

    #[error("token {token} outside vocabulary of size {vocab}")]
    TokenOutOfRange { token: TokenId, vocab: usize },
}
