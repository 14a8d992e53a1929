use super::{LatencyProfile, SequenceModel};
use crate::error::{Error, Result};
use crate::prob::ProbDist;
use crate::token::TokenId;

/// Returns the same distribution for every prefix.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedModel {
    dist: ProbDist,
    latency: LatencyProfile,
}

impl FixedModel {
    pub fn new(dist: ProbDist, latency: LatencyProfile) -> Self {
        Self { dist, latency }
    }

    pub fn dist(&self) -> &ProbDist {
        &self.dist
    }
}

impl SequenceModel for FixedModel {
    fn vocab_size(&self) -> usize {
        self.dist.len()
    }

    fn next_dist(&self, _prefix: &[TokenId]) -> ProbDist {
        self.dist.clone()
    }

    fn latency(&self) -> LatencyProfile {
        self.latency
    }
}

/// A draft/target pair whose per-token acceptance probability is exactly
/// `alpha`, independently at every position.
///
/// The target is one-hot on token 0 and the draft puts `alpha` on token 0
/// with the rest spread evenly, so every correction is token 0 and a lossless
/// engine must emit nothing but token 0.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaPair {
    pub alpha: f64,
    pub draft: FixedModel,
    pub target: FixedModel,
}

impl AlphaPair {
    /// Draft forward takes `t`, target forward takes `c * t`.
    pub fn with_timing(mut self, t: f64, c: f64) -> Result<Self> {
        self.draft.latency = LatencyProfile::new(t)?;
        self.target.latency = LatencyProfile::new(c * t)?;
        Ok(self)
    }
}

/// Builds an [`AlphaPair`] over `vocab_size` tokens with unit latencies.
///
/// `alpha = 0` is allowed: the draft then never proposes token 0 and every
/// draft is rejected.
pub fn make_alpha_pair(alpha: f64, vocab_size: usize) -> Result<AlphaPair> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidAlpha(alpha));
    }
    if vocab_size < 2 {
        return Err(Error::InvalidConfig(format!(
            "alpha pair needs at least 2 tokens, got {vocab_size}"
        )));
    }
    let rest = (1.0 - alpha) / (vocab_size - 1) as f64;
    let mut q = vec![rest; vocab_size];
    q[0] = alpha;
    let draft = ProbDist::from_weights(q)?;
    let target = ProbDist::one_hot(vocab_size, TokenId(0));
    Ok(AlphaPair {
        alpha,
        draft: FixedModel::new(draft, LatencyProfile::default()),
        target: FixedModel::new(target, LatencyProfile::default()),
    })
}
