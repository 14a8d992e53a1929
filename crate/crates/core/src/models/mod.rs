//! Sequence models: anything that maps a token prefix to a next-token
//! distribution and carries a latency profile.

mod latency;
mod ngram;
mod scripted;
mod synthetic;

pub use latency::{compute_c, Delayed, Injection, LatencyProfile};
pub use ngram::{train_ngram, NGramModel, NGRAM_MAGIC};
pub use scripted::ScriptedModel;
pub use synthetic::{make_alpha_pair, AlphaPair, FixedModel};

use crate::error::{Error, Result};
use crate::prob::ProbDist;
use crate::token::{TokenId, TokenSeq};

/// A next-token model. `next_dist` must be a pure function of the prefix.
pub trait SequenceModel: Send + Sync {
    fn vocab_size(&self) -> usize;

    fn next_dist(&self, prefix: &[TokenId]) -> ProbDist;

    fn latency(&self) -> LatencyProfile;

    /// A single forward pass over `seq` that scores its last `tail`
    /// positions: returns the next-token distributions after
    /// `seq[..len - tail]`, `seq[..len - tail + 1]`, ..., `seq[..len]`
    /// (`tail + 1` entries). One call costs one forward regardless of `tail`.
    fn forward(&self, seq: &[TokenId], tail: usize) -> Vec<ProbDist> {
        assert!(tail <= seq.len(), "tail longer than sequence");
        let start = seq.len() - tail;
        (start..=seq.len()).map(|end| self.next_dist(&seq[..end])).collect()
    }
}

impl<M: SequenceModel + ?Sized> SequenceModel for &M {
    fn vocab_size(&self) -> usize {
        (**self).vocab_size()
    }
    fn next_dist(&self, prefix: &[TokenId]) -> ProbDist {
        (**self).next_dist(prefix)
    }
    fn latency(&self) -> LatencyProfile {
        (**self).latency()
    }
    fn forward(&self, seq: &[TokenId], tail: usize) -> Vec<ProbDist> {
        (**self).forward(seq, tail)
    }
}

impl<M: SequenceModel + ?Sized> SequenceModel for Box<M> {
    fn vocab_size(&self) -> usize {
        (**self).vocab_size()
    }
    fn next_dist(&self, prefix: &[TokenId]) -> ProbDist {
        (**self).next_dist(prefix)
    }
    fn latency(&self) -> LatencyProfile {
        (**self).latency()
    }
    fn forward(&self, seq: &[TokenId], tail: usize) -> Vec<ProbDist> {
        (**self).forward(seq, tail)
    }
}

/// Mean over `prefixes` of `Σ_x min(p(x|prefix), q(x|prefix))`, which is the
/// probability that a draft token sampled from `q` survives verification.
pub fn estimate_alpha(draft: &dyn SequenceModel, target: &dyn SequenceModel, prefixes: &[TokenSeq]) -> Result<f64> {
    if prefixes.is_empty() {
        return Err(Error::InvalidConfig("no prefixes to estimate alpha over".into()));
    }
    let mut total = 0.0;
    for prefix in prefixes {
        let q = draft.next_dist(prefix);
        let p = target.next_dist(prefix);
        total += p.overlap(&q)?;
    }
    Ok(total / prefixes.len() as f64)
}
