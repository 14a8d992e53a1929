use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::SequenceModel;
use crate::error::{Error, Result};
use crate::prob::ProbDist;
use crate::token::TokenId;

/// Simulated cost of one model forward. A forward covers any number of
/// input positions, so verifying several drafts costs one `forward_time`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencyProfile {
    forward_time: f64,
}

impl LatencyProfile {
    pub fn new(forward_time: f64) -> Result<Self> {
        if !(forward_time.is_finite() && forward_time > 0.0) {
            return Err(Error::InvalidLatency(format!(
                "forward time must be positive, got {forward_time}"
            )));
        }
        Ok(Self { forward_time })
    }

    /// Profile of a model generating `tokens_per_sec` autoregressively.
    pub fn from_tokens_per_sec(tokens_per_sec: f64) -> Result<Self> {
        Self::new(1.0 / tokens_per_sec)
    }

    pub fn forward_time(&self) -> f64 {
        self.forward_time
    }
}

impl Default for LatencyProfile {
    fn default() -> Self {
        Self { forward_time: 1.0 }
    }
}

/// Target forward time over draft forward time.
pub fn compute_c(draft: LatencyProfile, target: LatencyProfile) -> f64 {
    target.forward_time / draft.forward_time
}

/// How [`Delayed`] burns its latency.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Injection {
    /// Park the thread. Lets a concurrent task use the core, which is what an
    /// accelerator-bound forward looks like from the host.
    #[default]
    Sleep,
    /// Spin on the clock.
    BusyWait,
}

/// Wraps a model so every forward takes `forward_time * unit` of real time.
pub struct Delayed<M> {
    inner: M,
    unit: Duration,
    injection: Injection,
}

impl<M: SequenceModel> Delayed<M> {
    pub fn new(inner: M, unit: Duration, injection: Injection) -> Self {
        Self { inner, unit, injection }
    }

    fn stall(&self) {
        let wait = self.unit.mul_f64(self.inner.latency().forward_time());
        match self.injection {
            Injection::Sleep => std::thread::sleep(wait),
            Injection::BusyWait => {
                let start = Instant::now();
                while start.elapsed() < wait {
                    std::hint::spin_loop();
                }
            }
        }
    }
}

impl<M: SequenceModel> SequenceModel for Delayed<M> {
    fn vocab_size(&self) -> usize {
        self.inner.vocab_size()
    }

    fn next_dist(&self, prefix: &[TokenId]) -> ProbDist {
        self.stall();
        self.inner.next_dist(prefix)
    }

    fn latency(&self) -> LatencyProfile {
        self.inner.latency()
    }

    fn forward(&self, seq: &[TokenId], tail: usize) -> Vec<ProbDist> {
        self.stall();
        self.inner.forward(seq, tail)
    }
}
