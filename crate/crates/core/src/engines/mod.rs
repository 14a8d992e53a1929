//! Decoding loops: autoregressive, vanilla speculative decoding, and the
//! parallel pre-verify/post-verify engine.
//!
//! All engines split the master seed into a draft stream and a verify stream
//! before decoding. The draft stream is only touched by draft-model sampling
//! and the verify stream only by accept/reject uniforms, corrections and
//! target samples, so running the draft side on another thread cannot change
//! any outcome.

mod autoregressive;
mod draft;
mod pearl;
mod sd;
mod trace;

pub use autoregressive::decode_autoregressive;
pub use draft::{DraftBatch, DraftJob, DraftSide};
pub use pearl::{decode_pearl, pearl_postverify_step, pearl_preverify_step, DecodeState};
pub use sd::decode_sd;
pub use trace::{draft_runs, read_jsonl, run_length_histogram, segment_tokens, write_jsonl, StepTrace};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RandomStream;
use crate::token::{TokenId, TokenSeq};

const DRAFT_STREAM: u64 = 1;
const VERIFY_STREAM: u64 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EngineKind {
    Ar,
    Sd,
    Pearl,
}

impl std::fmt::Display for EngineKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EngineKind::Ar => "ar",
            EngineKind::Sd => "sd",
            EngineKind::Pearl => "pearl",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecodeMode {
    #[default]
    PreVerify,
    PostVerify,
}

/// Where the draft side of a parallel step runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Execution {
    /// Single-threaded reference path.
    #[default]
    Serial,
    /// Draft model on a worker thread, joined with the target forward at a
    /// rendezvous every step.
    Concurrent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EngineConfig {
    /// Window size: drafts proposed per drafting phase.
    pub gamma: usize,
    /// Number of new tokens to finalize (L).
    pub max_new_tokens: usize,
    /// Optional cap on decoding steps, for Monte Carlo runs that count steps.
    pub max_steps: Option<usize>,
    pub seed: u64,
    /// Argmax decoding: both models are replaced by their one-hot argmax.
    pub greedy: bool,
    pub eos: Option<TokenId>,
    pub execution: Execution,
}

impl EngineConfig {
    pub fn new(gamma: usize, max_new_tokens: usize, seed: u64) -> Result<Self> {
        let cfg = Self {
            gamma,
            max_new_tokens,
            max_steps: None,
            seed,
            greedy: false,
            eos: None,
            execution: Execution::Serial,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.gamma == 0 {
            return Err(Error::InvalidConfig("gamma must be at least 1".into()));
        }
        if self.max_new_tokens == 0 {
            return Err(Error::InvalidConfig("max_new_tokens must be at least 1".into()));
        }
        Ok(())
    }

    pub fn with_max_steps(mut self, steps: usize) -> Self {
        self.max_steps = Some(steps);
        self
    }

    pub fn with_greedy(mut self, greedy: bool) -> Self {
        self.greedy = greedy;
        self
    }

    pub fn with_eos(mut self, eos: Option<TokenId>) -> Self {
        self.eos = eos;
        self
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }

    pub(crate) fn streams(&self) -> (RandomStream, RandomStream) {
        let master = RandomStream::new(self.seed, 0);
        (master.split(DRAFT_STREAM), master.split(VERIFY_STREAM))
    }

    fn step_budget_left(&self, steps: usize) -> bool {
        self.max_steps.is_none_or(|m| steps < m)
    }
}

/// Generated tokens (prompt excluded) and the per-step trace.
#[derive(Debug, Clone, PartialEq)]
pub struct Decoded {
    pub tokens: TokenSeq,
    pub trace: Vec<StepTrace>,
}

/// Applies the output budget and EOS rule to tokens just appended at
/// `seq[from..]`. Returns how many of them survive and whether decoding stops.
fn clip_new_tokens(seq: &mut Vec<TokenId>, from: usize, prompt_len: usize, cfg: &EngineConfig) -> (usize, bool) {
    let mut stop = false;
    let budget_end = prompt_len.saturating_add(cfg.max_new_tokens);
    if seq.len() >= budget_end {
        seq.truncate(budget_end);
        stop = true;
    }
    if let Some(eos) = cfg.eos {
        if let Some(i) = seq[from..].iter().position(|&t| t == eos) {
            seq.truncate(from + i + 1);
            stop = true;
        }
    }
    (seq.len() - from, stop)
}
