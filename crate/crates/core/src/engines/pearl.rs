//! Parallel speculative decoding with adaptive draft length.
//!
//! Every step overlaps one target forward with a `gamma`-token drafting run.
//!
//! * Pre-verify (no drafts outstanding): the target scores the committed
//!   prefix while the draft proposes `x_1..x_gamma`; only `x_1` can be checked.
//!   Accepting it commits `x_1` and leaves `x_2..x_gamma` pending; rejecting it
//!   commits the correction and throws the window away.
//! * Post-verify (drafts outstanding): the target scores every pending
//!   position plus the slot after them while the draft keeps going past the
//!   pending drafts. The pending drafts are verified, and if all survive, the
//!   first new draft is checked against the extra slot as well. Full
//!   acceptance commits all of them and leaves the remaining new drafts
//!   pending; any rejection commits the accepted prefix and correction and
//!   drops everything else.
//!
//! A target distribution always verifies the token occupying its own slot,
//! and no token is ever tested twice. The engine never samples a bonus token:
//! on full acceptance it keeps drafting instead.

use std::iter::once;

use super::draft::{DraftExecutor, DraftJob, DraftSide, Inline, Worker};
use super::sd::check_pair;
use super::{clip_new_tokens, DecodeMode, Decoded, EngineConfig, EngineKind, Execution, StepTrace};
use crate::error::{Error, Result};
use crate::models::SequenceModel;
use crate::prob::ProbDist;
use crate::rng::RandomStream;
use crate::sampling::verify_chain;
use crate::token::TokenId;

/// Committed tokens, the pending (unverified) drafts behind them, and the
/// draft distributions cached for those drafts.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodeState {
    /// Prompt, then committed tokens, then pending drafts.
    seq: Vec<TokenId>,
    prompt_len: usize,
    committed_len: usize,
    pending_q: Vec<ProbDist>,
    mode: DecodeMode,
    steps: usize,
    finished: bool,
}

impl DecodeState {
    pub fn new(prefix: &[TokenId]) -> Self {
        Self {
            seq: prefix.to_vec(),
            prompt_len: prefix.len(),
            committed_len: prefix.len(),
            pending_q: Vec::new(),
            mode: DecodeMode::PreVerify,
            steps: 0,
            finished: false,
        }
    }

    /// Prompt plus everything finalized so far.
    pub fn committed(&self) -> &[TokenId] {
        &self.seq[..self.committed_len]
    }

    /// Finalized tokens after the prompt.
    pub fn generated(&self) -> &[TokenId] {
        &self.seq[self.prompt_len..self.committed_len]
    }

    pub fn pending_drafts(&self) -> &[TokenId] {
        &self.seq[self.committed_len..]
    }

    pub fn pending_q(&self) -> &[ProbDist] {
        &self.pending_q
    }

    pub fn mode(&self) -> DecodeMode {
        self.mode
    }

    /// Set once the output budget is spent or EOS was finalized.
    pub fn is_finished(&self) -> bool {
        self.finished
    }

    fn debug_check(&self, gamma: usize) {
        debug_assert_eq!(self.pending_drafts().len(), self.pending_q.len());
        debug_assert!(self.pending_q.len() < gamma.max(1));
        if self.mode == DecodeMode::PreVerify {
            debug_assert!(self.pending_q.is_empty());
        }
    }
}

/// One pre-verify step on the single-threaded reference path.
pub fn pearl_preverify_step(
    state: &mut DecodeState,
    drafter: &mut DraftSide<'_>,
    target: &dyn SequenceModel,
    cfg: &EngineConfig,
    rng_verify: &mut RandomStream,
) -> Result<StepTrace> {
    if state.mode != DecodeMode::PreVerify {
        return Err(Error::InvalidConfig(
            "pre-verify step requested in post-verify mode".into(),
        ));
    }
    let draft_time = drafter.forward_time();
    step(state, &mut Inline::new(drafter), target, cfg, rng_verify, draft_time)
}

/// One post-verify step on the single-threaded reference path.
pub fn pearl_postverify_step(
    state: &mut DecodeState,
    drafter: &mut DraftSide<'_>,
    target: &dyn SequenceModel,
    cfg: &EngineConfig,
    rng_verify: &mut RandomStream,
) -> Result<StepTrace> {
    if state.mode != DecodeMode::PostVerify {
        return Err(Error::InvalidConfig(
            "post-verify step requested in pre-verify mode".into(),
        ));
    }
    let draft_time = drafter.forward_time();
    step(state, &mut Inline::new(drafter), target, cfg, rng_verify, draft_time)
}

/// Runs the parallel engine until `max_new_tokens` are finalized (the output
/// is clipped to exactly that many), EOS is finalized, or the step cap hits.
pub fn decode_pearl(
    draft: &dyn SequenceModel,
    target: &dyn SequenceModel,
    prefix: &[TokenId],
    cfg: &EngineConfig,
) -> Result<Decoded> {
    cfg.validate()?;
    check_pair(draft, target, prefix)?;
    let (draft_rng, mut rng) = cfg.streams();
    let mut side = DraftSide::new(draft, prefix, draft_rng, cfg.greedy);
    let draft_time = draft.latency().forward_time();
    let mut state = DecodeState::new(prefix);

    let trace = match cfg.execution {
        Execution::Serial => drive(
            &mut state,
            &mut Inline::new(&mut side),
            target,
            cfg,
            &mut rng,
            draft_time,
        )?,
        Execution::Concurrent => std::thread::scope(|s| {
            let mut worker = Worker::spawn(s, side);
            drive(&mut state, &mut worker, target, cfg, &mut rng, draft_time)
        })?,
    };
    Ok(Decoded {
        tokens: state.generated().to_vec().into(),
        trace,
    })
}

fn drive<D: DraftExecutor>(
    state: &mut DecodeState,
    drafts: &mut D,
    target: &dyn SequenceModel,
    cfg: &EngineConfig,
    rng: &mut RandomStream,
    draft_time: f64,
) -> Result<Vec<StepTrace>> {
    let mut trace = Vec::new();
    while !state.finished && state.generated().len() < cfg.max_new_tokens && cfg.step_budget_left(state.steps) {
        trace.push(step(state, drafts, target, cfg, rng, draft_time)?);
    }
    Ok(trace)
}

/// Both modes share one transition: verify `pending ++ [first new draft]`
/// against the `pending + 1` distributions of this step's target forward.
/// In pre-verify mode `pending` is empty, so only `x_1` is checked.
fn step<D: DraftExecutor>(
    state: &mut DecodeState,
    drafts: &mut D,
    target: &dyn SequenceModel,
    cfg: &EngineConfig,
    rng: &mut RandomStream,
    draft_time: f64,
) -> Result<StepTrace> {
    state.debug_check(cfg.gamma);
    let mode = state.mode;
    let pending = state.pending_q.len();

    // The draft side continues past the pending drafts while the target
    // scores them; the two meet before verification.
    drafts.submit(DraftJob::continuing(&state.seq, cfg.gamma));
    let mut target_dists = target.forward(&state.seq, pending);
    let batch = drafts.collect();
    if cfg.greedy {
        target_dists = target_dists.iter().map(ProbDist::argmax_one_hot).collect();
    }

    let chain: Vec<TokenId> = state
        .pending_drafts()
        .iter()
        .copied()
        .chain(once(batch.tokens[0]))
        .collect();
    let chain_q: Vec<ProbDist> = std::mem::take(&mut state.pending_q)
        .into_iter()
        .chain(once(batch.dists[0].clone()))
        .collect();
    let verdict = verify_chain(&chain, &chain_q, &target_dists, rng)?;

    let from = state.committed_len;
    match verdict.correction {
        None => {
            state.seq.extend_from_slice(&batch.tokens);
            state.committed_len += chain.len();
            state.pending_q = batch.dists.into_iter().skip(1).collect();
            state.mode = DecodeMode::PostVerify;
        }
        Some(y) => {
            state.seq.truncate(from + verdict.accepted_count);
            state.seq.push(y);
            state.committed_len = state.seq.len();
            state.mode = DecodeMode::PreVerify;
        }
    }

    let tail = state.seq.split_off(state.committed_len);
    let (finalized, stop) = clip_new_tokens(&mut state.seq, from, state.prompt_len, cfg);
    state.committed_len = state.seq.len();
    if stop {
        state.finished = true;
        state.pending_q.clear();
    } else {
        state.seq.extend(tail);
    }

    let index = state.steps;
    state.steps += 1;
    Ok(StepTrace {
        step: index,
        engine: EngineKind::Pearl,
        mode: Some(mode),
        drafted: batch.tokens,
        verified: verdict.examined(),
        accepted_count: verdict.accepted_count,
        correction: verdict.correction,
        target_sample: None,
        finalized,
        draft_time: draft_time * cfg.gamma as f64,
        target_time: target.latency().forward_time(),
    })
}
