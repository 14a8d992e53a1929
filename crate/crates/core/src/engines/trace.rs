use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{DecodeMode, EngineKind};
use crate::token::TokenId;

/// What one decoding step did.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepTrace {
    pub step: usize,
    pub engine: EngineKind,
    /// Mode the step ran in; only set for the parallel engine.
    pub mode: Option<DecodeMode>,
    /// Tokens drafted during this step (one draft forward each).
    pub drafted: Vec<TokenId>,
    /// Tokens that went through an accept/reject test.
    pub verified: usize,
    pub accepted_count: usize,
    pub correction: Option<TokenId>,
    /// Token sampled straight from the target: the autoregressive token, or
    /// the speculative bonus token after full acceptance.
    pub target_sample: Option<TokenId>,
    /// Tokens finalized by this step (after budget/EOS clipping).
    pub finalized: usize,
    pub draft_time: f64,
    pub target_time: f64,
}

pub fn write_jsonl<W: Write>(trace: &[StepTrace], mut w: W) -> std::io::Result<()> {
    for step in trace {
        serde_json::to_writer(&mut w, step)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_jsonl<R: BufRead>(r: R) -> std::io::Result<Vec<StepTrace>> {
    r.lines()
        .filter(|l| !matches!(l, Ok(s) if s.trim().is_empty()))
        .map(|line| Ok(serde_json::from_str(&line?)?))
        .collect()
}

/// Lengths of continuous runs of accepted drafts.
///
/// A speculative-decoding step always ends its run (at the first rejection or
/// at the window edge). The parallel engine keeps a run going across steps
/// until a correction; a trailing run cut off by the output budget is not
/// counted.
pub fn draft_runs(trace: &[StepTrace]) -> Vec<usize> {
    let mut runs = Vec::new();
    let mut open = 0;
    for step in trace {
        match step.engine {
            EngineKind::Ar => {}
            EngineKind::Sd => runs.push(step.accepted_count),
            EngineKind::Pearl => {
                open += step.accepted_count;
                if step.correction.is_some() {
                    runs.push(open);
                    open = 0;
                }
            }
        }
    }
    runs
}

/// Tokens finalized per completed segment of the parallel engine: the
/// accepted run plus its correction.
pub fn segment_tokens(trace: &[StepTrace]) -> Vec<usize> {
    draft_runs(trace).into_iter().map(|r| r + 1).collect()
}

/// `(run length, count)` pairs in ascending length order.
pub fn run_length_histogram(runs: &[usize]) -> Vec<(usize, usize)> {
    let mut hist = BTreeMap::new();
    for &r in runs {
        *hist.entry(r).or_insert(0usize) += 1;
    }
    hist.into_iter().collect()
}
