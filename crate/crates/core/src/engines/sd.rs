use super::draft::{DraftJob, DraftSide};
use super::{clip_new_tokens, Decoded, EngineConfig, EngineKind, StepTrace};
use crate::error::Result;
use crate::models::SequenceModel;
use crate::prob::ProbDist;
use crate::sampling::verify_chain;
use crate::token::{TokenId, TokenSeq};

/// Vanilla draft-then-verify: draft `gamma` tokens, score them with one
/// target forward, keep the accepted prefix plus a correction, or all of them
/// plus a bonus token sampled from the last target distribution.
pub fn decode_sd(
    draft: &dyn SequenceModel,
    target: &dyn SequenceModel,
    prefix: &[TokenId],
    cfg: &EngineConfig,
) -> Result<Decoded> {
    cfg.validate()?;
    check_pair(draft, target, prefix)?;
    let (draft_rng, mut rng) = cfg.streams();
    let mut drafter = DraftSide::new(draft, prefix, draft_rng, cfg.greedy);
    let draft_time = draft.latency().forward_time();
    let target_time = target.latency().forward_time();
    let gamma = cfg.gamma;

    let mut seq = prefix.to_vec();
    let mut trace = Vec::new();
    let mut stop = false;
    while !stop && seq.len() - prefix.len() < cfg.max_new_tokens && cfg.step_budget_left(trace.len()) {
        let batch = drafter.draft(DraftJob::continuing(&seq, gamma));

        let base = seq.len();
        seq.extend_from_slice(&batch.tokens);
        let mut dists = target.forward(&seq, gamma);
        seq.truncate(base);
        if cfg.greedy {
            dists = dists.iter().map(ProbDist::argmax_one_hot).collect();
        }

        let verdict = verify_chain(&batch.tokens, &batch.dists, &dists[..gamma], &mut rng)?;
        seq.extend_from_slice(&batch.tokens[..verdict.accepted_count]);
        let bonus = match verdict.correction {
            Some(y) => {
                seq.push(y);
                None
            }
            None => {
                let b = dists[gamma].sample(&mut rng);
                seq.push(b);
                Some(b)
            }
        };
        let (finalized, s) = clip_new_tokens(&mut seq, base, prefix.len(), cfg);
        stop = s;
        trace.push(StepTrace {
            step: trace.len(),
            engine: EngineKind::Sd,
            mode: None,
            drafted: batch.tokens,
            verified: verdict.examined(),
            accepted_count: verdict.accepted_count,
            correction: verdict.correction,
            target_sample: bonus,
            finalized,
            draft_time: draft_time * gamma as f64,
            target_time,
        });
    }
    Ok(Decoded {
        tokens: seq.split_off(prefix.len()).into(),
        trace,
    })
}

pub(super) fn check_pair(draft: &dyn SequenceModel, target: &dyn SequenceModel, prefix: &[TokenId]) -> Result<()> {
    if draft.vocab_size() != target.vocab_size() {
        return Err(crate::error::Error::VocabMismatch {
            expected: target.vocab_size(),
            actual: draft.vocab_size(),
        });
    }
    TokenSeq::from(prefix.to_vec()).validate(target.vocab_size())
}
