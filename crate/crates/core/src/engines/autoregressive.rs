use super::{clip_new_tokens, Decoded, EngineConfig, EngineKind, StepTrace};
use crate::error::Result;
use crate::models::SequenceModel;
use crate::token::{TokenId, TokenSeq};

/// Token-by-token sampling from the target: one forward per token.
pub fn decode_autoregressive(target: &dyn SequenceModel, prefix: &[TokenId], cfg: &EngineConfig) -> Result<Decoded> {
    cfg.validate()?;
    TokenSeq::from(prefix.to_vec()).validate(target.vocab_size())?;
    let (_, mut rng) = cfg.streams();
    let target_time = target.latency().forward_time();

    let mut seq = prefix.to_vec();
    let mut trace = Vec::new();
    let mut stop = false;
    while !stop && seq.len() - prefix.len() < cfg.max_new_tokens && cfg.step_budget_left(trace.len()) {
        let mut p = target.next_dist(&seq);
        if cfg.greedy {
            p = p.argmax_one_hot();
        }
        let token = p.sample(&mut rng);
        let from = seq.len();
        seq.push(token);
        let (finalized, s) = clip_new_tokens(&mut seq, from, prefix.len(), cfg);
        stop = s;
        trace.push(StepTrace {
            step: trace.len(),
            engine: EngineKind::Ar,
            mode: None,
            drafted: Vec::new(),
            verified: 0,
            accepted_count: 0,
            correction: None,
            target_sample: Some(token),
            finalized,
            draft_time: 0.0,
            target_time,
        });
    }
    Ok(Decoded {
        tokens: seq.split_off(prefix.len()).into(),
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{make_alpha_pair, train_ngram};
    use crate::prob::ProbDist;

    #[test]
    fn one_hot_target_repeats_token_zero() {
        let pair = make_alpha_pair(0.5, 3).unwrap();
        let cfg = EngineConfig::new(1, 5, 3).unwrap();
        let out = decode_autoregressive(&pair.target, &[], &cfg).unwrap();
        assert_eq!(out.tokens.0, vec![TokenId(0); 5]);
        assert_eq!(out.trace.len(), 5);
        assert!(out.trace.iter().all(|s| s.finalized == 1));
    }

    #[test]
    fn greedy_follows_argmax_chain() {
        let corpus: Vec<TokenSeq> = vec![[0, 1, 2, 1, 2, 0, 1, 2].map(TokenId).to_vec().into()];
        let m = train_ngram(&corpus, 2, 0.5, 3).unwrap();
        let cfg = EngineConfig::new(1, 6, 0).unwrap().with_greedy(true);
        let a = decode_autoregressive(&m, &[TokenId(0)], &cfg).unwrap();
        let b = decode_autoregressive(
            &m,
            &[TokenId(0)],
            &EngineConfig {
                seed: 77,
                ..cfg.clone()
            },
        )
        .unwrap();
        assert_eq!(a.tokens, b.tokens);
        let mut ctx = vec![TokenId(0)];
        for &t in a.tokens.iter() {
            assert_eq!(t, m.next_dist(&ctx).argmax());
            ctx.push(t);
        }
    }

    #[test]
    fn stops_at_eos() {
        let m = crate::models::FixedModel::new(ProbDist::one_hot(4, TokenId(3)), Default::default());
        let cfg = EngineConfig::new(1, 10, 0).unwrap().with_eos(Some(TokenId(3)));
        let out = decode_autoregressive(&m, &[], &cfg).unwrap();
        assert_eq!(out.tokens.0, vec![TokenId(3)]);
    }

    #[test]
    fn rejects_out_of_vocab_prefix() {
        let pair = make_alpha_pair(0.5, 3).unwrap();
        let cfg = EngineConfig::new(1, 5, 3).unwrap();
        assert!(decode_autoregressive(&pair.target, &[TokenId(3)], &cfg).is_err());
    }
}
