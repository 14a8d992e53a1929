//! The accept/reject kernel shared by every speculative engine.
//!
//! A draft token `x ~ q` is kept with probability `min(1, p[x] / q[x])`; on
//! the first rejection a correction is drawn from `norm(max(0, p - q))` and
//! everything after it is discarded. The kept-or-corrected token is then
//! distributed exactly as `p`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::{residual_dist, ProbDist};
use crate::rng::UniformSource;
use crate::token::TokenId;

/// Outcome of verifying a chain of drafts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifyResult {
    pub accepted_count: usize,
    /// Present iff some draft was rejected.
    pub correction: Option<TokenId>,
}

impl VerifyResult {
    pub fn all_accepted(&self) -> bool {
        self.correction.is_none()
    }

    /// Tokens that went through an accept/reject test.
    pub fn examined(&self) -> usize {
        self.accepted_count + usize::from(self.correction.is_some())
    }
}

/// `1` if `p[x] >= q[x]`, else `p[x] / q[x]`.
pub fn accept_prob(p: &ProbDist, q: &ProbDist, x: TokenId) -> Result<f64> {
    let qx = q.prob(x);
    if qx <= 0.0 {
        return Err(Error::ZeroDraftProb(x));
    }
    let px = p.prob(x);
    Ok(if px >= qx { 1.0 } else { px / qx })
}

/// Verifies `draft_tokens` in order, where `target_dists[i]` is the target's
/// distribution for the slot `draft_tokens[i]` occupies.
///
/// Draws one uniform per examined token and one more for the correction, and
/// nothing for tokens after the first rejection.
pub fn verify_chain<U: UniformSource + ?Sized>(
    draft_tokens: &[TokenId],
    draft_dists: &[ProbDist],
    target_dists: &[ProbDist],
    rng: &mut U,
) -> Result<VerifyResult> {
    let n = draft_tokens.len();
    if draft_dists.len() != n || target_dists.len() != n {
        return Err(Error::LengthMismatch {
            tokens: n,
            draft: draft_dists.len(),
            target: target_dists.len(),
        });
    }
    if n == 0 {
        return Err(Error::EmptyChain);
    }
    for (i, ((&x, q), p)) in draft_tokens.iter().zip(draft_dists).zip(target_dists).enumerate() {
        let a = accept_prob(p, q, x)?;
        // u is uniform on [0, 1), so P(u < a) = a and a = 0 never accepts.
        if rng.next_uniform() < a {
            continue;
        }
        let correction = residual_dist(p, q)?.sample(rng);
        return Ok(VerifyResult {
            accepted_count: i,
            correction: Some(correction),
        });
    }
    Ok(VerifyResult {
        accepted_count: n,
        correction: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::make_alpha_pair;
    use crate::rng::RandomStream;

    fn d(v: &[f64]) -> ProbDist {
        ProbDist::new(v.to_vec()).unwrap()
    }

    /// Replays a fixed list of uniforms.
    struct Scripted(std::vec::IntoIter<f64>);

    impl UniformSource for Scripted {
        fn next_uniform(&mut self) -> f64 {
            self.0.next().expect("ran out of scripted uniforms")
        }
    }

    #[test]
    fn accept_prob_branches() {
        let x = TokenId(0);
        assert_eq!(accept_prob(&d(&[0.5, 0.5]), &d(&[0.25, 0.75]), x).unwrap(), 1.0);
        assert_eq!(accept_prob(&d(&[0.2, 0.8]), &d(&[0.4, 0.6]), x).unwrap(), 0.5);
        assert_eq!(accept_prob(&d(&[0.0, 1.0]), &d(&[0.4, 0.6]), x).unwrap(), 0.0);
        // tie goes to the accept branch
        assert_eq!(accept_prob(&d(&[0.4, 0.6]), &d(&[0.4, 0.6]), x).unwrap(), 1.0);
        assert_eq!(
            accept_prob(&d(&[0.5, 0.5]), &d(&[0.0, 1.0]), x),
            Err(Error::ZeroDraftProb(x))
        );
    }

    #[test]
    fn identical_dists_always_accept() {
        let p = d(&[0.2, 0.3, 0.5]);
        let mut rng = RandomStream::new(5, 0);
        for _ in 0..1000 {
            let toks: Vec<TokenId> = (0..4).map(|_| p.sample(&mut rng)).collect();
            let dists = vec![p.clone(); 4];
            let r = verify_chain(&toks, &dists, &dists, &mut rng).unwrap();
            assert!(r.all_accepted());
            assert_eq!(r.accepted_count, 4);
        }
    }

    #[test]
    fn stops_at_first_rejection_and_counts_draws() {
        let p = d(&[0.5, 0.5]);
        let q = d(&[0.25, 0.75]);
        // token 1: accept prob 0.5/0.75 = 2/3
        let toks = [TokenId(1), TokenId(1), TokenId(1)];
        let qs = vec![q.clone(); 3];
        let ps = vec![p.clone(); 3];
        // accept (0.1 < 2/3), reject (0.9), correction draw 0.3
        let mut u = Scripted(vec![0.1, 0.9, 0.3].into_iter());
        let r = verify_chain(&toks, &qs, &ps, &mut u).unwrap();
        assert_eq!(r.accepted_count, 1);
        // residual is one-hot on token 0
        assert_eq!(r.correction, Some(TokenId(0)));
        assert!(u.0.next().is_none());

        let mut rng = RandomStream::new(3, 3);
        let r = verify_chain(&toks, &qs, &ps, &mut rng).unwrap();
        assert_eq!(rng.draws() as usize, r.examined() + usize::from(!r.all_accepted()));
    }

    #[test]
    fn alpha_pair_corrects_to_zero() {
        let pair = make_alpha_pair(0.8, 4).unwrap();
        let q = pair.draft.dist().clone();
        let p = pair.target.dist().clone();
        let mut rng = RandomStream::new(17, 0);
        let n = 100_000;
        let mut accepted = 0;
        for _ in 0..n {
            let x = q.sample(&mut rng);
            let r = verify_chain(&[x], std::slice::from_ref(&q), std::slice::from_ref(&p), &mut rng).unwrap();
            match r.correction {
                None => {
                    accepted += 1;
                    assert_eq!(x, TokenId(0));
                }
                Some(c) => assert_eq!(c, TokenId(0)),
            }
        }
        let rate = accepted as f64 / n as f64;
        assert!((rate - 0.8).abs() <= 0.01, "rate = {rate}");
    }

    #[test]
    fn input_validation() {
        let p = d(&[1.0, 0.0]);
        let mut rng = RandomStream::new(0, 0);
        assert_eq!(verify_chain(&[], &[], &[], &mut rng), Err(Error::EmptyChain));
        assert!(matches!(
            verify_chain(&[TokenId(0)], &[], std::slice::from_ref(&p), &mut rng),
            Err(Error::LengthMismatch { .. })
        ));
        assert_eq!(
            verify_chain(
                &[TokenId(1)],
                std::slice::from_ref(&p),
                std::slice::from_ref(&p),
                &mut rng
            ),
            Err(Error::ZeroDraftProb(TokenId(1)))
        );
    }

    #[test]
    fn deterministic_under_seed() {
        let p = d(&[0.1, 0.6, 0.3]);
        let q = d(&[0.5, 0.2, 0.3]);
        let run = |seed| {
            let mut rng = RandomStream::new(seed, 9);
            (0..200)
                .map(|_| {
                    let toks: Vec<_> = (0..3).map(|_| q.sample(&mut rng)).collect();
                    verify_chain(&toks, &vec![q.clone(); 3], &vec![p.clone(); 3], &mut rng).unwrap()
                })
                .collect::<Vec<_>>()
        };
        assert_eq!(run(4), run(4));
    }
}
