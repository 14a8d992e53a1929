//! The speculative kernel and the engines reproduce the target distribution.

mod common;

use common::{bytes, chi_square_gof, text_model};
use pearl_lab::engines::{decode_autoregressive, decode_pearl, decode_sd, EngineConfig};
use pearl_lab::models::{make_alpha_pair, SequenceModel};
use pearl_lab::sampling::verify_chain;
use pearl_lab::{ProbDist, RandomStream, TokenId, UniformSource};

/// Feeds a fixed list of uniforms.
struct Grid(Vec<f64>, usize);

impl UniformSource for Grid {
    fn next_uniform(&mut self) -> f64 {
        let u = self.0[self.1];
        self.1 += 1;
        u
    }
}

fn d(v: &[f64]) -> ProbDist {
    ProbDist::new(v.to_vec()).unwrap()
}

/// Integrates the output law of draft-then-verify over a midpoint grid on
/// all three uniforms (draft sample, accept test, residual sample).
fn riemann_output_law(p: &ProbDist, q: &ProbDist, n: usize) -> Vec<f64> {
    let grid: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
    let mut law = vec![0.0; p.len()];
    let w = 1.0 / (n * n * n) as f64;
    for &u0 in &grid {
        let x = q.token_at(u0);
        for &u1 in &grid {
            for &u2 in &grid {
                let mut src = Grid(vec![u1, u2], 0);
                let r = verify_chain(&[x], std::slice::from_ref(q), std::slice::from_ref(p), &mut src).unwrap();
                let out = r.correction.unwrap_or(x);
                law[out.index()] += w;
            }
        }
    }
    law
}

#[test]
fn single_position_law_equals_target_on_grid() {
    let cases = [
        (d(&[0.4, 0.4, 0.2]), d(&[0.2, 0.3, 0.5])),
        (d(&[0.5, 0.3, 0.2]), d(&[0.2, 0.5, 0.3])),
        (d(&[0.1, 0.1, 0.8]), d(&[0.6, 0.3, 0.1])),
    ];
    for (p, q) in &cases {
        let law = riemann_output_law(p, q, 120);
        for (got, want) in law.iter().zip(p.as_slice()) {
            assert!((got - want).abs() < 1e-3, "law {law:?} vs {:?}", p.as_slice());
        }
    }
}

#[test]
fn single_position_law_chi_square() {
    let p = d(&[0.4, 0.4, 0.2]);
    let q = d(&[0.2, 0.3, 0.5]);
    let mut rng = RandomStream::new(31, 0);
    let mut counts = [0u64; 3];
    for _ in 0..100_000 {
        let x = q.sample(&mut rng);
        let r = verify_chain(&[x], std::slice::from_ref(&q), std::slice::from_ref(&p), &mut rng).unwrap();
        counts[r.correction.unwrap_or(x).index()] += 1;
    }
    let pv = chi_square_gof(&counts, p.as_slice());
    assert!(pv > 1e-3, "p-value {pv}, counts {counts:?}");
}

#[test]
fn autoregressive_first_token_law() {
    let m = text_model(2);
    let prefix = bytes("the ");
    let probs = m.next_dist(&prefix);
    let mut counts = vec![0u64; 257];
    for seed in 0..50_000 {
        let cfg = EngineConfig::new(1, 1, seed).unwrap();
        let out = decode_autoregressive(&m, &prefix, &cfg).unwrap();
        counts[out.tokens[0].index()] += 1;
    }
    let pv = chi_square_gof(&counts, probs.as_slice());
    assert!(pv > 1e-3, "p-value {pv}");
}

/// Exact law of the second generated token: Σ_a p(a | prefix) p(· | prefix a).
fn second_token_law(m: &dyn SequenceModel, prefix: &[TokenId]) -> Vec<f64> {
    let first = m.next_dist(prefix);
    let mut law = vec![0.0; m.vocab_size()];
    let mut ctx = prefix.to_vec();
    for (a, &pa) in first.as_slice().iter().enumerate() {
        ctx.push(TokenId(a as u32));
        for (b, &pb) in m.next_dist(&ctx).as_slice().iter().enumerate() {
            law[b] += pa * pb;
        }
        ctx.pop();
    }
    law
}

#[test]
fn speculative_engines_match_exact_two_token_law() {
    let draft = text_model(1);
    let target = text_model(3);
    let prefix = bytes("the c");
    let first = target.next_dist(&prefix);
    let second = second_token_law(&target, &prefix);
    let runs = 30_000;
    for engine in ["sd", "pearl"] {
        let mut c1 = vec![0u64; 257];
        let mut c2 = vec![0u64; 257];
        for seed in 0..runs {
            let cfg = EngineConfig::new(3, 2, seed).unwrap();
            let out = match engine {
                "sd" => decode_sd(&draft, &target, &prefix, &cfg),
                _ => decode_pearl(&draft, &target, &prefix, &cfg),
            }
            .unwrap();
            c1[out.tokens[0].index()] += 1;
            c2[out.tokens[1].index()] += 1;
        }
        let p1 = chi_square_gof(&c1, first.as_slice());
        let p2 = chi_square_gof(&c2, &second);
        assert!(p1 > 1e-3 && p2 > 1e-3, "{engine}: p-values {p1} {p2}");
    }
}

#[test]
fn one_hot_target_forces_exact_output() {
    for &alpha in &[0.0, 0.3, 0.7, 0.95, 1.0] {
        let pair = make_alpha_pair(alpha, 5).unwrap();
        for seed in 0..20 {
            let cfg = EngineConfig::new(4, 64, seed).unwrap();
            let sd = decode_sd(&pair.draft, &pair.target, &[], &cfg).unwrap();
            let pearl = decode_pearl(&pair.draft, &pair.target, &[], &cfg).unwrap();
            assert_eq!(sd.tokens.0, vec![TokenId(0); 64]);
            assert_eq!(pearl.tokens.0, vec![TokenId(0); 64]);
        }
    }
}

#[test]
fn greedy_speculation_equals_greedy_autoregression() {
    let draft = text_model(2);
    let target = text_model(3);
    let prefix = bytes("a cat");
    let cfg = EngineConfig::new(3, 40, 0).unwrap().with_greedy(true);
    let ar = decode_autoregressive(&target, &prefix, &cfg).unwrap();
    let sd = decode_sd(&draft, &target, &prefix, &cfg).unwrap();
    let pearl = decode_pearl(&draft, &target, &prefix, &cfg).unwrap();
    assert_eq!(ar.tokens, sd.tokens);
    assert_eq!(ar.tokens, pearl.tokens);
}
