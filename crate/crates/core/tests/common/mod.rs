#![allow(dead_code)]

use pearl_lab::models::{train_ngram, NGramModel};
use pearl_lab::{TokenId, TokenSeq};
use statrs::distribution::{ChiSquared, ContinuousCDF};

pub const TEXT: &str = "the cat sat on the mat. the dog sat on the log. \
a cat and a dog met on the mat and the log. the end of the tale is near, \
the cat said to the dog, and the dog said to the cat that the mat is theirs.";

pub fn bytes(s: &str) -> Vec<TokenId> {
    s.bytes().map(|b| TokenId(b.into())).collect()
}

pub fn text_model(order: usize) -> NGramModel {
    train_ngram(&[TokenSeq::from(bytes(TEXT))], order, 0.5, 257).unwrap()
}

/// Goodness-of-fit p-value of `counts` against `probs`; categories with an
/// expected count under 5 are pooled into one bin.
pub fn chi_square_gof(counts: &[u64], probs: &[f64]) -> f64 {
    let n: u64 = counts.iter().sum();
    let (mut stat, mut bins) = (0.0, 0usize);
    let (mut pooled_obs, mut pooled_exp) = (0.0, 0.0);
    for (&o, &p) in counts.iter().zip(probs) {
        let e = p * n as f64;
        if e < 5.0 {
            pooled_obs += o as f64;
            pooled_exp += e;
        } else {
            stat += (o as f64 - e).powi(2) / e;
            bins += 1;
        }
    }
    if pooled_exp > 0.0 {
        stat += (pooled_obs - pooled_exp).powi(2) / pooled_exp.max(1e-12);
        bins += 1;
    }
    let df = (bins - 1).max(1) as f64;
    1.0 - ChiSquared::new(df).unwrap().cdf(stat)
}
