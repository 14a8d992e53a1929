//! Next-token probability vectors.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::UniformSource;
use crate::token::TokenId;

/// Tolerance on the total mass of a distribution handed to [`ProbDist::new`].
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

/// A probability vector over a fixed vocabulary, stored in linear space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbDist {
    probs: Vec<f64>,
}

impl ProbDist {
    /// Validates `probs` (finite, non-negative, mass within
    /// [`NORMALIZATION_TOLERANCE`] of one) and renormalizes it.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        let sum = check_entries(&probs)?;
        if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(Error::InvalidDistribution(format!("entries sum to {sum}, not 1")));
        }
        Ok(Self::scaled(probs, sum))
    }

    /// Normalizes arbitrary non-negative weights with positive mass.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        let sum = check_entries(&weights)?;
        if sum <= 0.0 {
            return Err(Error::InvalidDistribution("weights have zero mass".into()));
        }
        Ok(Self::scaled(weights, sum))
    }

    pub fn one_hot(vocab_size: usize, token: TokenId) -> Self {
        assert!(token.index() < vocab_size, "one-hot index out of range");
        let mut probs = vec![0.0; vocab_size];
        probs[token.index()] = 1.0;
        Self { probs }
    }

    pub fn uniform(vocab_size: usize) -> Self {
        assert!(vocab_size > 0);
        Self {
            probs: vec![1.0 / vocab_size as f64; vocab_size],
        }
    }

    fn scaled(mut probs: Vec<f64>, sum: f64) -> Self {
        if sum != 1.0 {
            probs.iter_mut().for_each(|p| *p /= sum);
        }
        Self { probs }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.probs.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Probability of `token`; zero outside the vocabulary.
    #[inline]
    pub fn prob(&self, token: TokenId) -> f64 {
        self.probs.get(token.index()).copied().unwrap_or(0.0)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.probs
    }

    /// Lowest-id token of maximal probability.
    pub fn argmax(&self) -> TokenId {
        let mut best = 0;
        for (i, &p) in self.probs.iter().enumerate() {
            if p > self.probs[best] {
                best = i;
            }
        }
        TokenId(best as u32)
    }

    pub fn argmax_one_hot(&self) -> Self {
        Self::one_hot(self.len(), self.argmax())
    }

    /// Inverse-CDF sampling with exactly one uniform draw.
    pub fn sample<U: UniformSource + ?Sized>(&self, rng: &mut U) -> TokenId {
        let u = rng.next_uniform();
        self.token_at(u)
    }

    /// The token whose CDF interval contains `u`. Zero-mass tokens are never
    /// returned, including when rounding leaves `u` past the final cumulative.
    pub fn token_at(&self, u: f64) -> TokenId {
        let mut acc = 0.0;
        for (i, &p) in self.probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return TokenId(i as u32);
            }
        }
        let last = self
            .probs
            .iter()
            .rposition(|&p| p > 0.0)
            .expect("distribution has positive mass");
        TokenId(last as u32)
    }

    /// Total-variation overlap `Σ_x min(self[x], other[x])`.
    pub fn overlap(&self, other: &ProbDist) -> Result<f64> {
        same_vocab(self, other)?;
        Ok(self.probs.iter().zip(&other.probs).map(|(a, b)| a.min(*b)).sum())
    }
}

fn check_entries(probs: &[f64]) -> Result<f64> {
    if probs.is_empty() {
        return Err(Error::InvalidDistribution("empty vector".into()));
    }
    let mut sum = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        if !p.is_finite() || p < 0.0 {
            return Err(Error::InvalidDistribution(format!("entry {i} is {p}")));
        }
        sum += p;
    }
    Ok(sum)
}

fn same_vocab(p: &ProbDist, q: &ProbDist) -> Result<()> {
    if p.len() != q.len() {
        return Err(Error::VocabMismatch {
            expected: p.len(),
            actual: q.len(),
        });
    }
    Ok(())
}

/// `norm(max(0, p - q))`, the distribution a rejected draft is resampled from.
pub fn residual_dist(p: &ProbDist, q: &ProbDist) -> Result<ProbDist> {
    same_vocab(p, q)?;
    let weights: Vec<f64> = p.probs.iter().zip(&q.probs).map(|(a, b)| (a - b).max(0.0)).collect();
    let mass: f64 = weights.iter().sum();
    if mass <= 0.0 {
        return Err(Error::AllZeroResidual);
    }
    let probs = weights.into_iter().map(|w| w / mass).collect();
    Ok(ProbDist { probs })
}
