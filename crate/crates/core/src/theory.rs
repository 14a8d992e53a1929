//! Closed-form expectations under i.i.d. per-token acceptance `alpha`.
//!
//! Window sizes are real-valued where the algebra allows it, so non-integer
//! speed ratios can be swept directly.

use crate::error::{Error, Result};
use crate::rng::{RandomStream, UniformSource};

/// Validated `(alpha, gamma, c)` triple.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoryInputs {
    pub alpha: f64,
    pub gamma: f64,
    pub c: f64,
}

impl TheoryInputs {
    pub fn new(alpha: f64, gamma: f64, c: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&alpha) {
            return Err(Error::InvalidAlpha(alpha));
        }
        if !(gamma >= 1.0 && gamma.is_finite()) {
            return Err(Error::InvalidConfig(format!("gamma must be >= 1, got {gamma}")));
        }
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidConfig(format!("c must be positive, got {c}")));
        }
        Ok(Self { alpha, gamma, c })
    }

    pub fn sd_speedup(&self) -> f64 {
        sd_speedup(self.alpha, self.gamma, self.c)
    }
}

/// Expected tokens per draft-then-verify step: `(1 - α^(γ+1)) / (1 - α)`.
/// At `α = 1` this is the limit `γ + 1`.
pub fn sd_expected_tokens(alpha: f64, gamma: f64) -> f64 {
    if alpha >= 1.0 {
        return gamma + 1.0;
    }
    (1.0 - alpha.powf(gamma + 1.0)) / (1.0 - alpha)
}

/// Speedup of draft-then-verify over autoregressive decoding:
/// `(1 - α^(γ+1)) / ((1 - α)(γ/c + 1))`.
pub fn sd_speedup(alpha: f64, gamma: f64, c: f64) -> f64 {
    sd_expected_tokens(alpha, gamma) / (gamma / c + 1.0)
}

/// Integer window in `1..=max_gamma` maximizing [`sd_speedup`].
pub fn sd_optimal_gamma(alpha: f64, c: f64, max_gamma: usize) -> usize {
    (1..=max_gamma)
        .max_by(|&a, &b| sd_speedup(alpha, a as f64, c).total_cmp(&sd_speedup(alpha, b as f64, c)))
        .expect("non-empty range")
}

/// Tokens per segment if a bonus token were counted on top of the
/// correction: `1/(1-α) + 1`.
pub fn pearl_tokens_with_bonus(alpha: f64) -> f64 {
    1.0 / (1.0 - alpha) + 1.0
}

/// Analytic tokens per segment (accepted run plus its correction):
/// `α/(1-α) + 1 = 1/(1-α)`.
pub fn pearl_segment_tokens(alpha: f64) -> f64 {
    1.0 / (1.0 - alpha)
}

/// Monte Carlo mean of tokens per segment: Bernoulli(α) acceptances until
/// the first rejection, plus one correction.
pub fn pearl_segment_tokens_oracle(alpha: f64, segments: usize, seed: u64) -> f64 {
    assert!(segments >= 1, "need at least one segment");
    assert!((0.0..1.0).contains(&alpha), "alpha must be in [0, 1)");
    let mut rng = RandomStream::new(seed, 0x5e6);
    let mut tokens = 0u64;
    for _ in 0..segments {
        tokens += 1;
        while rng.next_uniform() < alpha {
            tokens += 1;
        }
    }
    tokens as f64 / segments as f64
}

/// Standard deviation of tokens per segment: the run is geometric with
/// variance `α/(1-α)^2`.
pub fn pearl_segment_tokens_sd(alpha: f64) -> f64 {
    alpha.sqrt() / (1.0 - alpha)
}

/// Mean tokens finalized per step of the parallel engine with i.i.d.
/// acceptance.
///
/// With nothing pending a step tests one draft and moves to the pipelined
/// mode on acceptance. A pipelined step tests `γ` drafts, yields
/// `(1-α^γ)/(1-α)` tokens on average and stays pipelined only on full
/// acceptance. Weighting both by the stationary law of that two-state chain
/// gives the result.
pub fn pearl_tokens_per_step(alpha: f64, gamma: f64) -> f64 {
    if alpha >= 1.0 {
        return gamma;
    }
    let full = alpha.powf(gamma);
    let pipelined = alpha / (1.0 - full + alpha);
    (1.0 - pipelined) + pipelined * sd_expected_tokens(alpha, gamma - 1.0)
}

/// Steady-state speedup of the parallel engine over autoregressive decoding
/// when every step drafts `γ` tokens and overlaps with one target forward.
pub fn pearl_speedup(alpha: f64, gamma: f64, c: f64) -> f64 {
    pearl_tokens_per_step(alpha, gamma) * c / gamma.max(c)
}

/// Optimal window for the parallel engine: the speed ratio itself.
pub fn pearl_optimal_gamma(c: f64) -> f64 {
    c
}

/// Per-verified-token cycle `(max(γt, ct) + ct) / γ` as written for the
/// draft-bound case. It charges a serial target forward on top of the
/// overlapped one; the simulator uses the fully overlapped `max(γt, ct)`.
pub fn pearl_cycle_time_serial_bound(gamma: f64, c: f64, t: f64) -> f64 {
    ((gamma * t).max(c * t) + c * t) / gamma
}

/// Per-segment token advantage of unbounded draft runs over a window of
/// `gamma`: `1/(1-α) - (1 - α^(γ+1))/(1-α)`, never negative.
pub fn comparative_gain(alpha: f64, gamma: f64) -> f64 {
    pearl_segment_tokens(alpha) - sd_expected_tokens(alpha, gamma)
}
