//! Discrete-event timing for engine traces.
//!
//! Time is measured in draft-forward units `t`; a target forward costs `c·t`
//! no matter how many positions it scores. A speculative step runs its phases
//! back to back (`γt + ct`); a parallel step overlaps drafting with the
//! target forward (`max(γt, ct)`).

use serde::{Deserialize, Serialize};

use crate::engines::{decode_pearl, decode_sd, EngineConfig, EngineKind, StepTrace};
use crate::error::{Error, Result};
use crate::models::make_alpha_pair;
use crate::rng::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingParams {
    /// Draft forward time.
    pub t: f64,
    /// Target forward time over draft forward time.
    pub c: f64,
}

impl TimingParams {
    pub fn new(t: f64, c: f64) -> Result<Self> {
        if !(t > 0.0 && t.is_finite()) || !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidLatency(format!(
                "t and c must be positive, got t={t}, c={c}"
            )));
        }
        Ok(Self { t, c })
    }

    pub fn target_time(&self) -> f64 {
        self.c * self.t
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub total_time: f64,
    pub finalized_tokens: usize,
    pub tokens_per_unit: f64,
    /// Autoregressive decoding emits one token per `c·t`.
    pub speedup_vs_ar: f64,
}

fn check_gamma(gamma: usize) -> Result<()> {
    if gamma == 0 {
        return Err(Error::InvalidConfig("gamma must be at least 1".into()));
    }
    Ok(())
}

/// `γt + ct`: drafting then verification, serially.
pub fn time_sd_step(gamma: usize, params: TimingParams) -> Result<f64> {
    check_gamma(gamma)?;
    Ok(gamma as f64 * params.t + params.target_time())
}

/// `max(γt, ct)`: drafting overlapped with one target forward.
pub fn time_pearl_step(gamma: usize, params: TimingParams) -> Result<f64> {
    check_gamma(gamma)?;
    Ok((gamma as f64 * params.t).max(params.target_time()))
}

/// Times `trace` under `params` with the schedule of `engine`.
///
/// Each step is charged by the number of drafts it actually ran, so a
/// rejected pre-verify step still pays `max(γt, ct)` for its single token.
pub fn simulate_run(trace: &[StepTrace], params: TimingParams, engine: EngineKind) -> Result<SimReport> {
    let mut total_time = 0.0;
    let mut finalized_tokens = 0;
    for step in trace {
        if step.engine != engine {
            return Err(Error::MismatchedEngine {
                step: step.step,
                expected: engine,
                found: step.engine,
            });
        }
        let drafts = step.drafted.len();
        total_time += match engine {
            EngineKind::Ar => params.target_time(),
            EngineKind::Sd => time_sd_step(drafts, params)?,
            EngineKind::Pearl => time_pearl_step(drafts, params)?,
        };
        finalized_tokens += step.finalized;
    }
    let tokens_per_unit = if total_time > 0.0 {
        finalized_tokens as f64 / total_time
    } else {
        0.0
    };
    Ok(SimReport {
        total_time,
        finalized_tokens,
        tokens_per_unit,
        speedup_vs_ar: tokens_per_unit * params.target_time(),
    })
}

/// Mean simulated speedup for one `(engine, alpha, c, gamma)` grid cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub gamma: usize,
    pub alpha: f64,
    pub c: f64,
    pub speedup_mean: f64,
    pub speedup_stderr: f64,
}

/// Independent replicate runs per cell; the stderr is taken across them.
pub const SWEEP_REPLICATES: usize = 8;

/// Simulates one grid cell: `engine` on an alpha pair, `steps` steps split
/// over [`SWEEP_REPLICATES`] independently seeded runs.
pub fn sweep_cell(engine: EngineKind, alpha: f64, c: f64, gamma: usize, steps: usize, seed: u64) -> Result<SweepCell> {
    check_gamma(gamma)?;
    if engine == EngineKind::Ar {
        return Err(Error::InvalidConfig("sweeps need a speculative engine".into()));
    }
    let pair = make_alpha_pair(alpha, 2)?;
    let params = TimingParams::new(1.0, c)?;
    let per_run = steps.div_ceil(SWEEP_REPLICATES).max(1);
    let mut speedups = Vec::with_capacity(SWEEP_REPLICATES);
    for rep in 0..SWEEP_REPLICATES as u64 {
        let cell_seed = derive_seed(seed, &[engine as u64, alpha.to_bits(), c.to_bits(), gamma as u64, rep]);
        let cfg = EngineConfig::new(gamma, usize::MAX, cell_seed)?.with_max_steps(per_run);
        let out = match engine {
            EngineKind::Sd => decode_sd(&pair.draft, &pair.target, &[], &cfg)?,
            _ => decode_pearl(&pair.draft, &pair.target, &[], &cfg)?,
        };
        speedups.push(simulate_run(&out.trace, params, engine)?.speedup_vs_ar);
    }
    let n = speedups.len() as f64;
    let mean = speedups.iter().sum::<f64>() / n;
    let var = speedups.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(SweepCell {
        gamma,
        alpha,
        c,
        speedup_mean: mean,
        speedup_stderr: (var / n).sqrt(),
    })
}

/// Parallel-engine speedup over `gammas` at fixed `(alpha, c)`.
pub fn sweep_gamma(alpha: f64, c: f64, gammas: &[usize], steps: usize, seed: u64) -> Result<Vec<SweepCell>> {
    gammas
        .iter()
        .map(|&g| sweep_cell(EngineKind::Pearl, alpha, c, g, steps, seed))
        .collect()
}

/// Window with the highest mean speedup (lowest window on ties).
pub fn argmax_gamma(cells: &[SweepCell]) -> Option<usize> {
    cells
        .iter()
        .fold(None::<&SweepCell>, |best, cell| match best {
            Some(b) if b.speedup_mean >= cell.speedup_mean => Some(b),
            _ => Some(cell),
        })
        .map(|c| c.gamma)
}
