//! The acceptance checks behind `verify-theorems`.
//!
//! Each check is deterministic given the base seed and reports whether it
//! passed, how long it took against its time budget, and a one-line detail.

use std::fmt::Write as _;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use pearl_lab::engines::{
    decode_autoregressive, decode_pearl, decode_sd, draft_runs, pearl_postverify_step, pearl_preverify_step,
    run_length_histogram, DecodeMode, DecodeState, DraftSide, EngineConfig, EngineKind, Execution,
};
use pearl_lab::models::{compute_c, make_alpha_pair, LatencyProfile, NGramModel, ScriptedModel};
use pearl_lab::rng::derive_seed;
use pearl_lab::simulator::{argmax_gamma, sweep_cell, sweep_gamma, SweepCell};
use pearl_lab::theory::{
    comparative_gain, pearl_segment_tokens, pearl_segment_tokens_oracle, pearl_speedup, pearl_tokens_with_bonus,
    sd_expected_tokens, sd_speedup,
};
use pearl_lab::{ProbDist, RandomStream, TokenId};
use proptest::test_runner::{Config as PropConfig, RngAlgorithm, TestRng, TestRunner};
use rayon::prelude::*;

use crate::corpus::synthetic_text;
use crate::error::Result;
use crate::stats;
use crate::train::train_bytes;

#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub id: u8,
    pub name: &'static str,
    /// Correctness and time budget both met.
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
    pub budget: Duration,
    /// Draft-run-length histogram, for checks that produce one.
    pub histogram: Option<Vec<(usize, usize)>>,
}

/// Result of a check body: verdict, detail line, optional histogram.
struct Verdict {
    ok: bool,
    detail: String,
    histogram: Option<Vec<(usize, usize)>>,
}

impl Verdict {
    fn new(ok: bool, detail: String) -> Self {
        Self {
            ok,
            detail,
            histogram: None,
        }
    }
}

type CheckFn = fn(&Context) -> Result<Verdict>;

/// Shared state across checks: the seed and the speculative speedup grid,
/// which two checks read.
pub struct Context {
    seed: u64,
    sd_grid: OnceLock<Vec<SweepCell>>,
}

const ALPHAS: [f64; 3] = [0.5, 0.7, 0.9];
const CS: [f64; 2] = [3.0, 5.0];
const GRID_STEPS: usize = 200_000;

impl Context {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            sd_grid: OnceLock::new(),
        }
    }

    fn seed(&self, labels: &[u64]) -> u64 {
        derive_seed(self.seed, labels)
    }

    /// Speculative-decoding cells over `ALPHAS × γ∈1..=8 × CS`.
    fn sd_grid(&self) -> Result<&[SweepCell]> {
        if self.sd_grid.get().is_none() {
            let jobs: Vec<(f64, usize, f64)> = ALPHAS
                .iter()
                .flat_map(|&a| (1..=8).flat_map(move |g| CS.iter().map(move |&c| (a, g, c))))
                .collect();
            let cells = jobs
                .into_par_iter()
                .map(|(a, g, c)| sweep_cell(EngineKind::Sd, a, c, g, GRID_STEPS, self.seed(&[5])))
                .collect::<pearl_lab::Result<Vec<_>>>()?;
            let _ = self.sd_grid.set(cells);
        }
        Ok(self.sd_grid.get().expect("just set"))
    }
}

const CHECKS: [(u8, &str, u64, CheckFn); 10] = [
    (1, "exact losslessness on alpha pairs", 5, exact_losslessness),
    (2, "statistical losslessness on n-grams", 120, statistical_losslessness),
    (3, "tokens per segment", 30, segment_tokens),
    (4, "speculative tokens per step", 60, sd_tokens_per_step),
    (5, "speculative speedup formula", 300, sd_speedup_formula),
    (6, "optimal window equals speed ratio", 120, optimal_window),
    (7, "parallel engine dominance", 300, dominance),
    (8, "scripted worked trace", 1, worked_trace),
    (9, "concurrent equals serial", 60, parallel_determinism),
    (10, "adaptive draft length", 60, adaptive_draft_length),
];

/// Runs the checks in `only` (all when `None`) in order.
pub fn run_checks(seed: u64, only: Option<&[u8]>) -> Vec<CheckOutcome> {
    let ctx = Context::new(seed);
    CHECKS
        .iter()
        .filter(|(id, ..)| only.is_none_or(|o| o.contains(id)))
        .map(|&(id, name, budget_s, f)| run_one(&ctx, id, name, Duration::from_secs(budget_s), f))
        .collect()
}

fn run_one(ctx: &Context, id: u8, name: &'static str, budget: Duration, f: CheckFn) -> CheckOutcome {
    let start = Instant::now();
    let result = f(ctx);
    let elapsed = start.elapsed();
    log::info!("check {id} finished in {elapsed:.2?}");
    let (ok, mut detail, histogram) = match result {
        Ok(v) => (v.ok, v.detail, v.histogram),
        Err(e) => (false, format!("error: {e}"), None),
    };
    let in_time = elapsed <= budget;
    if !in_time {
        detail.push_str(&format!("; over time budget of {budget:?}"));
    }
    CheckOutcome {
        id,
        name,
        passed: ok && in_time,
        detail,
        elapsed,
        budget,
        histogram,
    }
}

pub fn markdown_report(seed: u64, outcomes: &[CheckOutcome]) -> String {
    let mut out = String::new();
    let passed = outcomes.iter().filter(|o| o.passed).count();
    let _ = writeln!(out, "# Verification report\n");
    let _ = writeln!(out, "seed: {seed}, passed: {passed}/{}\n", outcomes.len());
    let _ = writeln!(out, "| # | check | result | time (s) | detail |");
    let _ = writeln!(out, "|---|---|---|---|---|");
    for o in outcomes {
        let _ = writeln!(
            out,
            "| {} | {} | {} | {:.2} | {} |",
            o.id,
            o.name,
            if o.passed { "pass" } else { "FAIL" },
            o.elapsed.as_secs_f64(),
            o.detail.replace('|', "\\|")
        );
    }
    for o in outcomes {
        if let Some(hist) = &o.histogram {
            let _ = writeln!(out, "\n## Draft run lengths (check {})\n", o.id);
            let _ = writeln!(out, "| run length | count |");
            let _ = writeln!(out, "|---|---|");
            for (len, count) in hist {
                let _ = writeln!(out, "| {len} | {count} |");
            }
        }
    }
    out
}

fn within(got: f64, want: f64, rel: f64) -> bool {
    (got / want - 1.0).abs() <= rel
}

fn exact_losslessness(ctx: &Context) -> Result<Verdict> {
    let len = 256;
    let mut runs = 0;
    for &alpha in &[0.3, 0.7, 0.95] {
        let pair = make_alpha_pair(alpha, 4)?;
        for s in 0..50u64 {
            let cfg = EngineConfig::new(4, len, ctx.seed(&[1, alpha.to_bits(), s]))?;
            for out in [
                decode_sd(&pair.draft, &pair.target, &[], &cfg)?,
                decode_pearl(&pair.draft, &pair.target, &[], &cfg)?,
            ] {
                if out.tokens.len() != len || out.tokens.iter().any(|&t| t != TokenId(0)) {
                    return Ok(Verdict::new(
                        false,
                        format!("alpha={alpha} seed {s}: output is not all token 0"),
                    ));
                }
                runs += 1;
            }
        }
    }
    Ok(Verdict::new(true, format!("{runs} runs of {len} tokens, all token 0")))
}

/// Byte-level 2-gram draft and 3-gram target over about 100 KB of text.
pub fn text_models(seed: u64) -> Result<(NGramModel, NGramModel)> {
    let text = synthetic_text(100_000, seed);
    Ok((
        train_bytes(text.as_bytes(), 2, 0.5)?,
        train_bytes(text.as_bytes(), 3, 0.5)?,
    ))
}

fn statistical_losslessness(ctx: &Context) -> Result<Verdict> {
    const RUNS: u64 = 50_000;
    const POSITIONS: usize = 4;
    let (draft, target) = text_models(ctx.seed(&[2]))?;
    let prompt: Vec<TokenId> = b"the ".iter().map(|&b| TokenId(b.into())).collect();
    let count = |pearl: bool| -> Result<Vec<Vec<u64>>> {
        let per_run = (0..RUNS)
            .into_par_iter()
            .map(|i| {
                let cfg = EngineConfig::new(4, POSITIONS, ctx.seed(&[2, u64::from(pearl), i]))?;
                let out = if pearl {
                    decode_pearl(&draft, &target, &prompt, &cfg)?
                } else {
                    decode_autoregressive(&target, &prompt, &cfg)?
                };
                Ok(out.tokens.0)
            })
            .collect::<pearl_lab::Result<Vec<_>>>()?;
        let mut counts = vec![vec![0u64; 257]; POSITIONS];
        for tokens in per_run {
            for (pos, t) in tokens.iter().enumerate() {
                counts[pos][t.index()] += 1;
            }
        }
        Ok(counts)
    };
    let pearl = count(true)?;
    let ar = count(false)?;
    let tests: Vec<stats::ChiSquare> = (0..POSITIONS).map(|p| stats::homogeneity(&pearl[p], &ar[p])).collect();
    let ok = tests.iter().all(|t| t.p_value > 1e-3);
    let ps: Vec<String> = tests
        .iter()
        .map(|t| format!("{:.3} (df {})", t.p_value, t.df))
        .collect();
    Ok(Verdict::new(
        ok,
        format!("{RUNS} runs each; per-position p-values {}", ps.join(", ")),
    ))
}

/// Completed segments of the parallel engine on an alpha pair, gathered
/// over as many seeded runs as needed.
fn pearl_runs(alpha: f64, gamma: usize, segments: usize, seed: u64) -> Result<Vec<usize>> {
    let pair = make_alpha_pair(alpha, 2)?;
    let mut runs = Vec::with_capacity(segments);
    let mut chunk = 0u64;
    while runs.len() < segments {
        let cfg = EngineConfig::new(gamma, usize::MAX, derive_seed(seed, &[chunk]))?.with_max_steps(50_000);
        runs.extend(draft_runs(&decode_pearl(&pair.draft, &pair.target, &[], &cfg)?.trace));
        chunk += 1;
    }
    runs.truncate(segments);
    Ok(runs)
}

fn segment_tokens(ctx: &Context) -> Result<Verdict> {
    const SEGMENTS: usize = 200_000;
    let mut ok = true;
    let mut parts = Vec::new();
    for &alpha in &[0.5, 0.8, 0.9] {
        let runs = pearl_runs(alpha, 4, SEGMENTS, ctx.seed(&[3, alpha.to_bits()]))?;
        let engine = runs.iter().map(|&r| r + 1).sum::<usize>() as f64 / SEGMENTS as f64;
        let oracle = pearl_segment_tokens_oracle(alpha, SEGMENTS, ctx.seed(&[3, alpha.to_bits(), 1]));
        let want = pearl_segment_tokens(alpha);
        ok &= within(engine, want, 0.02) && within(oracle, want, 0.02);
        parts.push(format!(
            "a={alpha}: engine {engine:.3}, oracle {oracle:.3}, 1/(1-a) {want:.3}, 1/(1-a)+1 {:.3}",
            pearl_tokens_with_bonus(alpha)
        ));
    }
    Ok(Verdict::new(ok, parts.join("; ")))
}

fn sd_tokens_per_step(ctx: &Context) -> Result<Verdict> {
    let mut ok = true;
    let mut parts = Vec::new();
    for &alpha in &[0.5, 0.8] {
        let pair = make_alpha_pair(alpha, 2)?;
        for &gamma in &[2usize, 4, 8] {
            let cfg = EngineConfig::new(gamma, usize::MAX, ctx.seed(&[4, alpha.to_bits(), gamma as u64]))?
                .with_max_steps(100_000);
            let out = decode_sd(&pair.draft, &pair.target, &[], &cfg)?;
            let mean = out.tokens.len() as f64 / out.trace.len() as f64;
            let want = sd_expected_tokens(alpha, gamma as f64);
            ok &= within(mean, want, 0.02);
            parts.push(format!("a={alpha} g={gamma}: {mean:.3} vs {want:.3}"));
        }
    }
    Ok(Verdict::new(ok, parts.join("; ")))
}

fn sd_speedup_formula(ctx: &Context) -> Result<Verdict> {
    let mut worst = 0.0f64;
    let mut worst_cell = None;
    for cell in ctx.sd_grid()? {
        let want = sd_speedup(cell.alpha, cell.gamma as f64, cell.c);
        let err = (cell.speedup_mean / want - 1.0).abs();
        if err >= worst {
            worst = err;
            worst_cell = Some(*cell);
        }
    }
    let cell = worst_cell.expect("non-empty grid");
    Ok(Verdict::new(
        worst <= 0.01,
        format!(
            "48 cells at {GRID_STEPS} steps; worst relative error {:.4}% at a={} g={} c={}",
            worst * 100.0,
            cell.alpha,
            cell.gamma,
            cell.c
        ),
    ))
}

fn optimal_window(ctx: &Context) -> Result<Verdict> {
    let draft = LatencyProfile::from_tokens_per_sec(73.38)?;
    let measured = [
        compute_c(draft, LatencyProfile::from_tokens_per_sec(27.96)?),
        compute_c(draft, LatencyProfile::from_tokens_per_sec(15.33)?),
    ];
    let gammas: Vec<usize> = (1..=8).collect();
    let mut ok = true;
    let mut parts = Vec::new();
    for &c in CS.iter().chain(&measured) {
        for &alpha in &[0.6, 0.8] {
            let cells = sweep_gamma(alpha, c, &gammas, GRID_STEPS, ctx.seed(&[6]))?;
            let best = argmax_gamma(&cells).expect("non-empty");
            let allowed = [c.floor() as usize, c.ceil() as usize];
            ok &= allowed.contains(&best);
            parts.push(format!("c={c:.2} a={alpha}: argmax g={best}"));
        }
    }
    Ok(Verdict::new(ok, parts.join("; ")))
}

fn dominance(ctx: &Context) -> Result<Verdict> {
    let mut ok = true;
    let mut parts = Vec::new();
    let grid = ctx.sd_grid()?;
    for &alpha in &ALPHAS {
        for &c in &CS {
            let sd_best = grid
                .iter()
                .filter(|x| x.alpha == alpha && x.c == c)
                .map(|x| x.speedup_mean)
                .fold(f64::NEG_INFINITY, f64::max);
            let pearl = sweep_cell(EngineKind::Pearl, alpha, c, c as usize, GRID_STEPS, ctx.seed(&[7]))?;
            ok &= pearl.speedup_mean >= sd_best;
            parts.push(format!(
                "a={alpha} c={c}: {:.3} (closed form {:.3}) vs {sd_best:.3}",
                pearl.speedup_mean,
                pearl_speedup(alpha, c, c)
            ));
        }
    }
    let mut runner = TestRunner::new_with_rng(
        PropConfig {
            cases: 1000,
            failure_persistence: None,
            ..PropConfig::default()
        },
        TestRng::from_seed(RngAlgorithm::ChaCha, &seed_bytes(ctx.seed(&[7, 1]))),
    );
    let prop = runner.run(&(0.0f64..1.0, 1.0f64..64.0), |(alpha, gamma)| {
        proptest::prop_assert!(
            comparative_gain(alpha, gamma) >= 0.0,
            "gain < 0 at a={} g={}",
            alpha,
            gamma
        );
        Ok(())
    });
    let prop_ok = prop.is_ok();
    parts.push(format!(
        "segment gain >= 0 over 1000 random pairs: {}",
        if prop_ok { "holds" } else { "violated" }
    ));
    Ok(Verdict::new(ok && prop_ok, parts.join("; ")))
}

fn seed_bytes(seed: u64) -> [u8; 32] {
    let mut out = [0u8; 32];
    for (i, chunk) in out.chunks_mut(8).enumerate() {
        chunk.copy_from_slice(&derive_seed(seed, &[i as u64]).to_le_bytes());
    }
    out
}

/// Draft and target for the worked trace over 16 tokens: drafts `x_i` have
/// id `i`, the target's corrections are `y1 = 13` and `y2 = 14`, window 3.
/// The target rejects `x1`, then accepts `x4..=x8` and rejects `x9`.
pub fn worked_example_models() -> (ScriptedModel, ScriptedModel) {
    const V: usize = 16;
    let hot = |t: u32| ProbDist::one_hot(V, TokenId(t));
    let mut draft = ScriptedModel::new(hot(15));
    let mut ctx: Vec<TokenId> = vec![];
    for x in 1..=3u32 {
        draft = draft.respond(&ctx, hot(x));
        ctx.push(TokenId(x));
    }
    let mut ctx = vec![TokenId(13)];
    for x in 4..=12u32 {
        draft = draft.respond(&ctx, hot(x));
        ctx.push(TokenId(x));
    }
    let mut target = ScriptedModel::new(hot(15)).respond(&[], hot(13));
    let mut ctx = vec![TokenId(13)];
    for x in 4..=8u32 {
        target = target.respond(&ctx, hot(x));
        ctx.push(TokenId(x));
    }
    (draft, target.respond(&ctx, hot(14)))
}

fn worked_trace(ctx: &Context) -> Result<Verdict> {
    let (draft, target) = worked_example_models();
    let cfg = EngineConfig::new(3, 7, ctx.seed(&[8]))?;
    let master = RandomStream::new(cfg.seed, 0);
    let mut side = DraftSide::new(&draft, &[], master.split(1), false);
    let mut rng = master.split(2);
    let mut state = DecodeState::new(&[]);
    let mut modes = vec![state.mode()];
    while !state.is_finished() {
        match state.mode() {
            DecodeMode::PreVerify => pearl_preverify_step(&mut state, &mut side, &target, &cfg, &mut rng)?,
            DecodeMode::PostVerify => pearl_postverify_step(&mut state, &mut side, &target, &cfg, &mut rng)?,
        };
        modes.push(state.mode());
    }
    let want_out: Vec<TokenId> = [13, 4, 5, 6, 7, 8, 14].map(TokenId).to_vec();
    use DecodeMode::*;
    let want_modes = [PreVerify, PreVerify, PostVerify, PostVerify, PreVerify];
    let ok = state.generated() == want_out.as_slice() && modes == want_modes;
    let names: Vec<String> = modes.iter().map(|m| format!("{m:?}")).collect();
    let decoded = decode_pearl(&draft, &target, &[], &cfg.with_execution(Execution::Concurrent))?;
    let ok = ok && decoded.tokens.0 == want_out;
    Ok(Verdict::new(
        ok,
        format!(
            "output {:?}, modes {}",
            state.generated().iter().map(|t| t.0).collect::<Vec<_>>(),
            names.join(" -> ")
        ),
    ))
}

fn parallel_determinism(ctx: &Context) -> Result<Verdict> {
    let (draft, target) = text_models(ctx.seed(&[9]))?;
    let pair = make_alpha_pair(0.8, 4)?;
    let prompt: Vec<TokenId> = b"a dog ".iter().map(|&b| TokenId(b.into())).collect();
    let mut compared = 0;
    for s in 0..100u64 {
        let seed = ctx.seed(&[9, s]);
        let cases = [
            (EngineConfig::new(4, 64, seed)?, true),
            (EngineConfig::new(5, 128, seed)?, false),
            (
                EngineConfig::new(2, 64, seed)?
                    .with_greedy(true)
                    .with_eos(Some(TokenId(b'.'.into()))),
                true,
            ),
        ];
        for (cfg, text) in cases {
            let (d, t, p): (
                &dyn pearl_lab::models::SequenceModel,
                &dyn pearl_lab::models::SequenceModel,
                &[TokenId],
            ) = if text {
                (&draft, &target, &prompt)
            } else {
                (&pair.draft, &pair.target, &[])
            };
            let serial = decode_pearl(d, t, p, &cfg)?;
            let conc = decode_pearl(d, t, p, &cfg.clone().with_execution(Execution::Concurrent))?;
            if serial != conc {
                return Ok(Verdict::new(false, format!("seed {s} differs: {cfg:?}")));
            }
            compared += 1;
        }
    }
    Ok(Verdict::new(true, format!("{compared} runs identical")))
}

fn adaptive_draft_length(ctx: &Context) -> Result<Verdict> {
    const RUNS: u64 = 100;
    const SEGMENTS: usize = 10_000;
    const GAMMA: usize = 4;
    let per_run: Vec<Vec<usize>> = (0..RUNS)
        .into_par_iter()
        .map(|r| pearl_runs(0.95, GAMMA, SEGMENTS, ctx.seed(&[10, r])))
        .collect::<Result<_>>()?;
    let exceeding = per_run.iter().filter(|runs| runs.iter().any(|&l| l > GAMMA)).count();
    let all: Vec<usize> = per_run.into_iter().flatten().collect();
    let frac = exceeding as f64 / RUNS as f64;
    let pair = make_alpha_pair(0.95, 2)?;
    let cfg = EngineConfig::new(GAMMA, usize::MAX, ctx.seed(&[10, RUNS]))?.with_max_steps(SEGMENTS);
    let sd_max = draft_runs(&decode_sd(&pair.draft, &pair.target, &[], &cfg)?.trace)
        .into_iter()
        .max()
        .unwrap_or(0);
    let hist = run_length_histogram(&all);
    Ok(Verdict {
        ok: frac >= 0.99 && sd_max <= GAMMA,
        detail: format!(
            "max run > {GAMMA} in {:.1}% of {RUNS} runs of {SEGMENTS} segments; longest run {}; fixed-window max {sd_max}",
            frac * 100.0,
            all.iter().max().unwrap_or(&0)
        ),
        histogram: Some(hist),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quick_checks_pass() {
        let out = run_checks(0, Some(&[1, 8]));
        assert_eq!(out.len(), 2);
        for o in &out {
            assert!(o.passed, "{o:?}");
        }
        let report = markdown_report(0, &out);
        assert!(report.contains("| 8 | scripted worked trace | pass |"));
    }
}
