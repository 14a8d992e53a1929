//! `run`: decode every prompt of an experiment and write its artifacts.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use pearl_lab::engines::{
    decode_autoregressive, decode_pearl, decode_sd, draft_runs, run_length_histogram, Decoded, EngineConfig,
    EngineKind, Execution, StepTrace,
};
use pearl_lab::models::{make_alpha_pair, train_ngram, Delayed, LatencyProfile, SequenceModel};
use pearl_lab::rng::derive_seed;
use pearl_lab::simulator::{simulate_run, SimReport, TimingParams};
use pearl_lab::{TokenId, TokenSeq};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentConfig, ModelSpec};
use crate::error::{BenchError, Result};
use crate::plot;
use crate::tokenize::Tokenizer;

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub parallel_prompts: bool,
    /// Inject real forward latency and time the run on the wall clock.
    pub real_latency: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub engine: EngineKind,
    pub gamma: usize,
    pub prompts: usize,
    pub steps: usize,
    pub tokens: usize,
    pub mean_finalized_per_step: f64,
    /// Accepted over tested drafts; `None` when nothing was tested.
    pub acceptance_rate: Option<f64>,
    /// Completed draft runs, i.e. the histogram mass.
    pub segments: usize,
    pub run_length_histogram: Vec<(usize, usize)>,
    pub simulated_speedup: f64,
    pub wall_clock_secs: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct PromptResult {
    pub prompt: String,
    pub output: String,
    pub decoded: Decoded,
    pub sim: SimReport,
    pub wall: Duration,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub summary: RunSummary,
    pub prompts: Vec<PromptResult>,
}

struct Models {
    draft: Box<dyn SequenceModel>,
    target: Box<dyn SequenceModel>,
    tokenizer: Option<Tokenizer>,
    eos: Option<TokenId>,
}

fn build_models(cfg: &ExperimentConfig, timing: TimingParams, real: bool) -> Result<Models> {
    let draft_lat = LatencyProfile::new(timing.t)?;
    let target_lat = LatencyProfile::new(timing.target_time())?;
    let (draft, target, tokenizer, eos): (Box<dyn SequenceModel>, Box<dyn SequenceModel>, _, _) = match &cfg.model {
        ModelSpec::Synthetic(s) => {
            let pair = make_alpha_pair(s.alpha, s.vocab)?.with_timing(timing.t, timing.c)?;
            (Box::new(pair.draft), Box::new(pair.target), None, None)
        }
        ModelSpec::Ngram(n) => {
            let text = fs::read(&n.corpus).map_err(|e| BenchError::io(&n.corpus, e))?;
            let tok = Tokenizer::fit(cfg.tokenizer, &text);
            let vocab = tok.vocab();
            let corpus = [tok.encode(&text)];
            let draft = train_ngram(&corpus, n.draft_order, n.lambda, vocab.size())?.with_latency(draft_lat);
            let target = train_ngram(&corpus, n.target_order, n.lambda, vocab.size())?.with_latency(target_lat);
            log::info!(
                "trained {}-gram draft and {}-gram target over {} tokens",
                n.draft_order,
                n.target_order,
                corpus[0].len()
            );
            (Box::new(draft), Box::new(target), Some(tok), vocab.eos())
        }
    };
    if !real {
        return Ok(Models {
            draft,
            target,
            tokenizer,
            eos,
        });
    }
    let unit = Duration::from_secs_f64(cfg.real_latency.unit_ms / 1000.0);
    let injection = cfg.real_latency.injection.into();
    Ok(Models {
        draft: Box::new(Delayed::new(draft, unit, injection)),
        target: Box::new(Delayed::new(target, unit, injection)),
        tokenizer,
        eos,
    })
}

fn read_prompts(cfg: &ExperimentConfig) -> Result<Vec<String>> {
    let Some(path) = &cfg.prompts else {
        return Ok(vec![String::new()]);
    };
    let text = fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
    let lines: Vec<String> = text.lines().map(str::to_owned).collect();
    Ok(if lines.is_empty() { vec![String::new()] } else { lines })
}

fn encode_prompt(models: &Models, line: &str, vocab: usize) -> Result<TokenSeq> {
    match &models.tokenizer {
        Some(tok) => Ok(tok.encode(line.as_bytes())),
        None => line
            .split_whitespace()
            .map(|w| match w.parse::<u32>() {
                Ok(id) if (id as usize) < vocab => Ok(TokenId(id)),
                _ => Err(BenchError::config(
                    "prompts",
                    format!("`{w}` is not a token id below {vocab}"),
                )),
            })
            .collect(),
    }
}

fn render(models: &Models, tokens: &[TokenId]) -> String {
    match &models.tokenizer {
        Some(tok) => tok.decode(tokens),
        None => tokens.iter().map(|t| t.0.to_string()).collect::<Vec<_>>().join(" "),
    }
}

/// Runs `kind` with the matching decoder.
pub fn decode(
    kind: EngineKind,
    draft: &dyn SequenceModel,
    target: &dyn SequenceModel,
    prefix: &[TokenId],
    cfg: &EngineConfig,
) -> pearl_lab::Result<Decoded> {
    match kind {
        EngineKind::Ar => decode_autoregressive(target, prefix, cfg),
        EngineKind::Sd => decode_sd(draft, target, prefix, cfg),
        EngineKind::Pearl => decode_pearl(draft, target, prefix, cfg),
    }
}

/// Decodes every prompt. Prompt `i` always gets seed `derive_seed(seed, [i])`,
/// so results do not depend on `parallel_prompts`.
pub fn execute(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RunOutcome> {
    let timing = cfg.timing.params()?;
    let models = build_models(cfg, timing, opts.real_latency)?;
    let seed = opts.seed.unwrap_or(cfg.seed);
    let prompts = read_prompts(cfg)?;
    let vocab = models.target.vocab_size();
    let encoded = prompts
        .iter()
        .map(|p| encode_prompt(&models, p, vocab))
        .collect::<Result<Vec<_>>>()?;
    let execution = if opts.real_latency && cfg.engine == EngineKind::Pearl {
        Execution::Concurrent
    } else {
        Execution::Serial
    };
    let one = |i: usize| -> Result<PromptResult> {
        let mut ecfg = EngineConfig::new(cfg.window(), cfg.max_new_tokens, derive_seed(seed, &[i as u64]))?
            .with_greedy(cfg.greedy)
            .with_eos(models.eos)
            .with_execution(execution);
        if let Some(m) = cfg.max_steps {
            ecfg = ecfg.with_max_steps(m);
        }
        let start = Instant::now();
        let decoded = decode(cfg.engine, &*models.draft, &*models.target, &encoded[i], &ecfg)?;
        let wall = start.elapsed();
        let sim = simulate_run(&decoded.trace, timing, cfg.engine)?;
        log::debug!(
            "prompt {i}: {} tokens in {} steps",
            decoded.tokens.len(),
            decoded.trace.len()
        );
        Ok(PromptResult {
            prompt: prompts[i].clone(),
            output: render(&models, &decoded.tokens),
            decoded,
            sim,
            wall,
        })
    };
    let results: Vec<PromptResult> = if opts.parallel_prompts {
        (0..prompts.len()).into_par_iter().map(one).collect::<Result<_>>()?
    } else {
        (0..prompts.len()).map(one).collect::<Result<_>>()?
    };
    let summary = summarize(cfg, timing, &results, opts.real_latency);
    Ok(RunOutcome {
        summary,
        prompts: results,
    })
}

fn summarize(cfg: &ExperimentConfig, timing: TimingParams, results: &[PromptResult], real: bool) -> RunSummary {
    let traces: Vec<&[StepTrace]> = results.iter().map(|r| r.decoded.trace.as_slice()).collect();
    let mut s = stats(cfg.engine, &traces);
    let total_time: f64 = results.iter().map(|r| r.sim.total_time).sum();
    s.simulated_speedup = if total_time > 0.0 {
        s.tokens as f64 / total_time * timing.target_time()
    } else {
        0.0
    };
    s.gamma = cfg.window();
    s.prompts = results.len();
    s.wall_clock_secs = real.then(|| results.iter().map(|r| r.wall.as_secs_f64()).sum());
    s
}

fn stats(engine: EngineKind, traces: &[&[StepTrace]]) -> RunSummary {
    let steps: usize = traces.iter().map(|t| t.len()).sum();
    let tokens: usize = traces.iter().flat_map(|t| t.iter()).map(|s| s.finalized).sum();
    let verified: usize = traces.iter().flat_map(|t| t.iter()).map(|s| s.verified).sum();
    let accepted: usize = traces.iter().flat_map(|t| t.iter()).map(|s| s.accepted_count).sum();
    let runs: Vec<usize> = traces.iter().flat_map(|t| draft_runs(t)).collect();
    RunSummary {
        engine,
        gamma: 0,
        prompts: traces.len(),
        steps,
        tokens,
        mean_finalized_per_step: if steps > 0 { tokens as f64 / steps as f64 } else { 0.0 },
        acceptance_rate: (verified > 0).then(|| accepted as f64 / verified as f64),
        segments: runs.len(),
        run_length_histogram: run_length_histogram(&runs),
        simulated_speedup: 0.0,
        wall_clock_secs: None,
    }
}

#[derive(Serialize)]
struct TraceLine<'a> {
    prompt: usize,
    #[serde(flatten)]
    step: &'a StepTrace,
}

#[derive(Serialize)]
struct OutputLine<'a> {
    prompt: usize,
    input: &'a str,
    output: &'a str,
    tokens: usize,
}

fn fmt6(x: f64) -> String {
    format!("{x:.6}")
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| BenchError::io(path, e))
}

fn csv_err(path: &Path, e: csv::Error) -> BenchError {
    BenchError::io(path, e.into())
}

/// Writes `trace.jsonl`, `outputs.jsonl`, `summary.csv`, `run_lengths.csv`,
/// `steps.svg` and `run_lengths.svg` into `dir`.
pub fn write_artifacts(outcome: &RunOutcome, timing: TimingParams, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| BenchError::io(dir, e))?;

    let mut trace = Vec::new();
    let mut outputs = Vec::new();
    for (i, r) in outcome.prompts.iter().enumerate() {
        for step in &r.decoded.trace {
            serde_json::to_writer(&mut trace, &TraceLine { prompt: i, step }).expect("serializable");
            trace.push(b'\n');
        }
        let line = OutputLine {
            prompt: i,
            input: &r.prompt,
            output: &r.output,
            tokens: r.decoded.tokens.len(),
        };
        serde_json::to_writer(&mut outputs, &line).expect("serializable");
        outputs.push(b'\n');
    }
    write_file(&dir.join("trace.jsonl"), &trace)?;
    write_file(&dir.join("outputs.jsonl"), &outputs)?;

    let path = dir.join("summary.csv");
    let mut w = csv::Writer::from_path(&path).map_err(|e| csv_err(&path, e))?;
    w.write_record([
        "prompt",
        "engine",
        "gamma",
        "steps",
        "tokens",
        "mean_finalized_per_step",
        "acceptance_rate",
        "segments",
        "simulated_speedup",
        "wall_clock_s",
    ])
    .map_err(|e| csv_err(&path, e))?;
    let s = &outcome.summary;
    let row = |label: String, st: &RunSummary, speedup: f64, wall: Option<f64>| {
        vec![
            label,
            s.engine.to_string(),
            s.gamma.to_string(),
            st.steps.to_string(),
            st.tokens.to_string(),
            fmt6(st.mean_finalized_per_step),
            st.acceptance_rate.map(fmt6).unwrap_or_default(),
            st.segments.to_string(),
            fmt6(speedup),
            wall.map(fmt6).unwrap_or_default(),
        ]
    };
    for (i, r) in outcome.prompts.iter().enumerate() {
        let st = stats(s.engine, &[&r.decoded.trace]);
        let wall = s.wall_clock_secs.map(|_| r.wall.as_secs_f64());
        w.write_record(row(i.to_string(), &st, r.sim.speedup_vs_ar, wall))
            .map_err(|e| csv_err(&path, e))?;
    }
    w.write_record(row("all".into(), s, s.simulated_speedup, s.wall_clock_secs))
        .map_err(|e| csv_err(&path, e))?;
    w.flush().map_err(|e| BenchError::io(&path, e))?;

    let path = dir.join("run_lengths.csv");
    let mut w = csv::Writer::from_path(&path).map_err(|e| csv_err(&path, e))?;
    w.write_record(["run_length", "count"]).map_err(|e| csv_err(&path, e))?;
    for &(len, count) in &s.run_length_histogram {
        w.write_record([len.to_string(), count.to_string()])
            .map_err(|e| csv_err(&path, e))?;
    }
    w.flush().map_err(|e| BenchError::io(&path, e))?;

    let per_step: Vec<f64> = outcome
        .prompts
        .iter()
        .flat_map(|r| r.decoded.trace.iter().map(|st| st.finalized as f64))
        .collect();
    let title = format!(
        "{} finalized tokens per step (c = {}, gamma = {})",
        s.engine, timing.c, s.gamma
    );
    write_file(&dir.join("steps.svg"), plot::line_chart(&per_step, &title).as_bytes())?;
    let bars = plot::bar_chart(&s.run_length_histogram, &format!("{} draft run lengths", s.engine));
    write_file(&dir.join("run_lengths.svg"), bars.as_bytes())?;
    Ok(())
}

/// Loads the config at `path`, runs it and writes the artifacts to `--out`,
/// the config's `output_dir`, or `./out`.
pub fn cmd_run(path: &Path, opts: &RunOptions) -> Result<RunSummary> {
    let cfg = ExperimentConfig::load(path)?;
    let outcome = execute(&cfg, opts)?;
    let dir = opts
        .out
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    write_artifacts(&outcome, cfg.timing.params()?, &dir)?;
    Ok(outcome.summary)
}
