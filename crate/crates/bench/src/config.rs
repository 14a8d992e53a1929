//! Experiment configuration (JSON, strict).
//!
//! The schema is documented in `config.schema.json` next to this crate's
//! manifest. Unknown keys are rejected everywhere and errors carry the dotted
//! path of the offending field.

use std::path::{Path, PathBuf};

use pearl_lab::engines::EngineKind;
use pearl_lab::models::Injection;
use pearl_lab::simulator::TimingParams;
use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};
use crate::tokenize::TokenizerKind;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub engine: EngineKind,
    /// Draft window. Required for `sd` and `pearl`, ignored for `ar`.
    #[serde(default)]
    pub gamma: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    pub max_new_tokens: usize,
    /// One prompt per line. Missing means a single empty prompt.
    #[serde(default)]
    pub prompts: Option<PathBuf>,
    pub model: ModelSpec,
    pub timing: TimingSpec,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub tokenizer: TokenizerKind,
    #[serde(default)]
    pub greedy: bool,
    /// Stops a prompt after this many engine steps.
    #[serde(default)]
    pub max_steps: Option<usize>,
    #[serde(default)]
    pub real_latency: RealLatency,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelSpec {
    Ngram(NgramSpec),
    /// The alpha pair: one-hot target, draft overlap `alpha`. Prompts are
    /// whitespace-separated token ids.
    Synthetic(SyntheticSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NgramSpec {
    pub corpus: PathBuf,
    pub draft_order: usize,
    pub target_order: usize,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
}

fn default_lambda() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub alpha: f64,
    #[serde(default = "default_vocab")]
    pub vocab: usize,
}

fn default_vocab() -> usize {
    2
}

/// Either `{t, c}` or `{draft_latency, target_latency}`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimingSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub draft_latency: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_latency: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InjectionKind {
    #[default]
    Sleep,
    BusyWait,
}

impl From<InjectionKind> for Injection {
    fn from(k: InjectionKind) -> Self {
        match k {
            InjectionKind::Sleep => Injection::Sleep,
            InjectionKind::BusyWait => Injection::BusyWait,
        }
    }
}

/// Wall-clock mode settings, used with `--real-latency`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RealLatency {
    /// Real milliseconds per unit of model forward time.
    #[serde(default = "default_unit_ms")]
    pub unit_ms: f64,
    #[serde(default)]
    pub injection: InjectionKind,
}

fn default_unit_ms() -> f64 {
    1.0
}

impl Default for RealLatency {
    fn default() -> Self {
        Self {
            unit_ms: default_unit_ms(),
            injection: InjectionKind::default(),
        }
    }
}

impl TimingSpec {
    pub fn params(&self) -> Result<TimingParams> {
        let bad = |msg: &str| BenchError::config("timing", msg);
        let params = match (self.t, self.c, self.draft_latency, self.target_latency) {
            (t, Some(c), None, None) => TimingParams::new(t.unwrap_or(1.0), c),
            (None, None, Some(d), Some(tg)) => TimingParams::new(d, tg / d),
            _ => return Err(bad("give either {t, c} or {draft_latency, target_latency}")),
        };
        params.map_err(|e| bad(&e.to_string()))
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            BenchError::config(path, e.into_inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads `path` and resolves relative file references against its
    /// directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
        let mut cfg = Self::from_json(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        let rebase = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(p) = cfg.prompts.as_mut() {
            rebase(p);
        }
        if let Some(p) = cfg.output_dir.as_mut() {
            rebase(p);
        }
        if let ModelSpec::Ngram(n) = &mut cfg.model {
            rebase(&mut n.corpus);
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        match (self.engine, self.gamma) {
            (EngineKind::Ar, _) => {}
            (kind, None) => return Err(BenchError::config("gamma", format!("required for engine `{kind}`"))),
            (_, Some(0)) => return Err(BenchError::config("gamma", "must be at least 1")),
            _ => {}
        }
        if self.max_new_tokens == 0 {
            return Err(BenchError::config("max_new_tokens", "must be at least 1"));
        }
        match &self.model {
            ModelSpec::Ngram(n) => {
                if n.draft_order == 0 {
                    return Err(BenchError::config("model.ngram.draft_order", "must be at least 1"));
                }
                if n.target_order == 0 {
                    return Err(BenchError::config("model.ngram.target_order", "must be at least 1"));
                }
                if !(n.lambda > 0.0 && n.lambda.is_finite()) {
                    return Err(BenchError::config("model.ngram.lambda", "must be positive"));
                }
            }
            ModelSpec::Synthetic(s) => {
                if !(0.0..=1.0).contains(&s.alpha) {
                    return Err(BenchError::config("model.synthetic.alpha", "must be in [0, 1]"));
                }
                if s.vocab < 2 {
                    return Err(BenchError::config("model.synthetic.vocab", "must be at least 2"));
                }
            }
        }
        if !(self.real_latency.unit_ms > 0.0 && self.real_latency.unit_ms.is_finite()) {
            return Err(BenchError::config("real_latency.unit_ms", "must be positive"));
        }
        self.timing.params()?;
        Ok(())
    }

    /// The configured window; autoregressive runs use 1.
    pub fn window(&self) -> usize {
        self.gamma.unwrap_or(1)
    }
}
