//! Add-λ smoothed n-gram models and their binary file format.
//!
//! File layout (all integers little-endian):
//!
//! ```text
//! magic      6 bytes  "PRLNG1"
//! order      u32
//! vocab      u32
//! lambda     f64 (IEEE-754)
//! contexts   u32      number of context records
//! per context, in ascending lexicographic order of the context tokens:
//!   ctx_len  u32
//!   tokens   ctx_len x u32
//!   entries  u32
//!   per entry, ascending token id:
//!     token  u32
//!     count  u32
//! ```

use std::collections::HashMap;
use std::io::{Read, Write};

use super::{LatencyProfile, SequenceModel};
use crate::error::{Error, Result};
use crate::prob::ProbDist;
use crate::token::{TokenId, TokenSeq};

pub const NGRAM_MAGIC: &[u8; 6] = b"PRLNG1";

#[derive(Debug, Clone, PartialEq, Default)]
struct ContextCounts {
    /// Sorted by token id.
    entries: Vec<(TokenId, u32)>,
    total: u64,
}

impl ContextCounts {
    fn bump(&mut self, token: TokenId) {
        match self.entries.binary_search_by_key(&token, |e| e.0) {
            Ok(i) => self.entries[i].1 += 1,
            Err(i) => self.entries.insert(i, (token, 1)),
        }
        self.total += 1;
    }
}

/// An order-`k` model conditioning on the last `k - 1` tokens.
///
/// Positions closer than `k - 1` to the start of a training sequence are
/// counted under their shorter context, so short prefixes get trained
/// statistics too.
#[derive(Debug, Clone, PartialEq)]
pub struct NGramModel {
    order: usize,
    vocab_size: usize,
    lambda: f64,
    contexts: HashMap<Vec<TokenId>, ContextCounts>,
    latency: LatencyProfile,
}

/// Counts every window of `order` tokens in `corpus`.
pub fn train_ngram(corpus: &[TokenSeq], order: usize, smoothing_lambda: f64, vocab_size: usize) -> Result<NGramModel> {
    if order == 0 {
        return Err(Error::InvalidOrder(order));
    }
    check_lambda(smoothing_lambda)?;
    if vocab_size == 0 {
        return Err(Error::InvalidConfig("vocabulary must not be empty".into()));
    }
    if corpus.iter().all(|s| s.is_empty()) {
        return Err(Error::EmptyCorpus);
    }
    let mut contexts: HashMap<Vec<TokenId>, ContextCounts> = HashMap::new();
    for seq in corpus {
        seq.validate(vocab_size)?;
        for (i, &tok) in seq.iter().enumerate() {
            let ctx = &seq[i.saturating_sub(order - 1)..i];
            match contexts.get_mut(ctx) {
                Some(c) => c.bump(tok),
                None => {
                    let mut c = ContextCounts::default();
                    c.bump(tok);
                    contexts.insert(ctx.to_vec(), c);
                }
            }
        }
    }
    Ok(NGramModel {
        order,
        vocab_size,
        lambda: smoothing_lambda,
        contexts,
        latency: LatencyProfile::default(),
    })
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "smoothing lambda must be positive, got {lambda}"
        )));
    }
    Ok(())
}

impl NGramModel {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn context_count(&self) -> usize {
        self.contexts.len()
    }

    pub fn with_latency(mut self, latency: LatencyProfile) -> Self {
        self.latency = latency;
        self
    }

    /// Raw count of `token` following `context` (the full context key).
    pub fn count(&self, context: &[TokenId], token: TokenId) -> u32 {
        self.contexts
            .get(context)
            .and_then(|c| {
                c.entries
                    .binary_search_by_key(&token, |e| e.0)
                    .ok()
                    .map(|i| c.entries[i].1)
            })
            .unwrap_or(0)
    }

    fn context_of<'a>(&self, prefix: &'a [TokenId]) -> &'a [TokenId] {
        &prefix[prefix.len().saturating_sub(self.order - 1)..]
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(NGRAM_MAGIC)?;
        w.write_all(&(self.order as u32).to_le_bytes())?;
        w.write_all(&(self.vocab_size as u32).to_le_bytes())?;
        w.write_all(&self.lambda.to_le_bytes())?;
        w.write_all(&(self.contexts.len() as u32).to_le_bytes())?;
        let mut keys: Vec<&Vec<TokenId>> = self.contexts.keys().collect();
        keys.sort();
        for key in keys {
            let counts = &self.contexts[key];
            w.write_all(&(key.len() as u32).to_le_bytes())?;
            for t in key {
                w.write_all(&t.0.to_le_bytes())?;
            }
            w.write_all(&(counts.entries.len() as u32).to_le_bytes())?;
            for &(t, n) in &counts.entries {
                w.write_all(&t.0.to_le_bytes())?;
                w.write_all(&n.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to a Vec cannot fail");
        buf
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 6];
        read_exact(&mut r, &mut magic)?;
        if &magic != NGRAM_MAGIC {
            return Err(Error::ModelFormat("bad magic bytes".into()));
        }
        let order = read_u32(&mut r)? as usize;
        let vocab_size = read_u32(&mut r)? as usize;
        let mut lb = [0u8; 8];
        read_exact(&mut r, &mut lb)?;
        let lambda = f64::from_le_bytes(lb);
        if order == 0 {
            return Err(Error::ModelFormat("order 0".into()));
        }
        if vocab_size == 0 {
            return Err(Error::ModelFormat("empty vocabulary".into()));
        }
        check_lambda(lambda).map_err(|e| Error::ModelFormat(e.to_string()))?;

        let n_ctx = read_u32(&mut r)? as usize;
        let mut contexts = HashMap::with_capacity(n_ctx.min(1 << 20));
        for _ in 0..n_ctx {
            let len = read_u32(&mut r)? as usize;
            if len >= order {
                return Err(Error::ModelFormat(format!(
                    "context of length {len} in an order-{order} model"
                )));
            }
            let key = (0..len)
                .map(|_| read_token(&mut r, vocab_size))
                .collect::<Result<Vec<_>>>()?;
            let n = read_u32(&mut r)? as usize;
            let mut counts = ContextCounts::default();
            for _ in 0..n {
                let tok = read_token(&mut r, vocab_size)?;
                let c = read_u32(&mut r)?;
                if counts.entries.last().is_some_and(|e| e.0 >= tok) {
                    return Err(Error::ModelFormat("count entries not ascending".into()));
                }
                counts.entries.push((tok, c));
                counts.total += u64::from(c);
            }
            if contexts.insert(key, counts).is_some() {
                return Err(Error::ModelFormat("duplicate context".into()));
            }
        }
        let mut rest = [0u8; 1];
        if r.read(&mut rest).map_err(io_err)? != 0 {
            return Err(Error::ModelFormat("trailing bytes".into()));
        }
        Ok(Self {
            order,
            vocab_size,
            lambda,
            contexts,
            latency: LatencyProfile::default(),
        })
    }
}

fn io_err(e: std::io::Error) -> Error {
    Error::ModelFormat(e.to_string())
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<()> {
    r.read_exact(buf).map_err(io_err)
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    read_exact(r, &mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_token<R: Read>(r: &mut R, vocab: usize) -> Result<TokenId> {
    let t = read_u32(r)?;
    if t as usize >= vocab {
        return Err(Error::ModelFormat(format!("token {t} outside vocabulary {vocab}")));
    }
    Ok(TokenId(t))
}

impl SequenceModel for NGramModel {
    fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    /// `(count(ctx, t) + λ) / (count(ctx, ·) + λV)`; uniform for unseen contexts.
    fn next_dist(&self, prefix: &[TokenId]) -> ProbDist {
        let v = self.vocab_size;
        let Some(counts) = self.contexts.get(self.context_of(prefix)) else {
            return ProbDist::uniform(v);
        };
        let denom = counts.total as f64 + self.lambda * v as f64;
        let mut probs = vec![self.lambda / denom; v];
        for &(t, n) in &counts.entries {
            probs[t.index()] = (f64::from(n) + self.lambda) / denom;
        }
        ProbDist::new(probs).expect("smoothed counts form a distribution")
    }

    fn latency(&self) -> LatencyProfile {
        self.latency
    }
}
