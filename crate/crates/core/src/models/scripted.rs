use std::collections::HashMap;

use super::{LatencyProfile, SequenceModel};
use crate::prob::ProbDist;
use crate::token::TokenId;

/// Table-driven model for tests.
///
/// Lookup order: exact prefix, then prefix length, then the fallback.
#[derive(Debug, Clone)]
pub struct ScriptedModel {
    by_prefix: HashMap<Vec<TokenId>, ProbDist>,
    by_len: HashMap<usize, ProbDist>,
    fallback: ProbDist,
    latency: LatencyProfile,
}

impl ScriptedModel {
    pub fn new(fallback: ProbDist) -> Self {
        Self {
            by_prefix: HashMap::new(),
            by_len: HashMap::new(),
            fallback,
            latency: LatencyProfile::default(),
        }
    }

    pub fn respond(mut self, prefix: &[TokenId], dist: ProbDist) -> Self {
        assert_eq!(dist.len(), self.fallback.len(), "scripted dist vocab mismatch");
        self.by_prefix.insert(prefix.to_vec(), dist);
        self
    }

    pub fn respond_at_len(mut self, len: usize, dist: ProbDist) -> Self {
        assert_eq!(dist.len(), self.fallback.len(), "scripted dist vocab mismatch");
        self.by_len.insert(len, dist);
        self
    }

    pub fn with_latency(mut self, latency: LatencyProfile) -> Self {
        self.latency = latency;
        self
    }
}

impl SequenceModel for ScriptedModel {
    fn vocab_size(&self) -> usize {
        self.fallback.len()
    }

    fn next_dist(&self, prefix: &[TokenId]) -> ProbDist {
        self.by_prefix
            .get(prefix)
            .or_else(|| self.by_len.get(&prefix.len()))
            .unwrap_or(&self.fallback)
            .clone()
    }

    fn latency(&self) -> LatencyProfile {
        self.latency
    }
}
