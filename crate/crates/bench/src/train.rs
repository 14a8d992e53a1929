//! `train`: fit a byte-level n-gram model and save it.

use std::fs;
use std::path::Path;

use pearl_lab::models::{train_ngram, NGramModel};
use pearl_lab::{TokenSeq, Vocab};

use crate::error::{BenchError, Result};
use crate::tokenize::{Tokenizer, TokenizerKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrainReport {
    pub vocab_size: usize,
    pub contexts: usize,
}

pub fn train_bytes(corpus: &[u8], order: usize, lambda: f64) -> Result<NGramModel> {
    let seq: TokenSeq = Tokenizer::fit(TokenizerKind::Bytes, corpus).encode(corpus);
    Ok(train_ngram(&[seq], order, lambda, Vocab::bytes().size())?)
}

pub fn cmd_train(corpus_path: &Path, order: usize, lambda: f64, out_path: &Path) -> Result<TrainReport> {
    let corpus = fs::read(corpus_path).map_err(|e| BenchError::io(corpus_path, e))?;
    let model = train_bytes(&corpus, order, lambda)?;
    if let Some(dir) = out_path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| BenchError::io(dir, e))?;
    }
    fs::write(out_path, model.to_bytes()).map_err(|e| BenchError::io(out_path, e))?;
    Ok(TrainReport {
        vocab_size: pearl_lab::models::SequenceModel::vocab_size(&model),
        contexts: model.context_count(),
    })
}

pub fn load_model(path: &Path) -> Result<NGramModel> {
    let bytes = fs::read(path).map_err(|e| BenchError::io(path, e))?;
    Ok(NGramModel::read_from(&bytes[..])?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use pearl_lab::models::SequenceModel;
    use pearl_lab::TokenId;

    #[test]
    fn empty_corpus_rejected() {
        assert!(matches!(
            train_bytes(b"", 2, 1.0),
            Err(BenchError::Engine(pearl_lab::Error::EmptyCorpus))
        ));
    }

    #[test]
    fn unigram_ignores_prefix() {
        let m = train_bytes(b"abcab", 1, 0.5).unwrap();
        let a = m.next_dist(&[]);
        let b = m.next_dist(&[TokenId(b'a'.into()), TokenId(b'b'.into())]);
        assert_eq!(a.as_slice(), b.as_slice());
    }
}
