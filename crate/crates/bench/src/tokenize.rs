//! Byte-level and whitespace tokenizers.

use std::collections::BTreeSet;

use pearl_lab::{TokenId, TokenSeq, Vocab};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenizerKind {
    /// One token per byte plus EOS (id 256).
    #[default]
    Bytes,
    /// Words split on whitespace, with `<unk>` and EOS appended to the corpus
    /// vocabulary.
    Whitespace,
}

#[derive(Debug, Clone)]
pub enum Tokenizer {
    Bytes,
    Whitespace { words: Vec<String> },
}

pub const UNK: &str = "<unk>";
pub const EOS: &str = "<eos>";

impl Tokenizer {
    /// Builds the tokenizer; the whitespace vocabulary comes from `corpus`.
    pub fn fit(kind: TokenizerKind, corpus: &[u8]) -> Self {
        match kind {
            TokenizerKind::Bytes => Self::Bytes,
            TokenizerKind::Whitespace => {
                let text = String::from_utf8_lossy(corpus);
                let set: BTreeSet<&str> = text.split_whitespace().collect();
                Self::Whitespace {
                    words: set.into_iter().map(str::to_owned).collect(),
                }
            }
        }
    }

    pub fn vocab(&self) -> Vocab {
        match self {
            Self::Bytes => Vocab::bytes(),
            Self::Whitespace { words } => {
                let mut names = words.clone();
                names.push(UNK.into());
                names.push(EOS.into());
                let size = names.len();
                Vocab::new(size, Some(TokenId(size as u32 - 1)))
                    .and_then(|v| v.with_names(names))
                    .expect("names match size")
            }
        }
    }

    pub fn encode(&self, text: &[u8]) -> TokenSeq {
        match self {
            Self::Bytes => text.iter().map(|&b| TokenId(b.into())).collect(),
            Self::Whitespace { words } => {
                let unk = TokenId(words.len() as u32);
                String::from_utf8_lossy(text)
                    .split_whitespace()
                    .map(|w| match words.binary_search_by(|x| x.as_str().cmp(w)) {
                        Ok(i) => TokenId(i as u32),
                        Err(_) => unk,
                    })
                    .collect()
            }
        }
    }

    /// Renders tokens back to text; EOS is dropped.
    pub fn decode(&self, tokens: &[TokenId]) -> String {
        match self {
            Self::Bytes => {
                let bytes: Vec<u8> = tokens.iter().filter(|t| t.0 < 256).map(|t| t.0 as u8).collect();
                String::from_utf8_lossy(&bytes).into_owned()
            }
            Self::Whitespace { words } => tokens
                .iter()
                .filter_map(|t| match t.index() {
                    i if i < words.len() => Some(words[i].as_str()),
                    i if i == words.len() => Some(UNK),
                    _ => None,
                })
                .collect::<Vec<_>>()
                .join(" "),
        }
    }
}
