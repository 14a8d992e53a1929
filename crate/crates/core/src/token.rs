//! Flat token id space shared by every model in a decoding pair.

use std::fmt;
use std::ops::{Deref, DerefMut};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TokenId(pub u32);

impl TokenId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl From<u32> for TokenId {
    fn from(v: u32) -> Self {
        TokenId(v)
    }
}

impl fmt::Display for TokenId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// An ordered token sequence (a prefix, or a decoded continuation).
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TokenSeq(pub Vec<TokenId>);

impl TokenSeq {
    pub fn new() -> Self {
        Self(Vec::new())
    }

    /// Checks every id against a vocabulary size.
    pub fn validate(&self, vocab_size: usize) -> Result<()> {
        match self.0.iter().find(|t| t.index() >= vocab_size) {
            Some(&token) => Err(Error::TokenOutOfRange {
                token,
                vocab: vocab_size,
            }),
            None => Ok(()),
        }
    }

    pub fn into_inner(self) -> Vec<TokenId> {
        self.0
    }
}

impl Deref for TokenSeq {
    type Target = Vec<TokenId>;
    fn deref(&self) -> &Self::Target {
        &self.0
    }
}

impl DerefMut for TokenSeq {
    fn deref_mut(&mut self) -> &mut Self::Target {
        &mut self.0
    }
}

impl From<Vec<TokenId>> for TokenSeq {
    fn from(v: Vec<TokenId>) -> Self {
        Self(v)
    }
}

impl FromIterator<TokenId> for TokenSeq {
    fn from_iter<I: IntoIterator<Item = TokenId>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}

/// Vocabulary: `size` ids, an optional reserved end-of-sequence id and an
/// optional display table.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocab {
    size: usize,
    eos: Option<TokenId>,
    names: Option<Vec<String>>,
}

impl Vocab {
    pub fn new(size: usize, eos: Option<TokenId>) -> Result<Self> {
        if size == 0 {
            return Err(Error::InvalidConfig("vocabulary must not be empty".into()));
        }
        if let Some(e) = eos {
            if e.index() >= size {
                return Err(Error::TokenOutOfRange { token: e, vocab: size });
            }
        }
        Ok(Self { size, eos, names: None })
    }

    /// 256 byte values plus EOS at id 256.
    pub fn bytes() -> Self {
        Self {
            size: 257,
            eos: Some(TokenId(256)),
            names: None,
        }
    }

    pub fn with_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.size {
            return Err(Error::VocabMismatch {
                expected: self.size,
                actual: names.len(),
            });
        }
        self.names = Some(names);
        Ok(self)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn eos(&self) -> Option<TokenId> {
        self.eos
    }

    pub fn name(&self, id: TokenId) -> Option<&str> {
        self.names.as_ref()?.get(id.index()).map(String::as_str)
    }

    pub fn contains(&self, id: TokenId) -> bool {
        id.index() < self.size
    }
}
