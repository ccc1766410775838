//! Whitespace + punctuation tokenizer and corpus-built vocabulary.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{TokenId, TokenSeq, UNKNOWN_TOKEN};

/// Bijective token ↔ id mapping. Id 0 is reserved for unknown tokens and
/// never assigned.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Vocab {
    ids: HashMap<String, TokenId>,
    /// `tokens[i]` has id `i + 1`.
    tokens: Vec<String>,
}

impl Vocab {
    pub fn new() -> Self {
        Self::default()
    }

    /// Rebuilds a vocabulary from tokens listed in id order, starting at id 1.
    pub fn from_tokens(tokens: Vec<String>) -> Result<Self> {
        let mut ids = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if ids.insert(t.clone(), i as TokenId + 1).is_some() {
                return Err(Error::InvalidArgument(format!("vocabulary token `{t}` listed twice")));
            }
        }
        Ok(Vocab { ids, tokens })
    }

    /// Tokens in id order, starting at id 1.
    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Number of assigned ids, excluding the reserved unknown id.
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn get(&self, token: &str) -> TokenId {
        self.ids.get(token).copied().unwrap_or(UNKNOWN_TOKEN)
    }

    pub fn token(&self, id: TokenId) -> Option<&str> {
        (id as usize)
            .checked_sub(1)
            .and_then(|i| self.tokens.get(i))
            .map(String::as_str)
    }

    pub fn get_or_insert(&mut self, token: &str) -> TokenId {
        if let Some(&id) = self.ids.get(token) {
            return id;
        }
        self.tokens.push(token.to_string());
        let id = self.tokens.len() as TokenId;
        self.ids.insert(token.to_string(), id);
        id
    }
}

impl Serialize for Vocab {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.tokens.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Vocab {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let tokens = Vec::<String>::deserialize(d)?;
        Vocab::from_tokens(tokens).map_err(serde::de::Error::custom)
    }
}

/// Splits on Unicode whitespace, then peels leading and trailing ASCII
/// punctuation off each piece as one-character tokens.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tokenizer {
    pub lowercase: bool,
}

impl Default for Tokenizer {
    fn default() -> Self {
        Tokenizer { lowercase: true }
    }
}

impl Tokenizer {
    pub fn split(&self, text: &str) -> Vec<String> {
        let mut out = Vec::new();
        for piece in text.split_whitespace() {
            let piece = if self.lowercase {
                piece.to_lowercase()
            } else {
                piece.to_string()
            };
            let core_start = piece.find(|c: char| !c.is_ascii_punctuation()).unwrap_or(piece.len());
            let core_end = piece
                .rfind(|c: char| !c.is_ascii_punctuation())
                .map(|i| i + piece[i..].chars().next().map_or(1, char::len_utf8))
                .unwrap_or(core_start);
            out.extend(piece[..core_start].chars().map(String::from));
            if core_start < core_end {
                out.push(piece[core_start..core_end].to_string());
            }
            out.extend(piece[core_end.max(core_start)..].chars().map(String::from));
        }
        out
    }

    /// Tokenizes against a fixed vocabulary; unseen tokens map to id 0.
    pub fn tokenize(&self, text: &str, vocab: &Vocab) -> TokenSeq {
        let tokens = self.split(text);
        let token_ids = tokens.iter().map(|t| vocab.get(t)).collect();
        TokenSeq { tokens, token_ids }
    }

    /// Tokenizes and assigns fresh ids to unseen tokens.
    pub fn tokenize_learning(&self, text: &str, vocab: &mut Vocab) -> TokenSeq {
        let tokens = self.split(text);
        let token_ids = tokens.iter().map(|t| vocab.get_or_insert(t)).collect();
        TokenSeq { tokens, token_ids }
    }

    /// Builds a vocabulary in first-occurrence order over `texts`.
    pub fn build_vocab<'a>(&self, texts: impl IntoIterator<Item = &'a str>) -> Vocab {
        let mut vocab = Vocab::new();
        for text in texts {
            for t in self.split(text) {
                vocab.get_or_insert(&t);
            }
        }
        vocab
    }
}
