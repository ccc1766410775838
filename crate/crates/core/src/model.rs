//! Domain types shared by every module.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Vocabulary integer. Id 0 is reserved for unknown tokens.
pub type TokenId = u32;

pub const UNKNOWN_TOKEN: TokenId = 0;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub text: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Query {
    pub id: String,
    pub text: String,
}

/// Ids end up as whitespace-separated fields in run and qrels files.
pub fn validate_id(id: &str) -> Result<()> {
    if id.is_empty() || id.chars().any(char::is_whitespace) {
        return Err(Error::InvalidId(id.to_string()));
    }
    Ok(())
}

/// Checks the id rules and uniqueness over a sequence of ids.
pub fn validate_unique_ids<'a>(ids: impl IntoIterator<Item = &'a str>) -> Result<()> {
    let mut seen = HashSet::new();
    for id in ids {
        validate_id(id)?;
        if !seen.insert(id) {
            return Err(Error::DuplicateId(id.to_string()));
        }
    }
    Ok(())
}

/// Surface tokens with their parallel vocabulary ids.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TokenSeq {
    pub tokens: Vec<String>,
    pub token_ids: Vec<TokenId>,
}

impl TokenSeq {
    pub fn len(&self) -> usize {
        self.token_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.token_ids.is_empty()
    }

    pub fn truncate(&mut self, len: usize) {
        self.tokens.truncate(len);
        self.token_ids.truncate(len);
    }
}

/// Which scoring components a search uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Exact-match token scoring only.
    Tok,
    /// Token scoring plus CLS dot product.
    Full,
    /// CLS dot product only, i.e. a plain dense retriever.
    ClsOnly,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Tok, Mode::Full, Mode::ClsOnly];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Tok => "tok",
            Mode::Full => "full",
            Mode::ClsOnly => "cls_only",
        }
    }

    pub fn uses_tokens(self) -> bool {
        matches!(self, Mode::Tok | Mode::Full)
    }

    pub fn uses_cls(self) -> bool {
        matches!(self, Mode::Full | Mode::ClsOnly)
    }

    /// Checks that token and CLS dimensions support this mode.
    pub fn check_dims(self, n_t: usize, n_c: usize) -> Result<()> {
        match self {
            Mode::Tok if n_t == 0 => Err(Error::Config("mode=tok requires n_t ≥ 1".into())),
            Mode::ClsOnly if n_c == 0 => Err(Error::Config("mode=cls_only requires n_c ≥ 1".into())),
            Mode::Full if n_t == 0 => Err(Error::Config("mode=full requires n_t ≥ 1".into())),
            Mode::Full if n_c == 0 => Err(Error::Config("mode=full requires n_c ≥ 1".into())),
            _ => Ok(()),
        }
    }

    /// The richest mode the dimensions allow.
    pub fn for_dims(n_t: usize, n_c: usize) -> Option<Mode> {
        match (n_t > 0, n_c > 0) {
            (true, true) => Some(Mode::Full),
            (true, false) => Some(Mode::Tok),
            (false, true) => Some(Mode::ClsOnly),
            (false, false) => None,
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tok" => Ok(Mode::Tok),
            "full" => Ok(Mode::Full),
            "cls_only" | "cls-only" | "cls" => Ok(Mode::ClsOnly),
            other => Err(Error::InvalidArgument(format!("unknown mode `{other}`"))),
        }
    }
}

/// Encoder and scoring dimensions.
///
/// `n_t = 0` or `n_c = 0` disables the corresponding component, so one
/// config space covers token-only, dense-only and `n_t = 1` term-weight
/// variants.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoilConfig {
    /// Contextualizer output dimension.
    pub n_lm: usize,
    /// Token vector dimension.
    pub n_t: usize,
    /// CLS vector dimension.
    pub n_c: usize,
    pub max_doc_tokens: usize,
    pub cls_layer_norm: bool,
    pub mode: Mode,
}

impl Default for CoilConfig {
    fn default() -> Self {
        CoilConfig {
            n_lm: 768,
            n_t: 32,
            n_c: 768,
            max_doc_tokens: 512,
            cls_layer_norm: false,
            mode: Mode::Full,
        }
    }
}

impl CoilConfig {
    /// Returns the config unchanged if every invariant holds, otherwise the
    /// first violated one.
    pub fn validate(self) -> Result<Self> {
        if self.n_lm == 0 {
            return Err(Error::Config("n_lm must be ≥ 1".into()));
        }
        if self.max_doc_tokens == 0 {
            return Err(Error::Config("max_doc_tokens must be ≥ 1".into()));
        }
        self.mode.check_dims(self.n_t, self.n_c)?;
        if self.n_t > self.n_lm {
            return Err(Error::Config("n_t ≤ n_lm required".into()));
        }
        if self.n_c > self.n_lm {
            return Err(Error::Config("n_c ≤ n_lm required".into()));
        }
        Ok(self)
    }
}

/// Per-token vectors plus one CLS vector for a document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncodedDocument {
    pub doc_id: String,
    pub token_ids: Vec<TokenId>,
    pub token_vecs: Vec<Vec<f32>>,
    /// Absent when `n_c = 0`.
    pub cls_vec: Option<Vec<f32>>,
}

/// Per-token vectors plus one CLS vector for a query.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncodedQuery {
    pub query_id: String,
    pub token_ids: Vec<TokenId>,
    pub token_vecs: Vec<Vec<f32>>,
    pub cls_vec: Option<Vec<f32>>,
}

impl From<EncodedDocument> for EncodedQuery {
    fn from(d: EncodedDocument) -> Self {
        EncodedQuery {
            query_id: d.doc_id,
            token_ids: d.token_ids,
            token_vecs: d.token_vecs,
            cls_vec: d.cls_vec,
        }
    }
}

pub(crate) fn check_encoding(
    what: &str,
    token_ids: &[TokenId],
    token_vecs: &[Vec<f32>],
    cls_vec: Option<&Vec<f32>>,
    n_t: usize,
    n_c: usize,
) -> Result<()> {
    if token_ids.len() != token_vecs.len() {
        return Err(Error::dim(
            format!("{what}: token_vecs count"),
            token_ids.len(),
            token_vecs.len(),
        ));
    }
    for v in token_vecs {
        if v.len() != n_t {
            return Err(Error::dim(format!("{what}: token vector"), n_t, v.len()));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument(format!("{what}: non-finite token vector entry")));
        }
    }
    match (cls_vec, n_c) {
        (None, 0) => {}
        (None, n) => return Err(Error::dim(format!("{what}: cls vector"), n, 0)),
        (Some(c), n) if c.len() != n => return Err(Error::dim(format!("{what}: cls vector"), n, c.len())),
        (Some(c), _) => {
            if c.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidArgument(format!("{what}: non-finite cls vector entry")));
            }
        }
    }
    Ok(())
}

impl EncodedDocument {
    /// Checks parallel lengths, vector dimensions and finiteness.
    pub fn check_dims(&self, n_t: usize, n_c: usize) -> Result<()> {
        check_encoding(
            &format!("document `{}`", self.doc_id),
            &self.token_ids,
            &self.token_vecs,
            self.cls_vec.as_ref(),
            n_t,
            n_c,
        )
    }
}

impl EncodedQuery {
    pub fn check_dims(&self, n_t: usize, n_c: usize) -> Result<()> {
        check_encoding(
            &format!("query `{}`", self.query_id),
            &self.token_ids,
            &self.token_vecs,
            self.cls_vec.as_ref(),
            n_t,
            n_c,
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankedEntry {
    pub doc_id: String,
    pub score: f32,
}

/// Results for one query, sorted by score descending with ties broken by
/// doc id ascending.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankedList {
    pub query_id: String,
    pub entries: Vec<RankedEntry>,
}

/// The global result order: score descending, then doc id ascending.
pub fn rank_order(a_score: f32, a_id: &str, b_score: f32, b_id: &str) -> Ordering {
    b_score.total_cmp(&a_score).then_with(|| a_id.cmp(b_id))
}

impl RankedList {
    pub fn empty(query_id: impl Into<String>) -> Self {
        RankedList {
            query_id: query_id.into(),
            entries: Vec::new(),
        }
    }

    /// Sorts scored documents with the tie rule and keeps the top `k`.
    ///
    /// Doc ids must be distinct.
    pub fn from_scores(query_id: impl Into<String>, scores: impl IntoIterator<Item = (String, f32)>, k: usize) -> Self {
        let mut entries: Vec<RankedEntry> = scores
            .into_iter()
            .map(|(doc_id, score)| RankedEntry { doc_id, score })
            .collect();
        entries.sort_by(|a, b| rank_order(a.score, &a.doc_id, b.score, &b.doc_id));
        entries.truncate(k);
        debug_assert!(entries.len() == entries.iter().map(|e| &e.doc_id).collect::<HashSet<_>>().len());
        RankedList {
            query_id: query_id.into(),
            entries,
        }
    }

    /// Wraps entries that are already in rank order, e.g. read back from a
    /// run file. Rejects duplicate doc ids and non-finite scores.
    pub fn from_ranked(query_id: impl Into<String>, entries: Vec<RankedEntry>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(entries.len());
        for e in &entries {
            if !seen.insert(e.doc_id.as_str()) {
                return Err(Error::DuplicateId(e.doc_id.clone()));
            }
            if !e.score.is_finite() {
                return Err(Error::InvalidArgument(format!("non-finite score for `{}`", e.doc_id)));
            }
        }
        Ok(RankedList {
            query_id: query_id.into(),
            entries,
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn doc_ids(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.doc_id.as_str())
    }

    /// True if the entries follow the global order exactly.
    pub fn is_canonical(&self) -> bool {
        self.entries
            .windows(2)
            .all(|w| rank_order(w[0].score, &w[0].doc_id, w[1].score, &w[1].doc_id) == Ordering::Less)
    }
}
