//! Term-frequency inverted index with BM25 scoring, used as the lexical
//! baseline and as the source of hard negatives.

use std::collections::{BTreeMap, HashSet};

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::encoding::{Tokenizer, Vocab};
use crate::error::{Error, Result};
use crate::model::{validate_unique_ids, Document, RankedList, TokenId, TokenSeq, UNKNOWN_TOKEN};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
    pub k2: f64,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Bm25Params {
            k1: 1.2,
            b: 0.75,
            k2: 0.0,
        }
    }
}

impl Bm25Params {
    pub fn validate(self) -> Result<Self> {
        if !(self.k1.is_finite() && self.k1 >= 0.0) {
            return Err(Error::Config("k1 must be finite and ≥ 0".into()));
        }
        if !(0.0..=1.0).contains(&self.b) {
            return Err(Error::Config("b must lie in [0, 1]".into()));
        }
        if !(self.k2.is_finite() && self.k2 >= 0.0) {
            return Err(Error::Config("k2 must be finite and ≥ 0".into()));
        }
        Ok(self)
    }

    /// Query-side saturation; 1 for every present term when `k2 = 0`.
    pub fn query_weight(&self, tf: u32) -> f64 {
        let tf = f64::from(tf);
        tf * (1.0 + self.k2) / (tf + self.k2)
    }

    /// Document-side saturation with length normalization.
    pub fn doc_weight(&self, tf: u32, doc_len: u32, avgdl: f64) -> f64 {
        let tf = f64::from(tf);
        let norm = 1.0 - self.b + self.b * f64::from(doc_len) / avgdl;
        tf * (1.0 + self.k1) / (tf + self.k1 * norm)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Posting {
    pub doc: u32,
    pub tf: u32,
}

#[derive(Clone, Debug)]
pub struct Bm25Index {
    tokenizer: Tokenizer,
    vocab: Vocab,
    /// Indexed by token id; entry 0 (unknown) stays empty.
    postings: Vec<Vec<Posting>>,
    doc_len: Vec<u32>,
    avgdl: f64,
    doc_table: Vec<String>,
}

impl Bm25Index {
    /// Tokenizes and truncates every document to `max_doc_tokens`, the same
    /// preprocessing the dense encoder applies.
    pub fn build(docs: &[Document], tokenizer: Tokenizer, max_doc_tokens: usize) -> Result<Self> {
        validate_unique_ids(docs.iter().map(|d| d.id.as_str()))?;
        let mut vocab = Vocab::new();
        let mut postings: Vec<Vec<Posting>> = vec![Vec::new()];
        let mut doc_len = Vec::with_capacity(docs.len());
        for (ord, doc) in docs.iter().enumerate() {
            let mut seq = tokenizer.tokenize_learning(&doc.text, &mut vocab);
            seq.truncate(max_doc_tokens);
            postings.resize_with(vocab.len() + 1, Vec::new);
            let mut counts: BTreeMap<TokenId, u32> = BTreeMap::new();
            for &t in &seq.token_ids {
                *counts.entry(t).or_default() += 1;
            }
            for (t, tf) in counts {
                postings[t as usize].push(Posting { doc: ord as u32, tf });
            }
            doc_len.push(seq.len() as u32);
        }
        let avgdl = if docs.is_empty() {
            0.0
        } else {
            doc_len.iter().map(|&l| f64::from(l)).sum::<f64>() / docs.len() as f64
        };
        Ok(Bm25Index {
            tokenizer,
            vocab,
            postings,
            doc_len,
            avgdl,
            doc_table: docs.iter().map(|d| d.id.clone()).collect(),
        })
    }

    pub fn num_docs(&self) -> usize {
        self.doc_table.len()
    }

    pub fn avgdl(&self) -> f64 {
        self.avgdl
    }

    pub fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    pub fn doc_id(&self, ordinal: u32) -> &str {
        &self.doc_table[ordinal as usize]
    }

    pub fn doc_len(&self, ordinal: u32) -> u32 {
        self.doc_len[ordinal as usize]
    }

    pub fn postings(&self, token: TokenId) -> &[Posting] {
        self.postings.get(token as usize).map_or(&[], Vec::as_slice)
    }

    pub fn df(&self, token: TokenId) -> usize {
        self.postings(token).len()
    }

    pub fn tf(&self, token: TokenId, ordinal: u32) -> u32 {
        let list = self.postings(token);
        list.binary_search_by_key(&ordinal, |p| p.doc).map_or(0, |i| list[i].tf)
    }

    /// Smoothed Robertson–Spärck Jones weight: ln((N − df + 0.5)/(df + 0.5) + 1).
    pub fn idf(&self, token: TokenId) -> f64 {
        let n = self.num_docs() as f64;
        let df = self.df(token) as f64;
        ((n - df + 0.5) / (df + 0.5) + 1.0).ln()
    }

    pub fn tokenize_query(&self, text: &str) -> TokenSeq {
        self.tokenizer.tokenize(text, &self.vocab)
    }

    fn query_terms(query: &TokenSeq) -> BTreeMap<TokenId, u32> {
        let mut terms = BTreeMap::new();
        for &t in &query.token_ids {
            if t != UNKNOWN_TOKEN {
                *terms.entry(t).or_default() += 1;
            }
        }
        terms
    }

    /// BM25 score of one document; terms are summed in ascending token id.
    pub fn score_pair(&self, query: &TokenSeq, ordinal: u32, params: &Bm25Params) -> Result<f64> {
        if ordinal as usize >= self.num_docs() {
            return Err(Error::InvalidArgument(format!(
                "document ordinal {ordinal} out of range"
            )));
        }
        let mut score = 0.0;
        for (t, qtf) in Self::query_terms(query) {
            let tf = self.tf(t, ordinal);
            if tf > 0 {
                score +=
                    self.idf(t) * params.query_weight(qtf) * params.doc_weight(tf, self.doc_len(ordinal), self.avgdl);
            }
        }
        Ok(score)
    }

    /// Ranks exactly the documents that share a term with the query.
    pub fn search(&self, query_id: &str, query: &TokenSeq, k: usize, params: &Bm25Params) -> Result<RankedList> {
        if k == 0 {
            return Err(Error::InvalidArgument("k must be ≥ 1".into()));
        }
        let mut acc = vec![0.0f64; self.num_docs()];
        let mut hit = vec![false; self.num_docs()];
        for (t, qtf) in Self::query_terms(query) {
            let weight = self.idf(t) * params.query_weight(qtf);
            for p in self.postings(t) {
                acc[p.doc as usize] += weight * params.doc_weight(p.tf, self.doc_len(p.doc), self.avgdl);
                hit[p.doc as usize] = true;
            }
        }
        let scored = (0..self.num_docs())
            .filter(|&o| hit[o])
            .map(|o| (self.doc_table[o].clone(), acc[o] as f32));
        Ok(RankedList::from_scores(query_id, scored, k))
    }
}

/// Draws `count` distinct hard negatives uniformly from the top `depth`
/// BM25 results, skipping positives. Returns every candidate when fewer
/// than `count` remain. The sample is listed in BM25 rank order.
pub fn sample_bm25_negatives(
    index: &Bm25Index,
    query: &TokenSeq,
    positive_ids: &HashSet<String>,
    depth: usize,
    count: usize,
    seed: u64,
    params: &Bm25Params,
) -> Result<Vec<String>> {
    if depth < count {
        return Err(Error::InvalidArgument(format!(
            "depth ({depth}) must be ≥ count ({count})"
        )));
    }
    if depth == 0 {
        return Ok(Vec::new());
    }
    let ranked = index.search("", query, depth, params)?;
    let candidates: Vec<String> = ranked
        .entries
        .into_iter()
        .map(|e| e.doc_id)
        .filter(|id| !positive_ids.contains(id))
        .collect();
    if candidates.len() <= count {
        return Ok(candidates);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = sample(&mut rng, candidates.len(), count).into_vec();
    picked.sort_unstable();
    Ok(picked.into_iter().map(|i| candidates[i].clone()).collect())
}
