//! Contextualized inverted lists and the CLS matrix.
//!
//! Every list stacks one `n_t` vector per occurrence of its token across the
//! corpus, with a parallel array of document ordinals. Columns are kept in
//! (ordinal, position) order, so the ordinals of a list are nondecreasing
//! and a query can reduce per-occurrence scores to per-document maxima in a
//! single pass.

mod persist;

use std::collections::{BTreeMap, HashSet};

use serde::Serialize;

use crate::encoding::EncoderSpec;
use crate::error::{Error, Result};
use crate::hash::Fnv1a64;
use crate::model::{validate_id, EncodedDocument, TokenId};

pub use persist::{decode_cls, decode_postings, load_index, save_index, IndexMeta, CLS_FILE, META_FILE, POSTINGS_FILE};

pub const INDEX_VERSION: u32 = 1;

/// All occurrences of one token.
#[derive(Clone, Debug, PartialEq)]
pub struct InvertedList {
    token_id: TokenId,
    dim: usize,
    /// Occurrence-major: column `c` is `vectors[c * dim..(c + 1) * dim]`.
    vectors: Vec<f32>,
    doc_refs: Vec<u32>,
}

impl InvertedList {
    pub(crate) fn from_parts(token_id: TokenId, dim: usize, vectors: Vec<f32>, doc_refs: Vec<u32>) -> Self {
        debug_assert_eq!(vectors.len(), dim * doc_refs.len());
        InvertedList {
            token_id,
            dim,
            vectors,
            doc_refs,
        }
    }

    pub fn token_id(&self) -> TokenId {
        self.token_id
    }

    /// Number of stored occurrences.
    pub fn len(&self) -> usize {
        self.doc_refs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.doc_refs.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn column(&self, c: usize) -> &[f32] {
        &self.vectors[c * self.dim..(c + 1) * self.dim]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[f32]> {
        // chunks_exact panics on 0
        (0..self.len()).map(move |c| self.column(c))
    }

    pub fn vectors(&self) -> &[f32] {
        &self.vectors
    }

    pub fn doc_refs(&self) -> &[u32] {
        &self.doc_refs
    }

    /// Dot product of every stacked column with `v`, accumulated in f64.
    pub fn matvec(&self, v: &[f32]) -> Vec<f64> {
        self.columns().map(|col| crate::retrieval::dot(col, v)).collect()
    }
}

/// The searchable index: token lists, CLS matrix and document table.
#[derive(Clone, Debug, PartialEq)]
pub struct CoilIndex {
    n_t: usize,
    n_c: usize,
    lists: BTreeMap<TokenId, InvertedList>,
    /// Document-major `num_docs × n_c`; absent when `n_c = 0`.
    cls: Option<Vec<f32>>,
    doc_table: Vec<String>,
    corpus_checksum: u64,
    encoder: Option<EncoderSpec>,
}

impl CoilIndex {
    /// Builds the index from encoded documents in order; ordinal `k` is the
    /// k-th document.
    pub fn build(docs: impl IntoIterator<Item = EncodedDocument>, n_t: usize, n_c: usize) -> Result<Self> {
        let mut lists: BTreeMap<TokenId, (Vec<f32>, Vec<u32>)> = BTreeMap::new();
        let mut cls = Vec::new();
        let mut doc_table = Vec::new();
        let mut seen = HashSet::new();
        let mut checksum = Fnv1a64::new();

        for doc in docs {
            validate_id(&doc.doc_id)?;
            if !seen.insert(doc.doc_id.clone()) {
                return Err(Error::DuplicateId(doc.doc_id));
            }
            doc.check_dims(n_t, n_c)?;
            let ordinal =
                u32::try_from(doc_table.len()).map_err(|_| Error::InvalidArgument("too many documents".into()))?;

            checksum.write(doc.doc_id.as_bytes());
            checksum.write(&[0]);
            for (&t, v) in doc.token_ids.iter().zip(&doc.token_vecs) {
                checksum.write(&t.to_le_bytes());
                let (vectors, refs) = lists.entry(t).or_default();
                vectors.extend_from_slice(v);
                refs.push(ordinal);
            }
            if let Some(c) = &doc.cls_vec {
                cls.extend_from_slice(c);
            }
            doc_table.push(doc.doc_id);
        }

        let lists = lists
            .into_iter()
            .map(|(t, (vectors, refs))| (t, InvertedList::from_parts(t, n_t, vectors, refs)))
            .collect();
        Ok(CoilIndex {
            n_t,
            n_c,
            lists,
            cls: (n_c > 0).then_some(cls),
            doc_table,
            corpus_checksum: checksum.finish(),
            encoder: None,
        })
    }

    /// Attaches the encoder used for the corpus so raw-text queries can be
    /// encoded against the same vocabulary and parameters.
    pub fn with_encoder(mut self, spec: EncoderSpec) -> Result<Self> {
        if spec.config.n_t != self.n_t {
            return Err(Error::dim("encoder n_t", self.n_t, spec.config.n_t));
        }
        if spec.config.n_c != self.n_c {
            return Err(Error::dim("encoder n_c", self.n_c, spec.config.n_c));
        }
        self.encoder = Some(spec);
        Ok(self)
    }

    pub fn n_t(&self) -> usize {
        self.n_t
    }

    pub fn n_c(&self) -> usize {
        self.n_c
    }

    pub fn num_docs(&self) -> usize {
        self.doc_table.len()
    }

    pub fn list(&self, token: TokenId) -> Option<&InvertedList> {
        self.lists.get(&token)
    }

    /// Lists in ascending token id order.
    pub fn lists(&self) -> impl Iterator<Item = &InvertedList> {
        self.lists.values()
    }

    pub fn doc_id(&self, ordinal: u32) -> &str {
        &self.doc_table[ordinal as usize]
    }

    pub fn doc_table(&self) -> &[String] {
        &self.doc_table
    }

    /// Document-major CLS matrix.
    pub fn cls_matrix(&self) -> Option<&[f32]> {
        self.cls.as_deref()
    }

    pub fn cls_vec(&self, ordinal: u32) -> Option<&[f32]> {
        let n_c = self.n_c;
        self.cls
            .as_ref()
            .map(|m| &m[ordinal as usize * n_c..(ordinal as usize + 1) * n_c])
    }

    pub fn corpus_checksum(&self) -> u64 {
        self.corpus_checksum
    }

    pub fn encoder(&self) -> Option<&EncoderSpec> {
        self.encoder.as_ref()
    }

    pub fn stats(&self) -> IndexStats {
        let total_postings = self.lists().map(InvertedList::len).sum::<usize>();
        let mut histogram: BTreeMap<usize, usize> = BTreeMap::new();
        for list in self.lists() {
            // bucket = largest power of two ≤ len
            let bucket = 1usize << (usize::BITS - 1 - list.len().max(1).leading_zeros());
            *histogram.entry(bucket).or_default() += 1;
        }
        let payload = total_postings * (self.n_t * 4 + 4) + self.cls.as_ref().map_or(0, |c| c.len() * 4);
        IndexStats {
            num_docs: self.num_docs(),
            num_lists: self.lists.len(),
            total_postings,
            bytes_on_disk: payload as u64,
            list_size_histogram: histogram.into_iter().collect(),
        }
    }
}

/// Summary counts. `bytes_on_disk` counts vector, ordinal and CLS payload
/// bytes, excluding headers and metadata.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct IndexStats {
    pub num_docs: usize,
    pub num_lists: usize,
    pub total_postings: usize,
    pub bytes_on_disk: u64,
    /// `(bucket, count)`: lists whose length lies in `[bucket, 2·bucket)`.
    pub list_size_histogram: Vec<(usize, usize)>,
}
