//! Contextualized exact lexical match retrieval.
//!
//! Documents and queries are encoded into one small vector per token plus a
//! sequence-level CLS vector. Token vectors are stored in per-token inverted
//! lists; a query only touches the lists of its own tokens and scores each
//! document by summing, per query token, the best dot product among that
//! document's occurrences of the same token. An optional CLS dot product
//! adds soft semantic matching.
//!
//! The crate also carries a BM25 baseline, brute-force oracles for every
//! scoring mode, the contrastive training loss as a value computation, and
//! TREC-style evaluation.

pub mod bm25;
pub mod corpus;
pub mod encoding;
mod error;
pub mod eval;
pub mod hash;
pub mod index;
pub mod loss;
pub mod model;
pub mod retrieval;

pub use error::{Error, Result};
pub use index::{load_index, save_index, CoilIndex, IndexStats, InvertedList};
pub use model::{
    CoilConfig, Document, EncodedDocument, EncodedQuery, Mode, Query, RankedEntry, RankedList, TokenId, TokenSeq,
};
pub use retrieval::{brute_force_search, search, search_batch, SearchInstrumentation};
