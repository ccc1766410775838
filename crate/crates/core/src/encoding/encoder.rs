use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::contextualizer::StubContextualizer;
use super::projection::{project_cls, project_tokens, ProjectionParams};
use super::tokenizer::{Tokenizer, Vocab};
use crate::error::{Error, Result};
use crate::model::{CoilConfig, Document, EncodedDocument, EncodedQuery, Query, TokenSeq};

/// Token vectors and the optional CLS vector of one sequence.
type SeqVectors = (Vec<Vec<f32>>, Option<Vec<f32>>);

/// Everything needed to rebuild an [`Encoder`] that uses seeded projections.
/// Persisted next to encoded files and inside index metadata so queries can
/// be encoded consistently at search time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncoderSpec {
    pub config: CoilConfig,
    pub tokenizer: Tokenizer,
    pub contextualizer: StubContextualizer,
    pub vocab: Vocab,
}

/// Tokenize → truncate → contextualize → project.
#[derive(Clone, Debug)]
pub struct Encoder {
    config: CoilConfig,
    tokenizer: Tokenizer,
    vocab: Vocab,
    contextualizer: StubContextualizer,
    params: ProjectionParams,
}

impl Encoder {
    pub fn new(
        config: CoilConfig,
        tokenizer: Tokenizer,
        vocab: Vocab,
        contextualizer: StubContextualizer,
        params: ProjectionParams,
    ) -> Result<Self> {
        let config = config.validate()?;
        contextualizer.validate()?;
        if params.n_t() != config.n_t {
            return Err(Error::dim("projection n_t", config.n_t, params.n_t()));
        }
        if params.n_c() != config.n_c {
            return Err(Error::dim("projection n_c", config.n_c, params.n_c()));
        }
        if let Some(n_lm) = params.n_lm() {
            if n_lm != config.n_lm {
                return Err(Error::dim("projection n_lm", config.n_lm, n_lm));
            }
        }
        Ok(Encoder {
            config,
            tokenizer,
            vocab,
            contextualizer,
            params,
        })
    }

    /// Builds an encoder with seeded projections (seed taken from the
    /// contextualizer) and a vocabulary learned from the corpus.
    pub fn for_corpus(
        config: CoilConfig,
        tokenizer: Tokenizer,
        contextualizer: StubContextualizer,
        docs: &[Document],
    ) -> Result<Self> {
        let vocab = tokenizer.build_vocab(docs.iter().map(|d| d.text.as_str()));
        Self::from_spec(EncoderSpec {
            config,
            tokenizer,
            contextualizer,
            vocab,
        })
    }

    pub fn from_spec(spec: EncoderSpec) -> Result<Self> {
        let params = ProjectionParams::seeded(
            spec.contextualizer.seed,
            spec.config.n_lm,
            spec.config.n_t,
            spec.config.n_c,
        );
        Self::new(spec.config, spec.tokenizer, spec.vocab, spec.contextualizer, params)
    }

    pub fn spec(&self) -> EncoderSpec {
        EncoderSpec {
            config: self.config.clone(),
            tokenizer: self.tokenizer,
            contextualizer: self.contextualizer.clone(),
            vocab: self.vocab.clone(),
        }
    }

    pub fn config(&self) -> &CoilConfig {
        &self.config
    }

    pub fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    pub fn tokenizer(&self) -> &Tokenizer {
        &self.tokenizer
    }

    pub fn params(&self) -> &ProjectionParams {
        &self.params
    }

    fn encode_seq(&self, seq: &TokenSeq) -> Result<SeqVectors> {
        let ctx = self.contextualizer.contextualize(seq, self.config.n_lm)?;
        let token_vecs = project_tokens(&ctx.positions, &self.params)?;
        let cls_vec = project_cls(&ctx.cls, &self.params, self.config.cls_layer_norm)?;
        Ok((token_vecs, cls_vec))
    }

    /// Tokenized document truncated to `max_doc_tokens`.
    pub fn document_tokens(&self, text: &str) -> TokenSeq {
        let mut seq = self.tokenizer.tokenize(text, &self.vocab);
        seq.truncate(self.config.max_doc_tokens);
        seq
    }

    pub fn encode_document(&self, doc: &Document) -> Result<EncodedDocument> {
        let seq = self.document_tokens(&doc.text);
        let (token_vecs, cls_vec) = self.encode_seq(&seq)?;
        Ok(EncodedDocument {
            doc_id: doc.id.clone(),
            token_ids: seq.token_ids,
            token_vecs,
            cls_vec,
        })
    }

    /// Queries are not truncated.
    pub fn encode_query(&self, query: &Query) -> Result<EncodedQuery> {
        let seq = self.tokenizer.tokenize(&query.text, &self.vocab);
        let (token_vecs, cls_vec) = self.encode_seq(&seq)?;
        Ok(EncodedQuery {
            query_id: query.id.clone(),
            token_ids: seq.token_ids,
            token_vecs,
            cls_vec,
        })
    }

    /// Parallel encoding; output order equals input order.
    pub fn encode_documents(&self, docs: &[Document]) -> Result<Vec<EncodedDocument>> {
        docs.par_iter().map(|d| self.encode_document(d)).collect()
    }

    pub fn encode_queries(&self, queries: &[Query]) -> Result<Vec<EncodedQuery>> {
        queries.par_iter().map(|q| self.encode_query(q)).collect()
    }
}
