#![allow(dead_code)]

use coil::encoding::{Encoder, StubContextualizer, Tokenizer};
use coil::{CoilConfig, Document, Mode, Query};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn words(rng: &mut ChaCha8Rng, vocab: usize, len: usize) -> String {
    (0..len)
        .map(|_| format!("w{}", rng.random_range(0..vocab)))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Documents over words `w0..w{vocab}`, lengths uniform in `0..=max_len`.
pub fn random_corpus(rng: &mut ChaCha8Rng, n_docs: usize, vocab: usize, max_len: usize) -> Vec<Document> {
    (0..n_docs)
        .map(|i| {
            let len = rng.random_range(0..=max_len);
            Document {
                id: format!("doc{i:05}"),
                text: words(rng, vocab, len),
            }
        })
        .collect()
}

/// Queries of 1–8 tokens; some tokens fall outside the corpus vocabulary.
pub fn random_queries(rng: &mut ChaCha8Rng, n: usize, vocab: usize) -> Vec<Query> {
    (0..n)
        .map(|i| {
            let len = rng.random_range(1..=8);
            let text = (0..len)
                .map(|_| {
                    if rng.random_bool(0.1) {
                        format!("oov{}", rng.random_range(0..5))
                    } else {
                        format!("w{}", rng.random_range(0..vocab))
                    }
                })
                .collect::<Vec<_>>()
                .join(" ");
            Query {
                id: format!("q{i:03}"),
                text,
            }
        })
        .collect()
}

pub fn config(n_lm: usize, n_t: usize, n_c: usize) -> CoilConfig {
    CoilConfig {
        n_lm,
        n_t,
        n_c,
        max_doc_tokens: 512,
        cls_layer_norm: false,
        mode: Mode::for_dims(n_t, n_c).expect("some component enabled"),
    }
}

pub fn encoder(docs: &[Document], config: CoilConfig, seed: u64) -> Encoder {
    let ctx = StubContextualizer {
        seed,
        ..Default::default()
    };
    Encoder::for_corpus(config, Tokenizer::default(), ctx, docs).expect("valid encoder")
}
