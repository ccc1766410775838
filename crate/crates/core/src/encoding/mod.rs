//! Tokenization, the reference contextualizer, projections and the
//! encoded-record file format.

mod contextualizer;
mod encoder;
mod projection;
pub mod records;
mod tokenizer;

pub use contextualizer::{Contextualized, StubContextualizer};
pub use encoder::{Encoder, EncoderSpec};
pub use projection::{layer_norm, project_cls, project_tokens, Matrix, ProjectionParams, LAYER_NORM_EPS};
pub use tokenizer::{Tokenizer, Vocab};
