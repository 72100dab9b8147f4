//! Confusion-aware text-generation decoding engine.
//!
//! The engine generates greedily until the next-token distribution admits
//! more than one plausible candidate, expands each candidate into a span,
//! scores every span by its log-probability penalized by how much its pooled
//! hidden representations disagree across the model's middle layers, and
//! commits the best span. Two disagreement metrics (consecutive-layer and
//! final-layer-referenced) and two scoring rules (plain penalty and
//! self-information gated) are provided, together with two deterministic
//! backends: a table-driven scripted model and a tiny seeded transformer.

pub mod decoder;
pub mod error;
pub mod fixtures;
pub mod logits;
pub mod mlds;
pub mod model;
pub mod types;

pub use decoder::{
    decode, divergence_set, expand_candidate, resolve_window, score_candidate, span_log_p,
    span_mlds,
};
pub use error::{DecodeError, Error};
pub use logits::log_softmax;
pub use mlds::{con_mlds, cosine_similarity, default_window, f_mlds, mean_pool, LayerWindow};
pub use model::{
    Backend, BackendInfo, ScriptedEntry, ScriptedModel, ScriptedModelFile, StepOutput,
    TinyTransformer,
};
pub use types::{
    CandidateScore, CommitMode, DecodeConfig, DivergenceTrace, GenerationResult, LayerStates,
    LayerWindowSpec, MldsMode, Span, TokenId,
};
