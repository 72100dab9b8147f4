//! Error types shared across the engine.

use crate::types::TokenId;

/// Errors raised by numeric ops, metric computation, and model backends.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("non-finite value in {what}")]
    NonFinite { what: &'static str },

    #[error("empty input in {what}")]
    EmptyInput { what: &'static str },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("position {pos} out of range (seq_len {seq_len})")]
    PositionOutOfRange { pos: usize, seq_len: usize },

    #[error("layer {layer} out of range (final layer {last})")]
    LayerOutOfRange { layer: usize, last: usize },

    #[error("pooled representation missing layer {layer}")]
    MissingLayer { layer: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("token id {id} out of range for vocabulary of size {vocab_size}")]
    InvalidToken { id: u32, vocab_size: usize },

    #[error("scripted model has no entry for prefix {prefix:?}")]
    MissingEntry { prefix: Vec<TokenId> },

    #[error("scripted model schema violation: {0}")]
    Schema(String),

    #[error("failed to parse scripted model file: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Decode-loop failure. A backend fault mid-generation carries the tokens
/// committed before the fault so callers can salvage partial output.
#[derive(Debug, thiserror::Error)]
pub enum DecodeError {
    #[error("invalid decode configuration: {0}")]
    Config(#[source] Error),

    #[error("backend failed after {} tokens: {source}", partial.len())]
    Aborted {
        partial: Vec<TokenId>,
        #[source]
        source: Error,
    },
}

impl DecodeError {
    /// Tokens generated before the failure, if any.
    pub fn partial_tokens(&self) -> &[TokenId] {
        match self {
            DecodeError::Config(_) => &[],
            DecodeError::Aborted { partial, .. } => partial,
        }
    }
}
