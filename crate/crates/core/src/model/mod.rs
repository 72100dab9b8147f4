//! Layered language-model backends.
//!
//! A backend evaluates a token prefix and returns the next-token
//! log-distribution together with hidden states for every position of the
//! prefix at layer levels 0..=L (layer 0 = embedding output, layers 1..=L =
//! post-block residual stream). The contract is stateless: every call covers
//! the whole prefix, so callers never depend on incremental caches being
//! correct. Implementations are free to cache internally.

mod scripted;
mod tiny;

pub use scripted::{ScriptedEntry, ScriptedModel, ScriptedModelFile};
pub use tiny::TinyTransformer;

use crate::error::Error;
use crate::types::{LayerStates, TokenId};

/// Static description of a backend.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BackendInfo {
    pub vocab_size: usize,
    /// Number of transformer blocks L; states expose L+1 levels.
    pub num_layers: usize,
    pub hidden_dim: usize,
    pub name: String,
}

impl BackendInfo {
    pub fn validate(&self) -> Result<(), Error> {
        if self.vocab_size < 2 {
            return Err(Error::InvalidConfig(format!(
                "vocab_size must be >= 2, got {}",
                self.vocab_size
            )));
        }
        if self.num_layers < 3 {
            return Err(Error::InvalidConfig(format!(
                "num_layers must be >= 3 for a non-degenerate middle window, got {}",
                self.num_layers
            )));
        }
        if self.hidden_dim == 0 {
            return Err(Error::InvalidConfig("hidden_dim must be >= 1".into()));
        }
        Ok(())
    }
}

/// One forward pass: next-token log-distribution plus the full prefix's
/// hidden states.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutput {
    pub next_log_probs: Vec<f64>,
    pub layer_states: LayerStates,
}

/// The forward-pass contract every backend satisfies.
///
/// `evaluate` must be a pure function of (backend identity, prefix):
/// identical prefixes yield identical outputs. Backends are read-only after
/// construction and shareable across threads.
pub trait Backend: Send + Sync {
    fn info(&self) -> &BackendInfo;

    /// Evaluates a non-empty prefix of in-vocabulary token ids.
    fn evaluate(&self, prefix: &[TokenId]) -> Result<StepOutput, Error>;
}

pub(crate) fn check_prefix(prefix: &[TokenId], vocab_size: usize) -> Result<(), Error> {
    if prefix.is_empty() {
        return Err(Error::EmptyInput { what: "prefix" });
    }
    for t in prefix {
        if t.index() >= vocab_size {
            return Err(Error::InvalidToken {
                id: t.0,
                vocab_size,
            });
        }
    }
    Ok(())
}
