//! Shared domain types.
//!
//! Conventions fixed here and relied on everywhere else:
//! - layer 0 is the embedding output; layers 1..=L are post-block residual
//!   stream states; "final layer" means layer L;
//! - probabilities are carried in log space (spans multiply up to K token
//!   probabilities, which underflows in linear space);
//! - all real values are f64.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Index into a backend's vocabulary.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
#[serde(transparent)]
pub struct TokenId(pub u32);

impl TokenId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for TokenId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<u32> for TokenId {
    fn from(id: u32) -> Self {
        TokenId(id)
    }
}

/// Per-position, per-layer hidden states from one forward pass.
///
/// Stores `seq_len * (num_layers + 1)` vectors of dimension `dim` in a flat
/// buffer: every position carries layer levels 0..=L.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerStates {
    data: Vec<f64>,
    seq_len: usize,
    num_layers: usize,
    dim: usize,
}

impl LayerStates {
    /// Builds from a flat buffer laid out as `[position][layer][dim]`.
    pub fn from_flat(
        data: Vec<f64>,
        seq_len: usize,
        num_layers: usize,
        dim: usize,
    ) -> Result<Self, Error> {
        let expected = seq_len * (num_layers + 1) * dim;
        if data.len() != expected {
            return Err(Error::DimensionMismatch {
                left: data.len(),
                right: expected,
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                what: "hidden states",
            });
        }
        Ok(LayerStates {
            data,
            seq_len,
            num_layers,
            dim,
        })
    }

    pub fn seq_len(&self) -> usize {
        self.seq_len
    }

    /// Final layer index L. Levels 0..=L are stored.
    pub fn num_layers(&self) -> usize {
        self.num_layers
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Hidden state vector at (position, layer).
    pub fn state(&self, pos: usize, layer: usize) -> Result<&[f64], Error> {
        if pos >= self.seq_len {
            return Err(Error::PositionOutOfRange {
                pos,
                seq_len: self.seq_len,
            });
        }
        if layer > self.num_layers {
            return Err(Error::LayerOutOfRange {
                layer,
                last: self.num_layers,
            });
        }
        let start = (pos * (self.num_layers + 1) + layer) * self.dim;
        Ok(&self.data[start..start + self.dim])
    }
}

/// A contiguous run of generated tokens scored as one unit.
///
/// `pooled[l]` is the arithmetic mean of the span's per-position hidden
/// vectors at layer `l`; only the layers the metrics read are retained.
#[derive(Debug, Clone, PartialEq)]
pub struct Span {
    pub tokens: Vec<TokenId>,
    /// Absolute position of the first span token in the full sequence.
    pub start: usize,
    /// Absolute position of the last span token (inclusive).
    pub end: usize,
    /// Sum over span tokens of log p(y_i | y_<i).
    pub log_prob_sum: f64,
    pub pooled: BTreeMap<usize, Vec<f64>>,
}

impl Span {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Which layer-disagreement metric the decoder uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MldsMode {
    /// Consecutive middle-layer disagreement.
    ConMlds,
    /// Middle layers against the final layer.
    FMlds,
}

impl fmt::Display for MldsMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MldsMode::ConMlds => write!(f, "conmlds"),
            MldsMode::FMlds => write!(f, "fmlds"),
        }
    }
}

/// Middle-layer window selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerWindowSpec {
    /// m = floor(L/3), n = floor(2L/3).
    Auto,
    /// Explicit window, validated against the backend's layer count.
    Explicit { m: usize, n: usize },
}

/// What the decoder commits after scoring candidates at a divergence point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommitMode {
    /// Append the whole winning span.
    FullSpan,
    /// Append only the winning span's first token.
    FirstToken,
}

/// All decoder tunables.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodeConfig {
    /// Penalty weight for the disagreement term.
    pub alpha: f64,
    /// Divergence threshold in (0, 1].
    pub gamma: f64,
    pub mode: MldsMode,
    /// Self-information gating on/off.
    pub gating: bool,
    pub layer_window: LayerWindowSpec,
    /// Maximum candidate span length K.
    pub max_span_len: usize,
    /// Candidate cap B.
    pub max_candidates: usize,
    pub commit_mode: CommitMode,
    /// Score spans by mean per-token log-prob instead of the raw sum.
    pub length_normalize: bool,
    pub max_new_tokens: usize,
    pub eos_tokens: BTreeSet<TokenId>,
    pub seed: u64,
}

impl Default for DecodeConfig {
    fn default() -> Self {
        DecodeConfig {
            alpha: 2.5,
            gamma: 0.3,
            mode: MldsMode::FMlds,
            gating: true,
            layer_window: LayerWindowSpec::Auto,
            max_span_len: 8,
            max_candidates: 8,
            commit_mode: CommitMode::FullSpan,
            length_normalize: true,
            max_new_tokens: 64,
            eos_tokens: BTreeSet::new(),
            seed: 0,
        }
    }
}

impl DecodeConfig {
    /// Checks field invariants that do not depend on a backend.
    pub fn validate(&self) -> Result<(), Error> {
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "gamma must be in (0, 1], got {}",
                self.gamma
            )));
        }
        if !self.alpha.is_finite() || self.alpha < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "alpha must be a finite non-negative real, got {}",
                self.alpha
            )));
        }
        if self.max_span_len == 0 {
            return Err(Error::InvalidConfig("max_span_len must be >= 1".into()));
        }
        if self.max_candidates == 0 {
            return Err(Error::InvalidConfig("max_candidates must be >= 1".into()));
        }
        if let LayerWindowSpec::Explicit { m, n } = self.layer_window {
            if m < 1 || m > n {
                return Err(Error::InvalidConfig(format!(
                    "explicit layer window needs 1 <= m <= n, got ({m}, {n})"
                )));
            }
        }
        Ok(())
    }
}

/// One scored candidate at a divergence point.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateScore {
    pub span: Span,
    /// Length-normalized or raw span log-probability, per config.
    pub log_p: f64,
    pub mlds: f64,
    pub score: f64,
    /// Position in the candidate set, ordered by descending first-token
    /// probability; the greedy token has rank 0.
    pub rank_in_c: usize,
}

/// Record of one divergence-point decision.
#[derive(Debug, Clone, PartialEq)]
pub struct DivergenceTrace {
    /// Index of the step in the generated sequence where the decision fired.
    pub position: usize,
    pub candidates: Vec<CandidateScore>,
    pub chosen_index: usize,
    pub greedy_index: usize,
}

/// Output of one decode call.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerationResult {
    pub tokens: Vec<TokenId>,
    pub traces: Vec<DivergenceTrace>,
    pub steps_greedy: usize,
    pub steps_diverged: usize,
}
