//! Hand-built scripted corpora with known divergence behavior.
//!
//! These tables are used by tests across the workspace and by anyone who
//! wants a deterministic end-to-end run without a real model. Both are built
//! around gamma = 0.3 and expose an EOS token as the last vocabulary entry.

use crate::model::{ScriptedEntry, ScriptedModelFile};
use crate::types::TokenId;

/// Per-position state archetypes: each is `[level0, layer1, layer2, layer3]`.
fn states_for(kind: char) -> Vec<Vec<f64>> {
    match kind {
        // prompt filler
        'p' => vec![vec![0.2, 0.2]; 4],
        // stable: middle layers agree with the final layer
        's' => vec![
            vec![0.5, 0.5],
            vec![1.0, 1.0],
            vec![1.0, 1.0],
            vec![1.0, 1.0],
        ],
        // mildly unstable path
        'u' => vec![
            vec![0.5, 0.5],
            vec![1.0, 0.0],
            vec![0.6, 0.8],
            vec![0.0, 1.0],
        ],
        // maximally confused: consecutive layers opposed, both orthogonal to
        // the final layer (ConMLDS = 1.0 and fMLDS = 1.0 over window (1,2))
        'a' => vec![
            vec![0.5, 0.5],
            vec![1.0, 0.0],
            vec![-1.0, 0.0],
            vec![0.0, 1.0],
        ],
        other => panic!("unknown state kind {other}"),
    }
}

fn entry(prefix: &[u32], probs: &[f64], kinds: &str) -> ScriptedEntry {
    assert_eq!(prefix.len(), kinds.len());
    let total: f64 = probs.iter().sum();
    assert!((total - 1.0).abs() < 1e-9, "probs must sum to 1");
    ScriptedEntry {
        prefix: prefix.iter().map(|id| TokenId(*id)).collect(),
        logits: probs.iter().map(|p| p.ln()).collect(),
        states: kinds.chars().map(states_for).collect(),
    }
}

/// EOS token of [`flip_model_file`].
pub const FLIP_EOS: u32 = 3;

/// A one-divergence-point table where the penalty flips the decision.
///
/// At prompt `[0]` the candidate set is `{1 (p=0.55), 2 (p=0.40)}`. Token 1
/// leads into maximally confused states (both disagreement metrics equal
/// 1.0) while token 2 stays stable (both 0.0). With alpha = 0 the decoder
/// keeps the greedy candidate 1; with alpha = 2.5 candidate 2 wins under
/// either metric and either gating mode. Vocabulary: 4 tokens, EOS = 3.
pub fn flip_model_file() -> ScriptedModelFile {
    ScriptedModelFile {
        vocab_size: 4,
        num_layers: 3,
        hidden_dim: 2,
        entries: vec![
            entry(&[0], &[0.025, 0.55, 0.40, 0.025], "p"),
            entry(&[0, 1], &[0.01, 0.01, 0.01, 0.97], "pa"),
            entry(&[0, 2], &[0.01, 0.01, 0.01, 0.97], "ps"),
        ],
    }
}

/// EOS token of [`branchy_model_file`].
pub const BRANCHY_EOS: u32 = 5;

/// A two-divergence-point table with variable-length spans.
///
/// With gamma = 0.3, max_span_len >= 3 and alpha = 0 from prompt `[0]`:
/// the first divergence point offers spans `[1, 3]` (stops before the next
/// divergence point) and `[2, 5]` (stops at EOS); the higher-probability
/// span `[1, 3]` leads straight into a second divergence point offering
/// `[4, 5]` and `[2, 5]`, both ending at EOS. Vocabulary: 6 tokens, EOS = 5.
pub fn branchy_model_file() -> ScriptedModelFile {
    let e = 0.025;
    ScriptedModelFile {
        vocab_size: 6,
        num_layers: 3,
        hidden_dim: 2,
        entries: vec![
            entry(&[0], &[e, 0.5, 0.4, e, e, e], "p"),
            entry(&[0, 1], &[0.02, 0.02, 0.02, 0.9, 0.02, 0.02], "pu"),
            entry(
                &[0, 1, 3],
                &[0.0375, 0.0375, 0.35, 0.0375, 0.5, 0.0375],
                "puu",
            ),
            entry(&[0, 2], &[0.02, 0.02, 0.02, 0.02, 0.02, 0.9], "ps"),
            entry(&[0, 2, 5], &[0.02, 0.02, 0.02, 0.02, 0.02, 0.9], "pss"),
            entry(&[0, 1, 3, 4], &[0.02, 0.02, 0.02, 0.02, 0.02, 0.9], "puus"),
            entry(
                &[0, 1, 3, 4, 5],
                &[0.02, 0.02, 0.02, 0.02, 0.02, 0.9],
                "puuss",
            ),
            entry(&[0, 1, 3, 2], &[0.02, 0.02, 0.02, 0.02, 0.02, 0.9], "puuu"),
            entry(
                &[0, 1, 3, 2, 5],
                &[0.02, 0.02, 0.02, 0.02, 0.02, 0.9],
                "puuuu",
            ),
        ],
    }
}
