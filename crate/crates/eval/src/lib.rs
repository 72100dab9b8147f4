//! Evaluation metrics and judge-model client.
//!
//! The mechanical metrics (exact match, token F1, ROUGE-L, rejection rate,
//! MC1/MC2/MC3, truth-by-informativeness aggregation) are pure functions with
//! no network dependency; the judge client is an optional HTTP layer for
//! delegating truthfulness/informativeness calls to an external model.

pub mod error;
pub mod judge;
pub mod labels;
pub mod mc;
pub mod templates;
pub mod text;

pub use error::{JudgeError, MetricError};
pub use judge::{
    parse_verdict, render_template, JudgeClient, JudgeConfig, JudgeVerdict, QASample, API_KEY_ENV,
};
pub use labels::txi;
pub use mc::{choice_log_prob, mc_aggregate, mc_scores, McChoice, McSample, McScores};
pub use text::{exact_match, normalize_text, rejection_rate, rouge_l, token_f1};
