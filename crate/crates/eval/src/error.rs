//! Evaluation error types.

#[derive(Debug, thiserror::Error)]
pub enum MetricError {
    #[error("label lists have different lengths: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("invalid sample: {0}")]
    InvalidSample(String),

    #[error("backend failure during scoring: {0}")]
    Backend(#[from] cocoa_core::Error),
}

#[derive(Debug, thiserror::Error)]
pub enum JudgeError {
    #[error("judge client misconfigured: {0}")]
    Config(String),

    #[error("transport failure after {attempts} attempts: {detail}")]
    Transport { attempts: u32, detail: String },

    #[error("judge returned http {status}")]
    Http { status: u16 },

    #[error("response body is not a chat completion: {0}")]
    Protocol(String),

    #[error("could not parse a verdict from judge output: {raw:?}")]
    VerdictParse { raw: String },
}
