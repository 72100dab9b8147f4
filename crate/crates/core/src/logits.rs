//! Log-space normalization of raw logits.

use crate::error::Error;

/// Converts logits to a log-distribution via the max-shift trick.
///
/// Output entries exponentiate and sum to 1; pairwise differences of the
/// input are preserved. Stable for inputs up to |v| ~ 1e4.
pub fn log_softmax(logits: &[f64]) -> Result<Vec<f64>, Error> {
    if logits.is_empty() {
        return Err(Error::EmptyInput { what: "logits" });
    }
    if logits.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { what: "logits" });
    }
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let log_sum: f64 = logits.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
    Ok(logits.iter().map(|v| v - max - log_sum).collect())
}
