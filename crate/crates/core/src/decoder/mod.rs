//! The generation loop.
//!
//! Greedy decoding runs until the next-token distribution admits more than
//! one candidate above the gamma-relative threshold. At such divergence
//! points every candidate token is expanded into a span by greedy
//! continuation, each span is scored by its log-probability penalized by its
//! middle-layer disagreement, and the best span is committed. The vocabulary
//! distribution itself is never modified and no teacher forcing is involved.

pub mod trace;

use std::collections::BTreeMap;

use crate::error::{DecodeError, Error};
use crate::mlds::{con_mlds, default_window, f_mlds, mean_pool, LayerWindow};
use crate::model::{Backend, StepOutput};
use crate::types::{
    CandidateScore, CommitMode, DecodeConfig, DivergenceTrace, GenerationResult, LayerWindowSpec,
    MldsMode, Span, TokenId,
};

/// Tokens whose probability is at least `gamma` times the maximum, sorted by
/// descending probability (ties by ascending id) and capped at
/// `max_candidates`. The greedy token is always element 0; more than one
/// element marks a divergence point.
pub fn divergence_set(next_log_probs: &[f64], gamma: f64, max_candidates: usize) -> Vec<TokenId> {
    let max = next_log_probs
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max);
    let threshold = max + gamma.ln();
    let mut hits: Vec<(usize, f64)> = next_log_probs
        .iter()
        .enumerate()
        .filter(|(_, lp)| **lp >= threshold)
        .map(|(id, lp)| (id, *lp))
        .collect();
    hits.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    hits.truncate(max_candidates);
    hits.into_iter().map(|(id, _)| TokenId(id as u32)).collect()
}

/// Resolves the configured window against a backend with `num_layers` blocks.
pub fn resolve_window(spec: LayerWindowSpec, num_layers: usize) -> Result<LayerWindow, Error> {
    match spec {
        LayerWindowSpec::Auto => default_window(num_layers),
        LayerWindowSpec::Explicit { m, n } => LayerWindow::new(m, n, num_layers),
    }
}

/// Span log-probability as used by the scoring rule: mean per-token
/// log-probability when normalizing, raw sum otherwise.
pub fn span_log_p(span: &Span, length_normalize: bool) -> f64 {
    if length_normalize {
        span.log_prob_sum / span.len() as f64
    } else {
        span.log_prob_sum
    }
}

/// Candidate score. Without gating the disagreement is subtracted outright;
/// with gating it scales with the span's self-information:
/// `log_p - alpha * mlds` vs `log_p * (1 + alpha * mlds)`.
pub fn score_candidate(log_p: f64, mlds: f64, alpha: f64, gating: bool) -> f64 {
    if gating {
        log_p * (1.0 + alpha * mlds)
    } else {
        log_p - alpha * mlds
    }
}

/// Disagreement of a span's pooled representations under the given mode.
pub fn span_mlds(span: &Span, mode: MldsMode, window: &LayerWindow) -> Result<f64, Error> {
    match mode {
        MldsMode::ConMlds => con_mlds(&span.pooled, window),
        MldsMode::FMlds => f_mlds(&span.pooled, window),
    }
}

/// Expands one divergence-point candidate into a span by greedy continuation.
///
/// Expansion stops at the earliest of: span length `max_span_len`, an EOS
/// token (kept in the span), or the next greedy step being itself a
/// divergence point (not entered). Pooled representations cover the window
/// layers plus the final layer, averaged over span positions only.
pub fn expand_candidate(
    backend: &dyn Backend,
    context: &[TokenId],
    first: TokenId,
    cfg: &DecodeConfig,
) -> Result<Span, Error> {
    cfg.validate()?;
    let window = resolve_window(cfg.layer_window, backend.info().num_layers)?;
    let base = backend.evaluate(context)?;
    if first.index() >= base.next_log_probs.len() {
        return Err(Error::InvalidToken {
            id: first.0,
            vocab_size: base.next_log_probs.len(),
        });
    }
    expand_span(
        backend,
        context,
        first,
        base.next_log_probs[first.index()],
        cfg,
        &window,
        cfg.max_span_len,
    )
}

fn expand_span(
    backend: &dyn Backend,
    context: &[TokenId],
    first: TokenId,
    first_log_prob: f64,
    cfg: &DecodeConfig,
    window: &LayerWindow,
    max_len: usize,
) -> Result<Span, Error> {
    let start = context.len();
    let mut prefix = context.to_vec();
    prefix.push(first);
    let mut tokens = vec![first];
    let mut log_prob_sum = first_log_prob;
    // Output of the most recent evaluate whose prefix covers the whole span,
    // reusable for pooling when expansion stops at a divergence point.
    let mut covering: Option<StepOutput> = None;
    loop {
        if cfg
            .eos_tokens
            .contains(tokens.last().expect("span non-empty"))
        {
            break;
        }
        if tokens.len() >= max_len {
            break;
        }
        let out = backend.evaluate(&prefix)?;
        let set = divergence_set(&out.next_log_probs, cfg.gamma, cfg.max_candidates);
        if set.len() > 1 {
            covering = Some(out);
            break;
        }
        let next = set[0];
        log_prob_sum += out.next_log_probs[next.index()];
        tokens.push(next);
        prefix.push(next);
        covering = None;
    }
    let states = match covering {
        Some(out) => out.layer_states,
        None => backend.evaluate(&prefix)?.layer_states,
    };
    let end = start + tokens.len() - 1;
    let mut pooled = BTreeMap::new();
    for layer in window.layers_needed() {
        pooled.insert(layer, mean_pool(&states, start, end, layer)?);
    }
    Ok(Span {
        tokens,
        start,
        end,
        log_prob_sum,
        pooled,
    })
}

/// Generates up to `max_new_tokens` tokens after `prompt`.
///
/// Greedy everywhere except at divergence points, where all candidates are
/// expanded, scored, and the winner committed (whole span or first token per
/// config). One trace is recorded per divergence point. A generated EOS
/// terminates; a backend fault aborts with the tokens committed so far.
pub fn decode(
    backend: &dyn Backend,
    prompt: &[TokenId],
    cfg: &DecodeConfig,
) -> Result<GenerationResult, DecodeError> {
    cfg.validate().map_err(DecodeError::Config)?;
    let info = backend.info();
    let window = resolve_window(cfg.layer_window, info.num_layers).map_err(DecodeError::Config)?;
    if prompt.is_empty() {
        return Err(DecodeError::Config(Error::EmptyInput { what: "prompt" }));
    }
    for t in prompt {
        if t.index() >= info.vocab_size {
            return Err(DecodeError::Config(Error::InvalidToken {
                id: t.0,
                vocab_size: info.vocab_size,
            }));
        }
    }

    let mut seq = prompt.to_vec();
    let mut generated: Vec<TokenId> = Vec::new();
    let mut traces: Vec<DivergenceTrace> = Vec::new();
    let mut steps_greedy = 0usize;

    macro_rules! try_abort {
        ($expr:expr) => {
            match $expr {
                Ok(v) => v,
                Err(e) => {
                    return Err(DecodeError::Aborted {
                        partial: generated,
                        source: e,
                    })
                }
            }
        };
    }

    'generation: while generated.len() < cfg.max_new_tokens {
        let out = try_abort!(backend.evaluate(&seq));
        let candidates = divergence_set(&out.next_log_probs, cfg.gamma, cfg.max_candidates);
        if candidates.len() == 1 {
            let token = candidates[0];
            seq.push(token);
            generated.push(token);
            steps_greedy += 1;
            if cfg.eos_tokens.contains(&token) {
                break;
            }
            continue;
        }

        // Divergence point: expand and score every candidate.
        let position = generated.len();
        let max_len = match cfg.commit_mode {
            // Whole spans must fit the remaining budget; first-token commits
            // never overshoot, so scoring keeps the full horizon.
            CommitMode::FullSpan => cfg.max_span_len.min(cfg.max_new_tokens - generated.len()),
            CommitMode::FirstToken => cfg.max_span_len,
        };
        let mut scored: Vec<CandidateScore> = Vec::with_capacity(candidates.len());
        for (rank, first) in candidates.iter().enumerate() {
            let span = try_abort!(expand_span(
                backend,
                &seq,
                *first,
                out.next_log_probs[first.index()],
                cfg,
                &window,
                max_len,
            ));
            let log_p = span_log_p(&span, cfg.length_normalize);
            let mlds = try_abort!(span_mlds(&span, cfg.mode, &window));
            let score = score_candidate(log_p, mlds, cfg.alpha, cfg.gating);
            scored.push(CandidateScore {
                span,
                log_p,
                mlds,
                score,
                rank_in_c: rank,
            });
        }
        // Ties resolve toward the candidate closest to greedy (lowest rank).
        let mut chosen = 0usize;
        for (idx, cand) in scored.iter().enumerate().skip(1) {
            if cand.score > scored[chosen].score {
                chosen = idx;
            }
        }
        let commit: Vec<TokenId> = match cfg.commit_mode {
            CommitMode::FullSpan => scored[chosen].span.tokens.clone(),
            CommitMode::FirstToken => vec![scored[chosen].span.tokens[0]],
        };
        traces.push(DivergenceTrace {
            position,
            candidates: scored,
            chosen_index: chosen,
            greedy_index: 0,
        });
        for token in commit {
            seq.push(token);
            generated.push(token);
            if cfg.eos_tokens.contains(&token) {
                break 'generation;
            }
        }
    }

    let steps_diverged = traces.len();
    Ok(GenerationResult {
        tokens: generated,
        traces,
        steps_greedy,
        steps_diverged,
    })
}
