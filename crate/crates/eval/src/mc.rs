//! Multiple-choice scoring against a backend.
//!
//! Each choice is scored by the (optionally length-normalized) total
//! log-probability of its tokens conditioned on the question tokens. Three
//! aggregates are reported: top-choice accuracy (MC1), normalized probability
//! mass on correct choices (MC2), and the fraction of correct choices that
//! beat every incorrect one (MC3).

use cocoa_core::{Backend, TokenId};

use crate::error::MetricError;

#[derive(Debug, Clone)]
pub struct McChoice {
    pub text: String,
    pub tokens: Vec<TokenId>,
    pub correct: bool,
}

#[derive(Debug, Clone)]
pub struct McSample {
    pub question: String,
    pub question_tokens: Vec<TokenId>,
    pub choices: Vec<McChoice>,
}

impl McSample {
    fn validate(&self, index: usize) -> Result<(), MetricError> {
        if self.question_tokens.is_empty() {
            return Err(MetricError::InvalidSample(format!(
                "sample {index}: question tokens are empty"
            )));
        }
        if !self.choices.iter().any(|c| c.correct) || !self.choices.iter().any(|c| !c.correct) {
            return Err(MetricError::InvalidSample(format!(
                "sample {index}: needs at least one correct and one incorrect choice"
            )));
        }
        if let Some(pos) = self.choices.iter().position(|c| c.tokens.is_empty()) {
            return Err(MetricError::InvalidSample(format!(
                "sample {index}: choice {pos} has no tokens"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McScores {
    pub mc1: f64,
    pub mc2: f64,
    pub mc3: f64,
}

/// Log-probability of a choice continuation given the question prefix.
pub fn choice_log_prob(
    backend: &dyn Backend,
    question_tokens: &[TokenId],
    choice_tokens: &[TokenId],
    length_normalize: bool,
) -> Result<f64, MetricError> {
    let mut prefix = question_tokens.to_vec();
    let mut total = 0.0;
    for token in choice_tokens {
        let out = backend.evaluate(&prefix)?;
        total += out.next_log_probs[token.index()];
        prefix.push(*token);
    }
    if length_normalize {
        total /= choice_tokens.len() as f64;
    }
    Ok(total)
}

/// Scores every sample with the backend and aggregates MC1/MC2/MC3.
pub fn mc_scores(
    backend: &dyn Backend,
    samples: &[McSample],
    length_normalize: bool,
) -> Result<McScores, MetricError> {
    let mut scored = Vec::with_capacity(samples.len());
    for (idx, sample) in samples.iter().enumerate() {
        sample.validate(idx)?;
        let mut scores = Vec::with_capacity(sample.choices.len());
        let mut labels = Vec::with_capacity(sample.choices.len());
        for choice in &sample.choices {
            scores.push(choice_log_prob(
                backend,
                &sample.question_tokens,
                &choice.tokens,
                length_normalize,
            )?);
            labels.push(choice.correct);
        }
        scored.push((scores, labels));
    }
    mc_aggregate(&scored)
}

/// MC1/MC2/MC3 from per-choice log-prob scores and correctness labels.
pub fn mc_aggregate(samples: &[(Vec<f64>, Vec<bool>)]) -> Result<McScores, MetricError> {
    if samples.is_empty() {
        return Err(MetricError::InvalidSample("no samples".into()));
    }
    let (mut mc1, mut mc2, mut mc3) = (0.0, 0.0, 0.0);
    for (idx, (scores, labels)) in samples.iter().enumerate() {
        if scores.len() != labels.len() {
            return Err(MetricError::LengthMismatch {
                left: scores.len(),
                right: labels.len(),
            });
        }
        if !labels.iter().any(|l| *l) || !labels.iter().any(|l| !*l) {
            return Err(MetricError::InvalidSample(format!(
                "sample {idx}: needs at least one correct and one incorrect choice"
            )));
        }

        let mut top = 0usize;
        for (i, s) in scores.iter().enumerate().skip(1) {
            if *s > scores[top] {
                top = i;
            }
        }
        if labels[top] {
            mc1 += 1.0;
        }

        // normalized probability mass over choices, stable in log space
        let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let total: f64 = scores.iter().map(|s| (s - max).exp()).sum();
        let correct_mass: f64 = scores
            .iter()
            .zip(labels)
            .filter(|(_, l)| **l)
            .map(|(s, _)| (s - max).exp())
            .sum();
        mc2 += correct_mass / total;

        let best_incorrect = scores
            .iter()
            .zip(labels)
            .filter(|(_, l)| !**l)
            .map(|(s, _)| *s)
            .fold(f64::NEG_INFINITY, f64::max);
        let correct_total = labels.iter().filter(|l| **l).count();
        let correct_above = scores
            .iter()
            .zip(labels)
            .filter(|(s, l)| **l && **s > best_incorrect)
            .count();
        mc3 += correct_above as f64 / correct_total as f64;
    }
    let count = samples.len() as f64;
    Ok(McScores {
        mc1: mc1 / count,
        mc2: mc2 / count,
        mc3: mc3 / count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use cocoa_core::fixtures::branchy_model_file;
    use cocoa_core::ScriptedModel;

    #[test]
    fn two_choice_hand_arithmetic() {
        let scores = mc_aggregate(&[(vec![-1.0, -2.0], vec![true, false])]).unwrap();
        assert_eq!(scores.mc1, 1.0);
        assert!((scores.mc2 - 0.7311).abs() < 1e-4);
        assert_eq!(scores.mc3, 1.0);
    }

    #[test]
    fn ties_do_not_count_for_mc3() {
        let scores = mc_aggregate(&[(vec![-1.0, -1.0], vec![true, false])]).unwrap();
        assert_eq!(scores.mc3, 0.0);
        // argmax keeps the first maximum, which is the correct choice here
        assert_eq!(scores.mc1, 1.0);
    }

    #[test]
    fn incorrect_winner_zeroes_mc1() {
        let scores = mc_aggregate(&[
            (vec![-3.0, -1.0], vec![true, false]),
            (vec![-2.0, -0.5], vec![true, false]),
        ])
        .unwrap();
        assert_eq!(scores.mc1, 0.0);
        assert_eq!(scores.mc3, 0.0);
        assert!(scores.mc2 > 0.0 && scores.mc2 < 1.0);
    }

    #[test]
    fn aggregate_validates_inputs() {
        assert!(matches!(
            mc_aggregate(&[(vec![-1.0], vec![true, false])]),
            Err(MetricError::LengthMismatch { .. })
        ));
        assert!(matches!(
            mc_aggregate(&[(vec![-1.0, -2.0], vec![true, true])]),
            Err(MetricError::InvalidSample(_))
        ));
        assert!(mc_aggregate(&[]).is_err());
    }

    #[test]
    fn backend_scoring_over_scripted_table() {
        // choices [1] (p=0.5) and [2] (p=0.4) after question [0]
        let model = ScriptedModel::from_file(branchy_model_file()).unwrap();
        let sample = McSample {
            question: "q".into(),
            question_tokens: vec![TokenId(0)],
            choices: vec![
                McChoice {
                    text: "one".into(),
                    tokens: vec![TokenId(1)],
                    correct: true,
                },
                McChoice {
                    text: "two".into(),
                    tokens: vec![TokenId(2)],
                    correct: false,
                },
            ],
        };
        let scores = mc_scores(&model, &[sample], true).unwrap();
        assert_eq!(scores.mc1, 1.0);
        assert_eq!(scores.mc3, 1.0);
        // 0.5 / (0.5 + 0.4)
        assert!((scores.mc2 - 0.5 / 0.9).abs() < 1e-9);
    }

    #[test]
    fn length_normalization_changes_multi_token_scores() {
        let model = ScriptedModel::from_file(branchy_model_file()).unwrap();
        let q = vec![TokenId(0)];
        let raw = choice_log_prob(&model, &q, &[TokenId(1), TokenId(3)], false).unwrap();
        let norm = choice_log_prob(&model, &q, &[TokenId(1), TokenId(3)], true).unwrap();
        assert!((norm - raw / 2.0).abs() < 1e-12);
        assert!((raw - (0.5f64.ln() + 0.9f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn empty_choice_tokens_rejected() {
        let model = ScriptedModel::from_file(branchy_model_file()).unwrap();
        let sample = McSample {
            question: "q".into(),
            question_tokens: vec![TokenId(0)],
            choices: vec![
                McChoice {
                    text: "".into(),
                    tokens: vec![],
                    correct: true,
                },
                McChoice {
                    text: "two".into(),
                    tokens: vec![TokenId(2)],
                    correct: false,
                },
            ],
        };
        assert!(matches!(
            mc_scores(&model, &[sample], true),
            Err(MetricError::InvalidSample(_))
        ));
    }
}
