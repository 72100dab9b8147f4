//! Text-overlap metrics for open-ended generation.
//!
//! Normalization follows the usual extractive-QA convention: lowercase,
//! strip punctuation, drop the articles a/an/the, collapse whitespace.

use std::collections::HashMap;

/// Canonical form used by exact match, token F1 and the rejection check.
pub fn normalize_text(text: &str) -> String {
    let lowered = text.to_lowercase();
    let no_punct: String = lowered
        .chars()
        .filter(|c| !c.is_ascii_punctuation())
        .collect();
    no_punct
        .split_whitespace()
        .filter(|tok| !matches!(*tok, "a" | "an" | "the"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn normalized_tokens(text: &str) -> Vec<String> {
    normalize_text(text)
        .split_whitespace()
        .map(str::to_owned)
        .collect()
}

/// True when the normalized prediction equals any normalized gold answer.
pub fn exact_match(prediction: &str, golds: &[impl AsRef<str>]) -> bool {
    let pred = normalize_text(prediction);
    golds.iter().any(|g| normalize_text(g.as_ref()) == pred)
}

/// SQuAD-style token F1: harmonic mean of bag-of-tokens precision and
/// recall after normalization, maximized over gold answers.
pub fn token_f1(prediction: &str, golds: &[impl AsRef<str>]) -> f64 {
    let pred_tokens = normalized_tokens(prediction);
    golds
        .iter()
        .map(|g| pair_f1(&pred_tokens, &normalized_tokens(g.as_ref())))
        .fold(0.0, f64::max)
}

fn pair_f1(pred: &[String], gold: &[String]) -> f64 {
    if pred.is_empty() && gold.is_empty() {
        return 1.0;
    }
    if pred.is_empty() || gold.is_empty() {
        return 0.0;
    }
    let mut gold_counts: HashMap<&str, usize> = HashMap::new();
    for tok in gold {
        *gold_counts.entry(tok.as_str()).or_default() += 1;
    }
    let mut common = 0usize;
    for tok in pred {
        if let Some(count) = gold_counts.get_mut(tok.as_str()) {
            if *count > 0 {
                *count -= 1;
                common += 1;
            }
        }
    }
    if common == 0 {
        return 0.0;
    }
    let precision = common as f64 / pred.len() as f64;
    let recall = common as f64 / gold.len() as f64;
    2.0 * precision * recall / (precision + recall)
}

/// ROUGE-L F-measure over whitespace tokens of the raw strings.
pub fn rouge_l(prediction: &str, reference: &str) -> f64 {
    let pred: Vec<&str> = prediction.split_whitespace().collect();
    let reference: Vec<&str> = reference.split_whitespace().collect();
    let lcs = lcs_len(&pred, &reference);
    if lcs == 0 {
        return 0.0;
    }
    let precision = lcs as f64 / pred.len() as f64;
    let recall = lcs as f64 / reference.len() as f64;
    2.0 * precision * recall / (precision + recall)
}

fn lcs_len(a: &[&str], b: &[&str]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let mut prev = vec![0usize; b.len() + 1];
    let mut row = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            row[j + 1] = if x == y {
                prev[j] + 1
            } else {
                row[j].max(prev[j + 1])
            };
        }
        std::mem::swap(&mut prev, &mut row);
    }
    prev[b.len()]
}

/// Fraction of predictions that normalize to "i have no comment".
pub fn rejection_rate(predictions: &[impl AsRef<str>]) -> f64 {
    if predictions.is_empty() {
        return 0.0;
    }
    let rejected = predictions
        .iter()
        .filter(|p| normalize_text(p.as_ref()) == "i have no comment")
        .count();
    rejected as f64 / predictions.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn normalize_drops_articles_and_punctuation() {
        assert_eq!(normalize_text("The Cat!"), "cat");
        assert_eq!(normalize_text("  a  b "), "b");
        assert_eq!(normalize_text("Quebec City."), "quebec city");
        assert_eq!(normalize_text("An apple, a day."), "apple day");
    }

    #[test]
    fn exact_match_cases() {
        assert!(exact_match("Quebec City", &["Quebec City"]));
        assert!(exact_match("The Taliban", &["Taliban"]));
        assert!(!exact_match("Rosa Parks", &["Claudette Colvin"]));
    }

    #[test]
    fn token_f1_cases() {
        assert_eq!(token_f1("same words here", &["same words here"]), 1.0);
        // article removal makes the bags identical
        assert_eq!(token_f1("the cat sat", &["cat sat"]), 1.0);
        // P = 2/3, R = 1 -> 0.8
        assert!((token_f1("cat sat mat", &["cat sat"]) - 0.8).abs() < 1e-12);
        assert_eq!(token_f1("alpha", &["beta"]), 0.0);
        // empty vs empty after normalization
        assert_eq!(token_f1("the", &["a"]), 1.0);
        assert_eq!(token_f1("the", &["beta"]), 0.0);
    }

    #[test]
    fn token_f1_takes_best_gold() {
        let golds = ["completely different", "cat sat"];
        assert!((token_f1("cat sat mat", &golds) - 0.8).abs() < 1e-12);
    }

    #[test]
    fn rouge_l_cases() {
        assert_eq!(rouge_l("x y z", "x y z"), 1.0);
        // LCS("a b c", "a c") = 2: P = 2/3, R = 1 -> 0.8
        assert!((rouge_l("a b c", "a c") - 0.8).abs() < 1e-12);
        assert_eq!(rouge_l("p q", "r s"), 0.0);
        assert_eq!(rouge_l("", "r s"), 0.0);
    }

    #[test]
    fn lcs_brute_force_spot_check() {
        // subsequence, not substring
        assert_eq!(lcs_len(&["a", "x", "b", "y", "c"], &["a", "b", "c"]), 3);
        assert_eq!(lcs_len(&["c", "b", "a"], &["a", "b", "c"]), 1);
    }

    #[test]
    fn rejection_rate_cases() {
        assert_eq!(rejection_rate(&["I have no comment."; 3]), 1.0);
        assert_eq!(rejection_rate(&["Paris", "42"]), 0.0);
        let preds = ["I have no comment", "Paris", "42", "1955"];
        assert!((rejection_rate(&preds) - 0.25).abs() < 1e-12);
        assert_eq!(rejection_rate(&[] as &[&str]), 0.0);
    }

    proptest! {
        #[test]
        fn exact_match_implies_perfect_f1(s in "[a-zA-Z ,.]{0,40}", t in "[a-zA-Z ,.]{0,40}") {
            let golds = [t.as_str()];
            if exact_match(&s, &golds) {
                prop_assert_eq!(token_f1(&s, &golds), 1.0);
            }
        }

        #[test]
        fn metric_ranges(s in "[a-z ]{0,30}", t in "[a-z ]{0,30}") {
            let f1 = token_f1(&s, &[t.as_str()]);
            let rl = rouge_l(&s, &t);
            prop_assert!((0.0..=1.0).contains(&f1));
            prop_assert!((0.0..=1.0).contains(&rl));
        }
    }
}
