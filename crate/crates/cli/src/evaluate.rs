//! Metric computation over prediction/reference JSONL pairs.
//!
//! QA and summarization join `{"id","prediction"}` against `{"id","golds"}`
//! and report exact match, token F1, ROUGE-L and rejection rate. Multiple
//! choice joins `{"id","scores":[float]}` against samples carrying labeled,
//! pre-tokenized choices and reports MC1/MC2/MC3.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;

use cocoa_core::TokenId;
use cocoa_eval::{exact_match, mc_aggregate, rejection_rate, rouge_l, token_f1};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Task {
    Qa,
    Mc,
    Summ,
}

#[derive(Debug, Deserialize)]
struct PredictionRecord {
    id: String,
    prediction: String,
}

#[derive(Debug, Deserialize)]
struct ReferenceRecord {
    id: String,
    golds: Vec<String>,
}

#[derive(Debug, Deserialize)]
struct McScoreRecord {
    id: String,
    scores: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[allow(dead_code)] // text/tokens document what was scored; aggregation reads labels
struct McChoiceRecord {
    #[serde(default)]
    text: String,
    #[serde(default)]
    tokens: Vec<TokenId>,
    correct: bool,
}

#[derive(Debug, Deserialize)]
#[allow(dead_code)]
struct McSampleRecord {
    id: String,
    #[serde(default)]
    question_tokens: Vec<TokenId>,
    choices: Vec<McChoiceRecord>,
}

fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    let mut records = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: T = serde_json::from_str(&line)
            .with_context(|| format!("{} line {}: malformed record", path.display(), idx + 1))?;
        records.push(record);
    }
    Ok(records)
}

/// Joins two id-keyed maps, failing loudly when the id sets differ.
fn join_on_id<A, B>(
    left: Vec<(String, A)>,
    right: Vec<(String, B)>,
) -> Result<Vec<(String, A, B)>> {
    let mut right_map: BTreeMap<String, B> = right.into_iter().collect();
    let mut missing_in_right = Vec::new();
    let mut joined = Vec::with_capacity(left.len());
    for (id, a) in left {
        match right_map.remove(&id) {
            Some(b) => joined.push((id, a, b)),
            None => missing_in_right.push(id),
        }
    }
    let unmatched_right: Vec<String> = right_map.into_keys().collect();
    if !missing_in_right.is_empty() || !unmatched_right.is_empty() {
        bail!(
            "id mismatch between files; missing from references: [{}]; missing from predictions: [{}]",
            missing_in_right.join(", "),
            unmatched_right.join(", ")
        );
    }
    Ok(joined)
}

pub fn run(task: Task, pred: &Path, reference: &Path, out: Option<&PathBuf>) -> Result<i32> {
    let metrics = match task {
        Task::Qa | Task::Summ => qa_metrics(pred, reference)?,
        Task::Mc => mc_metrics(pred, reference)?,
    };
    let rendered = serde_json::to_string_pretty(&metrics)?;
    println!("{rendered}");
    if let Some(path) = out {
        std::fs::write(path, format!("{rendered}\n"))
            .with_context(|| format!("cannot write {}", path.display()))?;
    }
    Ok(0)
}

fn qa_metrics(pred: &Path, reference: &Path) -> Result<serde_json::Value> {
    let predictions: Vec<PredictionRecord> = read_jsonl(pred)?;
    let references: Vec<ReferenceRecord> = read_jsonl(reference)?;
    let joined = join_on_id(
        predictions
            .into_iter()
            .map(|p| (p.id, p.prediction))
            .collect(),
        references.into_iter().map(|r| (r.id, r.golds)).collect(),
    )?;
    if joined.is_empty() {
        bail!("no samples to evaluate");
    }

    let count = joined.len() as f64;
    let mut em_sum = 0.0;
    let mut f1_sum = 0.0;
    let mut rouge_sum = 0.0;
    let mut predictions = Vec::with_capacity(joined.len());
    for (_, prediction, golds) in &joined {
        em_sum += exact_match(prediction, golds) as u8 as f64;
        f1_sum += token_f1(prediction, golds);
        rouge_sum += golds
            .iter()
            .map(|g| rouge_l(prediction, g))
            .fold(0.0, f64::max);
        predictions.push(prediction.as_str());
    }
    Ok(serde_json::json!({
        "em": em_sum / count,
        "f1": f1_sum / count,
        "rouge_l": rouge_sum / count,
        "rejection_rate": rejection_rate(&predictions),
    }))
}

fn mc_metrics(pred: &Path, reference: &Path) -> Result<serde_json::Value> {
    let scores: Vec<McScoreRecord> = read_jsonl(pred)?;
    let samples: Vec<McSampleRecord> = read_jsonl(reference)?;
    let joined = join_on_id(
        scores.into_iter().map(|s| (s.id, s.scores)).collect(),
        samples.into_iter().map(|s| (s.id, s.choices)).collect(),
    )?;
    let mut scored = Vec::with_capacity(joined.len());
    for (id, scores, choices) in joined {
        if scores.len() != choices.len() {
            bail!(
                "sample {id}: {} scores for {} choices",
                scores.len(),
                choices.len()
            );
        }
        let labels: Vec<bool> = choices.iter().map(|c| c.correct).collect();
        scored.push((scores, labels));
    }
    let mc = mc_aggregate(&scored).context("aggregating multiple-choice scores")?;
    Ok(serde_json::json!({
        "mc1": mc.mc1,
        "mc2": mc.mc2,
        "mc3": mc.mc3,
    }))
}
