//! Batch generation over a JSONL prompt file.
//!
//! Input lines: `{"id":"...","prompt":[int,...]}`. Output lines:
//! `{"id":"...","tokens":[int,...],"n_divergence":int}`, or
//! `{"id":"...","error":"..."}` for samples whose backend faulted. Samples
//! run in parallel across a worker pool; results are flushed in input order
//! so identical runs produce byte-identical files.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};

use anyhow::{Context, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use cocoa_core::decoder::trace::{write_trace_jsonl, TraceRecord};
use cocoa_core::{decode, TokenId};

use crate::config::RunConfig;

#[derive(Debug, Deserialize)]
struct InputRecord {
    id: String,
    prompt: Vec<TokenId>,
}

#[derive(Debug, Serialize)]
struct OutputRecord<'a> {
    id: &'a str,
    tokens: &'a [TokenId],
    n_divergence: usize,
}

#[derive(Debug, Serialize)]
struct AbortRecord<'a> {
    id: &'a str,
    error: &'a str,
}

enum SampleOutcome {
    Done {
        tokens: Vec<TokenId>,
        traces: Vec<TraceRecord>,
    },
    Failed {
        error: String,
    },
}

pub fn run(config: &RunConfig) -> Result<i32> {
    let input = File::open(&config.input)
        .with_context(|| format!("cannot open input {}", config.input.display()))?;
    let mut records = Vec::new();
    for (idx, line) in BufReader::new(input).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: InputRecord = serde_json::from_str(&line)
            .with_context(|| format!("input line {}: malformed record", idx + 1))?;
        records.push(record);
    }

    // fail fast on unusable judge settings even though generation never
    // calls the judge itself
    if let Some(judge) = &config.judge {
        cocoa_eval::JudgeClient::new(judge.to_judge_config())
            .map_err(|e| anyhow::anyhow!("judge settings: {e}"))?;
    }

    let backend = config.backend.build()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .context("building worker pool")?;

    let outcomes: Vec<SampleOutcome> = pool.install(|| {
        records
            .par_iter()
            .map(
                |record| match decode(backend.as_ref(), &record.prompt, &config.decode) {
                    Ok(result) => SampleOutcome::Done {
                        tokens: result.tokens,
                        traces: result.traces.iter().map(TraceRecord::from).collect(),
                    },
                    Err(e) => SampleOutcome::Failed {
                        error: e.to_string(),
                    },
                },
            )
            .collect()
    });

    let output = File::create(&config.output)
        .with_context(|| format!("cannot create output {}", config.output.display()))?;
    let mut out = BufWriter::new(output);
    let mut trace_out = match &config.trace {
        Some(path) => {
            Some(BufWriter::new(File::create(path).with_context(|| {
                format!("cannot create trace file {}", path.display())
            })?))
        }
        None => None,
    };

    let mut aborted = false;
    for (record, outcome) in records.iter().zip(&outcomes) {
        match outcome {
            SampleOutcome::Done { tokens, traces } => {
                let line = serde_json::to_string(&OutputRecord {
                    id: &record.id,
                    tokens,
                    n_divergence: traces.len(),
                })?;
                writeln!(out, "{line}")?;
                if let Some(trace_out) = trace_out.as_mut() {
                    write_trace_jsonl(&mut *trace_out, traces)?;
                }
            }
            SampleOutcome::Failed { error } => {
                aborted = true;
                let line = serde_json::to_string(&AbortRecord {
                    id: &record.id,
                    error,
                })?;
                writeln!(out, "{line}")?;
            }
        }
    }
    out.flush()?;
    if let Some(mut trace_out) = trace_out {
        trace_out.flush()?;
    }

    Ok(if aborted { 2 } else { 0 })
}
