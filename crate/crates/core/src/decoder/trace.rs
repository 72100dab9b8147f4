//! Divergence-trace wire format: one JSON object per line.
//!
//! Line schema:
//! `{"pos":int,"candidates":[{"tokens":[int],"log_p":float,"mlds":float,"score":float}],"chosen":int,"greedy":int}`

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::types::{DivergenceTrace, TokenId};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceCandidate {
    pub tokens: Vec<TokenId>,
    pub log_p: f64,
    pub mlds: f64,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub pos: usize,
    pub candidates: Vec<TraceCandidate>,
    pub chosen: usize,
    pub greedy: usize,
}

impl From<&DivergenceTrace> for TraceRecord {
    fn from(trace: &DivergenceTrace) -> Self {
        TraceRecord {
            pos: trace.position,
            candidates: trace
                .candidates
                .iter()
                .map(|c| TraceCandidate {
                    tokens: c.span.tokens.clone(),
                    log_p: c.log_p,
                    mlds: c.mlds,
                    score: c.score,
                })
                .collect(),
            chosen: trace.chosen_index,
            greedy: trace.greedy_index,
        }
    }
}

/// Writes traces as JSONL in order.
pub fn write_trace_jsonl<W: Write>(mut out: W, traces: &[TraceRecord]) -> Result<(), Error> {
    for record in traces {
        let line = serde_json::to_string(record)
            .map_err(|e| Error::Parse(format!("trace serialization failed: {e}")))?;
        out.write_all(line.as_bytes())?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Reads a JSONL trace stream; a malformed line reports its 1-based number.
pub fn read_trace_jsonl<R: BufRead>(reader: R) -> Result<Vec<TraceRecord>, Error> {
    let mut records = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: TraceRecord = serde_json::from_str(&line)
            .map_err(|e| Error::Parse(format!("trace line {}: {e}", idx + 1)))?;
        records.push(record);
    }
    Ok(records)
}
