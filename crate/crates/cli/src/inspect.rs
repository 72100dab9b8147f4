//! Human-readable and CSV summaries of a divergence trace file.

use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

use cocoa_core::decoder::trace::{read_trace_jsonl, TraceRecord};

struct Row {
    pos: usize,
    candidates: usize,
    greedy: usize,
    chosen: usize,
    delta_score: f64,
}

fn rows(records: &[TraceRecord]) -> Vec<Row> {
    records
        .iter()
        .map(|r| {
            let delta_score = match (r.candidates.get(r.chosen), r.candidates.get(r.greedy)) {
                (Some(chosen), Some(greedy)) => chosen.score - greedy.score,
                _ => f64::NAN,
            };
            Row {
                pos: r.pos,
                candidates: r.candidates.len(),
                greedy: r.greedy,
                chosen: r.chosen,
                delta_score,
            }
        })
        .collect()
}

pub fn run(trace: &Path, csv: Option<&PathBuf>) -> Result<i32> {
    let file =
        File::open(trace).with_context(|| format!("cannot open trace {}", trace.display()))?;
    let records = read_trace_jsonl(BufReader::new(file))
        .with_context(|| format!("reading trace {}", trace.display()))?;
    let rows = rows(&records);

    println!(
        "{:>8}  {:>10}  {:>6}  {:>6}  {:>12}",
        "pos", "candidates", "greedy", "chosen", "delta_score"
    );
    for row in &rows {
        println!(
            "{:>8}  {:>10}  {:>6}  {:>6}  {:>12.6}",
            row.pos, row.candidates, row.greedy, row.chosen, row.delta_score
        );
    }
    let flipped = rows.iter().filter(|r| r.greedy != r.chosen).count();
    println!(
        "{} divergence points, {} with a non-greedy choice",
        rows.len(),
        flipped
    );

    if let Some(path) = csv {
        let mut out =
            File::create(path).with_context(|| format!("cannot create csv {}", path.display()))?;
        writeln!(out, "pos,candidates,greedy,chosen,delta_score")?;
        for row in &rows {
            writeln!(
                out,
                "{},{},{},{},{}",
                row.pos, row.candidates, row.greedy, row.chosen, row.delta_score
            )?;
        }
    }
    Ok(0)
}
