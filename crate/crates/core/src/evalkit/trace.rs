//! Trace files: one record per line, `step cc=ctx,cc=ctx`, e.g. `2 0=7,1=1`.
//! The context list is optional; `#` comment lines and blank lines are skipped.

use std::io::{self, BufRead, Write};

use thiserror::Error;

use crate::model::{ClassificationId, ContextId, Observation, StepId};

use super::TraceRecord;

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("trace line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Parses a single record (`step [cc=ctx,...]`).
pub fn parse_record(text: &str) -> Result<TraceRecord, String> {
    let mut parts = text.split_ascii_whitespace();
    let step = parts.next().ok_or("empty record")?;
    let step: u32 = step
        .parse()
        .map_err(|_| format!("invalid step id `{step}`"))?;
    let mut obs = Observation::new(StepId(step));
    if let Some(ctxs) = parts.next() {
        for pair in ctxs.split(',') {
            let (cc, ctx) = pair
                .split_once('=')
                .ok_or_else(|| format!("expected `cc=ctx`, got `{pair}`"))?;
            let cc: u32 = cc
                .parse()
                .map_err(|_| format!("invalid classification id `{cc}`"))?;
            let ctx: u32 = ctx
                .parse()
                .map_err(|_| format!("invalid context id `{ctx}`"))?;
            if obs
                .contexts
                .insert(ClassificationId(cc), ContextId(ctx))
                .is_some()
            {
                return Err(format!("classification {cc} given twice"));
            }
        }
    }
    if let Some(extra) = parts.next() {
        return Err(format!("unexpected trailing field `{extra}`"));
    }
    Ok(obs)
}

pub fn format_record(record: &TraceRecord) -> String {
    let mut s = record.step.to_string();
    for (i, (cc, ctx)) in record.contexts.iter().enumerate() {
        s.push(if i == 0 { ' ' } else { ',' });
        s.push_str(&format!("{cc}={ctx}"));
    }
    s
}

pub fn read_trace<R: BufRead>(input: R) -> Result<Vec<TraceRecord>, TraceError> {
    let mut out = Vec::new();
    for (n, line) in input.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        out.push(parse_record(line).map_err(|message| TraceError::Parse {
            line: n + 1,
            message,
        })?);
    }
    Ok(out)
}

pub fn parse_trace(text: &str) -> Result<Vec<TraceRecord>, TraceError> {
    read_trace(text.as_bytes())
}

pub fn write_trace<W: Write>(mut out: W, records: &[TraceRecord]) -> io::Result<()> {
    for r in records {
        writeln!(out, "{}", format_record(r))?;
    }
    out.flush()
}
