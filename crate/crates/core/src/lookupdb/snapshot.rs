//! Line-oriented text snapshot of a [`LookupDb`].
//!
//! ```text
//! LOOKUPDB v1 alpha=0.8 theta=0.5
//! E 0 cond=1,2,3 pred=1 p=0.9
//! S 0 0 total=4 6:3 4:1
//! ```
//!
//! `E` lines declare entries in id order; each is followed by its `S` lines
//! (classification, condition index, counters). Lines starting with `#` and
//! blank lines are ignored. Floats use the shortest representation that
//! parses back to the same value, so save/load/save is byte-stable.

use std::collections::BTreeMap;
use std::io::{self, BufRead, Write};

use thiserror::Error;

use super::{ContextSlot, LookupDb};
use crate::model::{ClassificationId, ContextId, StepId, WindowIndex};

const MAGIC: &str = "LOOKUPDB";
const VERSION: &str = "v1";

/// Engine parameters recorded alongside the rules.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnapshotHeader {
    pub alpha: f64,
    pub theta: f64,
}

#[derive(Debug, Error)]
#[error("snapshot line {line}: {kind}")]
pub struct SnapshotError {
    pub line: usize,
    pub kind: SnapshotErrorKind,
}

#[derive(Debug, Error)]
pub enum SnapshotErrorKind {
    #[error("missing `LOOKUPDB` header")]
    MissingHeader,
    #[error("malformed header: {0}")]
    BadHeader(String),
    #[error("unsupported snapshot version `{0}`")]
    VersionMismatch(String),
    #[error("malformed line: {0}")]
    Malformed(String),
    #[error("entry id {found} out of sequence (expected {expected})")]
    IdOutOfSequence { expected: u32, found: u32 },
    #[error("duplicate rule (same condition and prediction as entry {0})")]
    DuplicateRule(u32),
    #[error("slot line before any entry")]
    OrphanSlot,
    #[error("slot index {0} outside the entry's condition")]
    SlotOutOfRange(WindowIndex),
    #[error("duplicate slot ({0},{1})")]
    DuplicateSlot(ClassificationId, WindowIndex),
    #[error("counters sum to {sum} but total={total}")]
    CounterMismatch { total: u64, sum: u64 },
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn err(line: usize, kind: SnapshotErrorKind) -> SnapshotError {
    SnapshotError { line, kind }
}

fn malformed(line: usize, msg: impl Into<String>) -> SnapshotError {
    err(line, SnapshotErrorKind::Malformed(msg.into()))
}

fn join_steps(steps: &[StepId]) -> String {
    steps
        .iter()
        .map(|s| s.0.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

impl LookupDb {
    pub fn write_snapshot<W: Write>(&self, mut out: W, header: SnapshotHeader) -> io::Result<()> {
        writeln!(
            out,
            "{MAGIC} {VERSION} alpha={} theta={}",
            header.alpha, header.theta
        )?;
        for e in &self.entries {
            writeln!(
                out,
                "E {} cond={} pred={} p={}",
                e.id,
                join_steps(&e.cond),
                e.prediction,
                e.p
            )?;
            for (&(cc, i), slot) in &e.slots {
                write!(out, "S {cc} {i} total={}", slot.total)?;
                for (ctx, n) in slot.counts() {
                    write!(out, " {ctx}:{n}")?;
                }
                writeln!(out)?;
            }
        }
        out.flush()
    }

    pub fn snapshot_string(&self, header: SnapshotHeader) -> String {
        let mut buf = Vec::new();
        self.write_snapshot(&mut buf, header)
            .expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("snapshot is ASCII")
    }

    pub fn read_snapshot<R: BufRead>(
        input: R,
    ) -> Result<(SnapshotHeader, LookupDb), SnapshotError> {
        let mut header = None;
        let mut db = LookupDb::new();
        let mut last_line = 0;
        for (n, line) in input.lines().enumerate() {
            let lineno = n + 1;
            last_line = lineno;
            let line = line.map_err(|e| err(lineno, e.into()))?;
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let Some(_) = header else {
                header = Some(parse_header(lineno, line)?);
                continue;
            };
            let mut fields = line.split_ascii_whitespace();
            match fields.next() {
                Some("E") => parse_entry(lineno, fields, &mut db)?,
                Some("S") => parse_slot(lineno, fields, &mut db)?,
                Some(tag) => return Err(malformed(lineno, format!("unknown record `{tag}`"))),
                None => unreachable!("blank lines skipped"),
            }
        }
        let header =
            header.ok_or_else(|| err(last_line.max(1), SnapshotErrorKind::MissingHeader))?;
        Ok((header, db))
    }

    pub fn parse_snapshot(text: &str) -> Result<(SnapshotHeader, LookupDb), SnapshotError> {
        Self::read_snapshot(text.as_bytes())
    }
}

fn key_value<'a>(
    lineno: usize,
    field: Option<&'a str>,
    key: &str,
) -> Result<&'a str, SnapshotError> {
    field
        .and_then(|f| f.strip_prefix(key))
        .and_then(|f| f.strip_prefix('='))
        .ok_or_else(|| malformed(lineno, format!("expected `{key}=...`")))
}

fn number<T: std::str::FromStr>(lineno: usize, s: &str, what: &str) -> Result<T, SnapshotError> {
    s.parse()
        .map_err(|_| malformed(lineno, format!("invalid {what} `{s}`")))
}

fn probability(lineno: usize, s: &str, what: &str) -> Result<f64, SnapshotError> {
    let v: f64 = number(lineno, s, what)?;
    if !v.is_finite() {
        return Err(malformed(lineno, format!("{what} must be finite")));
    }
    Ok(v)
}

fn parse_header(lineno: usize, line: &str) -> Result<SnapshotHeader, SnapshotError> {
    let mut fields = line.split_ascii_whitespace();
    if fields.next() != Some(MAGIC) {
        return Err(err(lineno, SnapshotErrorKind::MissingHeader));
    }
    match fields.next() {
        Some(VERSION) => {}
        Some(v) => {
            return Err(err(
                lineno,
                SnapshotErrorKind::VersionMismatch(v.to_string()),
            ))
        }
        None => {
            return Err(err(
                lineno,
                SnapshotErrorKind::BadHeader("missing version".into()),
            ))
        }
    }
    let bad = |m: String| err(lineno, SnapshotErrorKind::BadHeader(m));
    let alpha = key_value(lineno, fields.next(), "alpha").map_err(|e| bad(e.kind.to_string()))?;
    let theta = key_value(lineno, fields.next(), "theta").map_err(|e| bad(e.kind.to_string()))?;
    if let Some(extra) = fields.next() {
        return Err(bad(format!("unexpected field `{extra}`")));
    }
    let alpha: f64 = alpha
        .parse()
        .map_err(|_| bad(format!("invalid alpha `{alpha}`")))?;
    let theta: f64 = theta
        .parse()
        .map_err(|_| bad(format!("invalid theta `{theta}`")))?;
    Ok(SnapshotHeader { alpha, theta })
}

fn parse_entry<'a>(
    lineno: usize,
    mut fields: impl Iterator<Item = &'a str>,
    db: &mut LookupDb,
) -> Result<(), SnapshotError> {
    let id: u32 = number(lineno, fields.next().unwrap_or(""), "entry id")?;
    let expected = db.len() as u32;
    if id != expected {
        return Err(err(
            lineno,
            SnapshotErrorKind::IdOutOfSequence {
                expected,
                found: id,
            },
        ));
    }
    let cond = key_value(lineno, fields.next(), "cond")?
        .split(',')
        .map(|s| number(lineno, s, "condition step").map(StepId))
        .collect::<Result<Vec<_>, _>>()?;
    let pred = StepId(number(
        lineno,
        key_value(lineno, fields.next(), "pred")?,
        "prediction",
    )?);
    let p = probability(lineno, key_value(lineno, fields.next(), "p")?, "p")?;
    if !(0.0..=1.0).contains(&p) {
        return Err(malformed(lineno, format!("p={p} outside [0,1]")));
    }
    if let Some(extra) = fields.next() {
        return Err(malformed(lineno, format!("unexpected field `{extra}`")));
    }
    if let Some(existing) = db.find(&cond, pred) {
        return Err(err(
            lineno,
            SnapshotErrorKind::DuplicateRule(existing.id().0),
        ));
    }
    db.insert(cond, pred, p, BTreeMap::new());
    Ok(())
}

fn parse_slot<'a>(
    lineno: usize,
    mut fields: impl Iterator<Item = &'a str>,
    db: &mut LookupDb,
) -> Result<(), SnapshotError> {
    let cc = ClassificationId(number(
        lineno,
        fields.next().unwrap_or(""),
        "classification",
    )?);
    let i: WindowIndex = number(lineno, fields.next().unwrap_or(""), "condition index")?;
    let total: u64 = number(lineno, key_value(lineno, fields.next(), "total")?, "total")?;
    let mut counts = BTreeMap::new();
    for f in fields {
        let (ctx, n) = f
            .split_once(':')
            .ok_or_else(|| malformed(lineno, format!("expected `context:count`, got `{f}`")))?;
        let ctx = ContextId(number(lineno, ctx, "context")?);
        let n: u64 = number(lineno, n, "count")?;
        if counts.insert(ctx, n).is_some() {
            return Err(malformed(lineno, format!("context {ctx} listed twice")));
        }
    }
    let sum: u64 = counts.values().sum();
    if sum != total {
        return Err(err(
            lineno,
            SnapshotErrorKind::CounterMismatch { total, sum },
        ));
    }
    let entry = db
        .entries
        .last_mut()
        .ok_or_else(|| err(lineno, SnapshotErrorKind::OrphanSlot))?;
    if entry.cond_at(i).is_none() {
        return Err(err(lineno, SnapshotErrorKind::SlotOutOfRange(i)));
    }
    if entry
        .slots
        .insert((cc, i), ContextSlot::from_parts(total, counts))
        .is_some()
    {
        return Err(err(lineno, SnapshotErrorKind::DuplicateSlot(cc, i)));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: SnapshotHeader = SnapshotHeader {
        alpha: 0.8,
        theta: 0.5,
    };

    fn two_entry_db() -> LookupDb {
        let mut db = LookupDb::new();
        db.insert(
            vec![StepId(1), StepId(2), StepId(3)],
            StepId(1),
            0.9,
            [(
                (ClassificationId(0), 0),
                ContextSlot::from_parts(4, [(ContextId(6), 3), (ContextId(4), 1)].into()),
            )]
            .into(),
        );
        db.insert(vec![StepId(2)], StepId(3), 0.2, BTreeMap::new());
        db
    }

    #[test]
    fn empty_db_is_header_only() {
        let text = LookupDb::new().snapshot_string(HEADER);
        assert_eq!(text, "LOOKUPDB v1 alpha=0.8 theta=0.5\n");
        let (h, db) = LookupDb::parse_snapshot(&text).unwrap();
        assert_eq!(h, HEADER);
        assert!(db.is_empty());
    }

    #[test]
    fn exact_text_and_round_trip() {
        let db = two_entry_db();
        let text = db.snapshot_string(HEADER);
        assert_eq!(
            text,
            "LOOKUPDB v1 alpha=0.8 theta=0.5\n\
             E 0 cond=1,2,3 pred=1 p=0.9\n\
             S 0 0 total=4 4:1 6:3\n\
             E 1 cond=2 pred=3 p=0.2\n"
        );
        let (h, back) = LookupDb::parse_snapshot(&text).unwrap();
        assert_eq!(h, HEADER);
        assert_eq!(back, db);
        back.check_invariants().unwrap();
        assert_eq!(back.snapshot_string(h), text);
    }

    #[test]
    fn comments_and_blank_lines_are_ignored() {
        let text =
            "# saved by hand\n\nLOOKUPDB v1 alpha=0.5 theta=0.25\n# rule\nE 0 cond=4 pred=1 p=1\n";
        let (h, db) = LookupDb::parse_snapshot(text).unwrap();
        assert_eq!(h.alpha, 0.5);
        assert_eq!(db.len(), 1);
    }

    fn load_err(text: &str) -> SnapshotError {
        LookupDb::parse_snapshot(text).unwrap_err()
    }

    #[test]
    fn rejects_bad_input_with_line_numbers() {
        let e = load_err(
            "LOOKUPDB v1 alpha=0.8 theta=0.5\nE 0 cond=2 pred=3 p=0.2\nS 0 0 total=3 6:2\n",
        );
        assert_eq!(e.line, 3);
        assert!(matches!(
            e.kind,
            SnapshotErrorKind::CounterMismatch { total: 3, sum: 2 }
        ));

        let e = load_err("LOOKUPDB v2 alpha=0.8 theta=0.5\n");
        assert!(matches!(e.kind, SnapshotErrorKind::VersionMismatch(_)));

        let e = load_err("E 0 cond=2 pred=3 p=0.2\n");
        assert!(matches!(e.kind, SnapshotErrorKind::MissingHeader));
        assert!(matches!(
            load_err("").kind,
            SnapshotErrorKind::MissingHeader
        ));

        let e = load_err("LOOKUPDB v1 alpha=x theta=0.5\n");
        assert!(matches!(e.kind, SnapshotErrorKind::BadHeader(_)));

        let e = load_err("LOOKUPDB v1 alpha=0.8 theta=0.5\nE 1 cond=2 pred=3 p=0.2\n");
        assert!(matches!(
            e.kind,
            SnapshotErrorKind::IdOutOfSequence {
                expected: 0,
                found: 1
            }
        ));

        let e = load_err(
            "LOOKUPDB v1 alpha=0.8 theta=0.5\nE 0 cond=2 pred=3 p=0.2\nE 1 cond=2 pred=3 p=0.4\n",
        );
        assert_eq!(e.line, 3);
        assert!(matches!(e.kind, SnapshotErrorKind::DuplicateRule(0)));

        let e = load_err("LOOKUPDB v1 alpha=0.8 theta=0.5\nS 0 0 total=0\n");
        assert!(matches!(e.kind, SnapshotErrorKind::OrphanSlot));

        let e = load_err(
            "LOOKUPDB v1 alpha=0.8 theta=0.5\nE 0 cond=2 pred=3 p=0.2\nS 0 -1 total=1 5:1\n",
        );
        assert!(matches!(e.kind, SnapshotErrorKind::SlotOutOfRange(-1)));

        let e = load_err("LOOKUPDB v1 alpha=0.8 theta=0.5\nE 0 cond=2 pred=3 p=1.5\n");
        assert!(matches!(e.kind, SnapshotErrorKind::Malformed(_)));

        let e = load_err("LOOKUPDB v1 alpha=0.8 theta=0.5\nX 0\n");
        assert!(matches!(e.kind, SnapshotErrorKind::Malformed(_)));
    }
}
