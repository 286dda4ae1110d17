//! Line-oriented event and command logs.
//!
//! Every record is `seq timestamp kind fields...`:
//!
//! ```text
//! 0 1200 spearcon 0.353 eye-contact
//! 1 1200 belt 1 200 400
//! 2 1200 speech 0.353 Anna
//! 0 1200 gaze_start 0 30.0 Anna
//! 1 2900 gaze_end 0 30.0 Anna
//! 2 3000 id_snapshot 2 4:-40.0:Ben 2:10.0:unknown
//! ```
//!
//! Pans are written with three decimals, bearings with one. Speech text runs
//! to the end of the line.

use std::fmt::Write as _;

use thiserror::Error;

use crate::arbiter::{Command, OutputCommand, SPEARCON_TOKEN};
use crate::attention::CueEvent;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LogError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Fixed-point formatting that never prints a negative zero.
pub fn fmt_fixed(v: f64, decimals: usize) -> String {
    let s = format!("{v:.decimals$}");
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        s[1..].to_string()
    } else {
        s
    }
}

pub fn format_command(c: &OutputCommand) -> String {
    let head = format!("{} {}", c.seq, c.timestamp);
    match &c.command {
        Command::Spearcon { pan } => format!("{head} spearcon {} {SPEARCON_TOKEN}", fmt_fixed(*pan, 3)),
        Command::Speech { text, pan } => format!("{head} speech {} {text}", fmt_fixed(*pan, 3)),
        Command::Belt(p) => format!("{head} belt {} {} {}", p.cell, p.intensity, p.duration_ms),
    }
}

pub fn format_event(seq: u64, e: &CueEvent) -> String {
    match e {
        CueEvent::GazeStart {
            track_id,
            timestamp,
            bearing,
            identity,
        } => format!("{seq} {timestamp} gaze_start {track_id} {} {identity}", fmt_fixed(bearing.0, 1)),
        CueEvent::GazeEnd {
            track_id,
            timestamp,
            bearing,
            identity,
        } => format!("{seq} {timestamp} gaze_end {track_id} {} {identity}", fmt_fixed(bearing.0, 1)),
        CueEvent::IdSnapshot { timestamp, people } => {
            let mut s = format!("{seq} {timestamp} id_snapshot {}", people.len());
            for p in people {
                let _ = write!(s, " {}:{}:{}", p.track_id, fmt_fixed(p.bearing.0, 1), p.identity);
            }
            s
        }
    }
}

/// Renders a whole command log, one record per line.
pub fn render_commands(cmds: &[OutputCommand]) -> String {
    cmds.iter().map(|c| format_command(c) + "\n").collect()
}

/// Renders events with sequence numbers from zero.
pub fn render_events(events: &[CueEvent]) -> String {
    events
        .iter()
        .enumerate()
        .map(|(i, e)| format_event(i as u64, e) + "\n")
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LogRecord {
    pub line: usize,
    pub seq: u64,
    pub timestamp: u64,
    pub kind: String,
    pub fields: Vec<String>,
}

impl LogRecord {
    pub fn field(&self, i: usize) -> Option<&str> {
        self.fields.get(i).map(String::as_str)
    }
}

fn field_count_ok(kind: &str, fields: &[String]) -> Result<(), String> {
    let n = fields.len();
    let ok = match kind {
        "spearcon" => n == 2,
        "speech" => n >= 2,
        "belt" => n == 3 && fields.iter().all(|f| f.parse::<u32>().is_ok()),
        "gaze_start" | "gaze_end" => n == 3,
        "id_snapshot" => match fields.first().and_then(|c| c.parse::<usize>().ok()) {
            Some(c) => n == c + 1 && fields[1..].iter().all(|p| p.split(':').count() == 3),
            None => false,
        },
        _ => return Err(format!("unknown record kind {kind:?}")),
    };
    if ok {
        Ok(())
    } else {
        Err(format!("malformed {kind} record"))
    }
}

/// Parses a log; blank lines and `#` comments are skipped.
pub fn parse_log(text: &str) -> Result<Vec<LogRecord>, LogError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let err = |message: String| LogError::Parse { line, message };
        let mut it = trimmed.split_whitespace();
        let seq = it
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| err("bad sequence number".into()))?;
        let timestamp = it
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| err("bad timestamp".into()))?;
        let kind = it.next().ok_or_else(|| err("missing record kind".into()))?.to_string();
        let mut fields: Vec<String> = it.map(str::to_string).collect();
        if kind == "speech" && fields.len() > 2 {
            let text = fields[1..].join(" ");
            fields.truncate(1);
            fields.push(text);
        }
        field_count_ok(&kind, &fields).map_err(err)?;
        out.push(LogRecord {
            line,
            seq,
            timestamp,
            kind,
            fields,
        });
    }
    Ok(out)
}

/// Field-aware comparison. Timestamps may differ by up to `tol_ms`; every
/// other field must match exactly. Returns one line per difference.
pub fn compare_logs(a: &[LogRecord], b: &[LogRecord], tol_ms: u64) -> Vec<String> {
    let mut diffs = Vec::new();
    for (x, y) in a.iter().zip(b) {
        let label = format!("seq {} {}", x.seq, x.kind);
        if x.seq != y.seq {
            diffs.push(format!("{label}: sequence number {} vs {}", x.seq, y.seq));
        }
        if x.kind != y.kind {
            diffs.push(format!("{label}: kind {} vs {}", x.kind, y.kind));
            continue;
        }
        if x.timestamp.abs_diff(y.timestamp) > tol_ms {
            diffs.push(format!("{label}: timestamp {} vs {}", x.timestamp, y.timestamp));
        }
        if x.fields != y.fields {
            diffs.push(format!("{label}: fields [{}] vs [{}]", x.fields.join(" "), y.fields.join(" ")));
        }
    }
    for (side, extra) in [("left", &a[b.len().min(a.len())..]), ("right", &b[a.len().min(b.len())..])] {
        for r in extra {
            diffs.push(format!("seq {} {}: only in {side} log", r.seq, r.kind));
        }
    }
    diffs
}
