//! Run statistics: pose-bin accuracy, identification rates, gaze-event
//! precision and recall, announcement latency and throughput.
//!
//! Gaze events are scored as intervals. Each GazeStart opens an interval
//! that the matching GazeEnd closes (or the end of the run, if none does).
//! A predicted interval matches a reference interval of the same track when
//! their intersection-over-union is at least [`MIN_IOU`]; matching is
//! one-to-one, greedy by overlap.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::attention::CueEvent;
use crate::eventlog::{LogError, LogRecord};
use crate::simulator::ContactInterval;

pub const MIN_IOU: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GazeInterval {
    pub track_id: u32,
    pub start: u64,
    pub end: u64,
}

impl GazeInterval {
    pub fn iou(&self, other: &GazeInterval) -> f64 {
        let inter = self.end.min(other.end).saturating_sub(self.start.max(other.start));
        let union = self.end.max(other.end) - self.start.min(other.start);
        if union == 0 {
            return if self.start == other.start { 1.0 } else { 0.0 };
        }
        inter as f64 / union as f64
    }
}

fn pair_up(marks: impl Iterator<Item = (u32, u64, bool)>, end_of_run: u64) -> Vec<GazeInterval> {
    let mut open: BTreeMap<u32, u64> = BTreeMap::new();
    let mut out = Vec::new();
    for (track_id, t, is_start) in marks {
        if is_start {
            open.insert(track_id, t);
        } else if let Some(start) = open.remove(&track_id) {
            out.push(GazeInterval { track_id, start, end: t });
        }
    }
    out.extend(open.into_iter().map(|(track_id, start)| GazeInterval {
        track_id,
        start,
        end: end_of_run.max(start),
    }));
    out.sort_by_key(|g| (g.start, g.track_id));
    out
}

/// Gaze intervals of an event stream; unterminated gazes end at `end_of_run`.
pub fn intervals_from_events(events: &[CueEvent], end_of_run: u64) -> Vec<GazeInterval> {
    let marks = events.iter().filter_map(|e| match e {
        CueEvent::GazeStart { track_id, timestamp, .. } => Some((*track_id, *timestamp, true)),
        CueEvent::GazeEnd { track_id, timestamp, .. } => Some((*track_id, *timestamp, false)),
        CueEvent::IdSnapshot { .. } => None,
    });
    pair_up(marks, end_of_run)
}

/// Gaze intervals of a parsed event log.
pub fn intervals_from_records(records: &[LogRecord], end_of_run: u64) -> Result<Vec<GazeInterval>, LogError> {
    let mut marks = Vec::new();
    for r in records {
        let is_start = match r.kind.as_str() {
            "gaze_start" => true,
            "gaze_end" => false,
            _ => continue,
        };
        let track = r.field(0).and_then(|f| f.parse().ok()).ok_or_else(|| LogError::Parse {
            line: r.line,
            message: "bad track id".into(),
        })?;
        marks.push((track, r.timestamp, is_start));
    }
    Ok(pair_up(marks.into_iter(), end_of_run))
}

/// One-to-one matches `(predicted, reference)` by index.
pub fn match_intervals(predicted: &[GazeInterval], reference: &[GazeInterval]) -> Vec<(usize, usize)> {
    let mut candidates = Vec::new();
    for (i, p) in predicted.iter().enumerate() {
        for (j, r) in reference.iter().enumerate() {
            if p.track_id == r.track_id {
                let iou = p.iou(r);
                if iou >= MIN_IOU {
                    candidates.push((iou, i, j));
                }
            }
        }
    }
    candidates.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut used_p = vec![false; predicted.len()];
    let mut used_r = vec![false; reference.len()];
    let mut out = Vec::new();
    for (_, i, j) in candidates {
        if !used_p[i] && !used_r[j] {
            used_p[i] = true;
            used_r[j] = true;
            out.push((i, j));
        }
    }
    out.sort_unstable();
    out
}

/// Hit counter for a fraction.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Tally {
    pub hits: usize,
    pub total: usize,
}

impl Tally {
    pub fn record(&mut self, hit: bool) {
        self.total += 1;
        self.hits += hit as usize;
    }

    pub fn add(&mut self, other: Tally) {
        self.hits += other.hits;
        self.total += other.total;
    }

    /// `None` when nothing was counted.
    pub fn fraction(&self) -> Option<f64> {
        (self.total > 0).then(|| self.hits as f64 / self.total as f64)
    }
}

/// Matched-interval counts behind precision and recall.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GazeScore {
    pub matched: usize,
    pub predicted: usize,
    pub reference: usize,
}

impl GazeScore {
    pub fn of(predicted: &[GazeInterval], reference: &[GazeInterval]) -> Self {
        Self {
            matched: match_intervals(predicted, reference).len(),
            predicted: predicted.len(),
            reference: reference.len(),
        }
    }

    pub fn add(&mut self, o: GazeScore) {
        self.matched += o.matched;
        self.predicted += o.predicted;
        self.reference += o.reference;
    }

    pub fn precision(&self) -> Option<f64> {
        (self.predicted > 0).then(|| self.matched as f64 / self.predicted as f64)
    }

    pub fn recall(&self) -> Option<f64> {
        (self.reference > 0).then(|| self.matched as f64 / self.reference as f64)
    }
}

/// Announcement delays, ms, of the matched predicted intervals: the
/// GazeStart time minus the onset of the scripted eye contact it reports
/// (the latest contact of that track starting no later than the
/// announcement).
pub fn latencies(
    predicted: &[GazeInterval],
    reference: &[GazeInterval],
    contacts: &[ContactInterval],
) -> Vec<u64> {
    match_intervals(predicted, reference)
        .into_iter()
        .filter_map(|(i, _)| {
            let p = &predicted[i];
            contacts
                .iter()
                .filter(|c| c.track_id == p.track_id && c.start <= p.start)
                .map(|c| c.start)
                .max()
                .map(|onset| p.start - onset)
        })
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricsReport {
    pub frames: usize,
    pub detections: usize,
    pub yaw_bin_accuracy: Option<f64>,
    pub id_rank1: Option<f64>,
    pub unknown_rejection_rate: Option<f64>,
    pub gaze_event_precision: Option<f64>,
    pub gaze_event_recall: Option<f64>,
    pub mean_gaze_latency_ms: Option<f64>,
    /// Scene frames per wall-clock second. Varies between runs.
    pub throughput_fps: Option<f64>,
}

fn opt(v: Option<f64>, decimals: usize) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.decimals$}"))
}

impl MetricsReport {
    fn rows(&self) -> Vec<(&'static str, String)> {
        vec![
            ("frames", self.frames.to_string()),
            ("detections", self.detections.to_string()),
            ("yaw_bin_accuracy", opt(self.yaw_bin_accuracy, 4)),
            ("id_rank1", opt(self.id_rank1, 4)),
            ("unknown_rejection_rate", opt(self.unknown_rejection_rate, 4)),
            ("gaze_event_precision", opt(self.gaze_event_precision, 4)),
            ("gaze_event_recall", opt(self.gaze_event_recall, 4)),
            ("mean_gaze_latency_ms", opt(self.mean_gaze_latency_ms, 1)),
            ("throughput_fps", opt(self.throughput_fps, 1)),
        ]
    }

    /// Machine-readable `key=value` lines.
    pub fn to_key_values(&self) -> String {
        self.rows().into_iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    pub fn to_table(&self) -> String {
        let rows = self.rows();
        let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        let mut s = String::new();
        let _ = writeln!(s, "{:<width$}  value", "metric");
        let _ = writeln!(s, "{}  -----", "-".repeat(width));
        for (k, v) in rows {
            let _ = writeln!(s, "{k:<width$}  {v}");
        }
        s
    }
}

/// Gaze scores of one event log against a reference log. Unterminated gazes
/// end at `end_of_run`, or just after the last record of either log.
/// Latency is only reported when scripted `contacts` are supplied.
pub fn score_event_logs(
    predicted: &[LogRecord],
    reference: &[LogRecord],
    end_of_run: Option<u64>,
    contacts: &[ContactInterval],
) -> Result<MetricsReport, LogError> {
    let end = end_of_run.unwrap_or_else(|| {
        predicted.iter().chain(reference).map(|r| r.timestamp + 1).max().unwrap_or(0)
    });
    let p = intervals_from_records(predicted, end)?;
    let r = intervals_from_records(reference, end)?;
    let score = GazeScore::of(&p, &r);
    let lat = latencies(&p, &r, contacts);
    Ok(MetricsReport {
        gaze_event_precision: score.precision(),
        gaze_event_recall: score.recall(),
        mean_gaze_latency_ms: (!lat.is_empty()).then(|| lat.iter().sum::<u64>() as f64 / lat.len() as f64),
        ..Default::default()
    })
}
