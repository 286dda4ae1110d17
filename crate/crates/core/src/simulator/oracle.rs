//! Expected logs computed straight from the scripted timelines.
//!
//! This is a second, deliberately plain implementation of the eye-contact
//! debounce and the announcement rules. It works on whole per-track boolean
//! sequences instead of streaming state, and shares only the log record
//! types with the live pipeline, so agreement between the two is a
//! meaningful check.

use std::collections::BTreeMap;

use super::synth::scene_state;
use super::Scenario;
use crate::arbiter::{ArbiterConfig, Command, OutputCommand, Variant};
use crate::attention::{AttentionConfig, CueEvent, SnapshotEntry};
use crate::belt::BeltPulse;
use crate::faceid::IdentityLabel;
use crate::headpose::{Bearing, FaceModel3D};

/// A maximal run of frames in which a participant is visible and facing the
/// wearer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ContactInterval {
    pub track_id: u32,
    pub start: u64,
    /// Time of the first frame after the run (or the scenario end).
    pub end: u64,
}

#[derive(Debug, Clone, Default)]
pub struct GroundTruth {
    pub events: Vec<CueEvent>,
    pub commands: Vec<OutputCommand>,
    pub contacts: Vec<ContactInterval>,
}

#[derive(Debug, Clone, Copy)]
struct Sample {
    visible: bool,
    looking: bool,
    bearing: f64,
}

#[derive(Debug, Clone, Copy)]
struct Episode {
    confirm: usize,
    end: Option<usize>,
    announced: bool,
}

fn wrap180(a: f64) -> f64 {
    let r = (a + 180.0).rem_euclid(360.0) - 180.0;
    if r == -180.0 {
        180.0
    } else {
        r
    }
}

/// Earliest index `i >= from` such that the `len` samples ending at `i` all
/// equal `want`.
fn first_window(seq: &[bool], from: usize, len: usize, want: bool) -> Option<usize> {
    let mut run = 0;
    for (i, &b) in seq.iter().enumerate().skip(from) {
        run = if b == want { run + 1 } else { 0 };
        if run >= len {
            return Some(i);
        }
    }
    None
}

fn episodes(seq: &[bool], times: &[u64], cfg: &AttentionConfig) -> Vec<Episode> {
    let on = cfg.on_frames as usize;
    let off = cfg.off_frames as usize;
    let mut out = Vec::new();
    let mut from = 0;
    let mut last_announce: Option<u64> = None;
    while let Some(confirm) = first_window(seq, from, on, true) {
        let t = times[confirm];
        let announced = last_announce.is_none_or(|l| t - l >= cfg.refractory_ms);
        if announced {
            last_announce = Some(t);
        }
        let end = first_window(seq, confirm + 1, off, false);
        out.push(Episode { confirm, end, announced });
        match end {
            Some(e) => from = e + 1,
            None => break,
        }
    }
    out
}

fn label(name: &Option<String>) -> IdentityLabel {
    name.as_ref().map_or(IdentityLabel::Unknown, |n| IdentityLabel::Known(n.clone()))
}

fn pan_of(bearing: f64) -> f64 {
    (bearing / 85.0).clamp(-1.0, 1.0)
}

fn cell_of(bearing: f64) -> u8 {
    let full = if bearing < 0.0 { bearing + 360.0 } else { bearing };
    (((full + 11.25) / 22.5).floor() as i64 % 16) as u8
}

struct Emitter<'a> {
    cfg: &'a ArbiterConfig,
    haptics: bool,
    out: Vec<OutputCommand>,
}

impl Emitter<'_> {
    fn emit(&mut self, timestamp: u64, command: Command) {
        let is_pulse = matches!(command, Command::Belt(_));
        if (is_pulse && !self.haptics) || (!is_pulse && self.cfg.mute) {
            return;
        }
        let seq = self.out.len() as u64;
        self.out.push(OutputCommand { seq, timestamp, command });
    }

    fn pulse(&mut self, timestamp: u64, bearing: f64) {
        let p = BeltPulse {
            cell: cell_of(bearing),
            intensity: self.cfg.belt_intensity,
            duration_ms: self.cfg.belt_duration_ms,
        };
        self.emit(timestamp, Command::Belt(p));
    }
}

/// Expected event and command logs for `s` with noise-free perception and
/// the scripted identities.
pub fn ground_truth_events(
    s: &Scenario,
    model: &FaceModel3D,
    attention: &AttentionConfig,
    arbiter: &ArbiterConfig,
    variant: Variant,
) -> GroundTruth {
    let times = s.frame_times();
    let n = s.participants.len();
    let mut samples: Vec<Vec<Sample>> = vec![Vec::with_capacity(times.len()); n];
    let mut scenes = Vec::with_capacity(times.len());
    for &t in &times {
        let scene = scene_state(s, model, t);
        let mut row = vec![
            Sample {
                visible: false,
                looking: false,
                bearing: 0.0
            };
            n
        ];
        for e in &scene {
            row[e.track_id as usize] = Sample {
                visible: true,
                looking: wrap180(e.yaw - e.bearing).abs() <= attention.tau,
                bearing: e.bearing,
            };
        }
        for (i, r) in row.into_iter().enumerate() {
            samples[i].push(r);
        }
        scenes.push(scene);
    }

    let mut contacts = Vec::new();
    // (frame, track) -> events; BTreeMap keeps frame then track order
    let mut gaze: BTreeMap<(usize, u32), CueEvent> = BTreeMap::new();
    let mut active_spans: Vec<(usize, Option<usize>)> = Vec::new();
    for (i, track) in samples.iter().enumerate() {
        let track_id = i as u32;
        let Some(first) = track.iter().position(|x| x.visible) else {
            continue;
        };
        let mut k = 0;
        while k < track.len() {
            if track[k].visible && track[k].looking {
                let start = k;
                while k < track.len() && track[k].visible && track[k].looking {
                    k += 1;
                }
                contacts.push(ContactInterval {
                    track_id,
                    start: times[start],
                    end: times.get(k).copied().unwrap_or(s.duration),
                });
            } else {
                k += 1;
            }
        }
        let seq: Vec<bool> = track[first..].iter().map(|x| x.visible && x.looking).collect();
        let last_bearing = |upto: usize| {
            track[..=upto]
                .iter()
                .rev()
                .find(|x| x.visible)
                .map_or(0.0, |x| x.bearing)
        };
        let identity = label(&s.participants[i].name);
        for ep in episodes(&seq, &times[first..], attention) {
            if !ep.announced {
                continue;
            }
            let c = ep.confirm + first;
            gaze.insert(
                (c, track_id),
                CueEvent::GazeStart {
                    track_id,
                    timestamp: times[c],
                    bearing: Bearing(track[c].bearing),
                    identity: identity.clone(),
                },
            );
            let end = ep.end.map(|e| e + first);
            if let Some(e) = end {
                gaze.insert(
                    (e, track_id),
                    CueEvent::GazeEnd {
                        track_id,
                        timestamp: times[e],
                        bearing: Bearing(last_bearing(e)),
                        identity: identity.clone(),
                    },
                );
            }
            active_spans.push((c, end));
        }
    }

    let mut requests = s.id_requests.clone();
    requests.sort_unstable();
    let mut request_frames: BTreeMap<usize, usize> = BTreeMap::new();
    for r in requests {
        if let Some(k) = times.iter().position(|&t| t >= r) {
            *request_frames.entry(k).or_default() += 1;
        }
    }

    let mut events = Vec::new();
    let mut em = Emitter {
        cfg: arbiter,
        haptics: variant == Variant::AudioHaptics,
        out: Vec::new(),
    };
    let mut frames_with_output: Vec<usize> = gaze.keys().map(|&(k, _)| k).chain(request_frames.keys().copied()).collect();
    frames_with_output.sort_unstable();
    frames_with_output.dedup();
    for k in frames_with_output {
        let t = times[k];
        let batch: Vec<&CueEvent> = gaze.range((k, 0)..=(k, u32::MAX)).map(|(_, e)| e).collect();
        events.extend(batch.iter().map(|e| (*e).clone()));
        let starts: Vec<(f64, String)> = batch
            .iter()
            .filter_map(|e| match e {
                CueEvent::GazeStart { bearing, identity, .. } => Some((bearing.0, identity.to_string())),
                _ => None,
            })
            .collect();
        if !starts.is_empty() {
            let count = active_spans
                .iter()
                .filter(|(c, end)| *c <= k && end.is_none_or(|e| k < e))
                .count();
            if count > arbiter.aggregation_threshold {
                let text = arbiter.count_message_template.replace("{n}", &count.to_string());
                em.emit(t, Command::Speech { text, pan: 0.0 });
                if arbiter.pulse_on_aggregate {
                    for (b, _) in &starts {
                        em.pulse(t, *b);
                    }
                }
            } else {
                for (b, name) in &starts {
                    em.emit(t, Command::Spearcon { pan: pan_of(*b) });
                    em.pulse(t, *b);
                    let text = arbiter.gaze_message_template.replace("{name}", name);
                    em.emit(t, Command::Speech { text, pan: pan_of(*b) });
                }
            }
        }
        for _ in 0..request_frames.get(&k).copied().unwrap_or(0) {
            let mut people: Vec<_> = scenes[k].iter().collect();
            people.sort_by(|a, b| a.bearing.total_cmp(&b.bearing).then(a.track_id.cmp(&b.track_id)));
            events.push(CueEvent::IdSnapshot {
                timestamp: t,
                people: people
                    .iter()
                    .map(|p| SnapshotEntry {
                        track_id: p.track_id,
                        identity: label(&p.name),
                        bearing: Bearing(p.bearing),
                    })
                    .collect(),
            });
            let text = match people.len() {
                1 => arbiter.roster_template_one.clone(),
                m => arbiter.roster_template.replace("{n}", &m.to_string()),
            };
            em.emit(t, Command::Speech { text, pan: 0.0 });
            for p in people {
                em.pulse(t, p.bearing);
                em.emit(
                    t,
                    Command::Speech {
                        text: label(&p.name).to_string(),
                        pan: pan_of(p.bearing),
                    },
                );
            }
        }
    }
    contacts.sort_by_key(|c| (c.start, c.track_id));
    GroundTruth {
        events,
        commands: em.out,
        contacts,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cell_formula_brute_force() {
        for k in 0..3600 {
            let b = k as f64 / 10.0;
            let signed = if b > 180.0 { b - 360.0 } else { b };
            let want = (0..16u8)
                .min_by(|&x, &y| {
                    let d = |c: u8| {
                        let r = (b - c as f64 * 22.5).rem_euclid(360.0);
                        r.min(360.0 - r)
                    };
                    d(x).total_cmp(&d(y))
                })
                .unwrap();
            if ((b / 22.5).fract() - 0.5).abs() > 1e-9 {
                assert_eq!(cell_of(signed), want, "{b}");
            }
        }
    }

    #[test]
    fn episode_scan() {
        let cfg = AttentionConfig { on_frames: 2, off_frames: 2, refractory_ms: 0, tau: 10.0 };
        let seq = [true, false, true, true, true, false, false, true, true];
        let times: Vec<u64> = (0..seq.len() as u64).collect();
        let eps = episodes(&seq, &times, &cfg);
        assert_eq!(eps.len(), 2);
        assert_eq!((eps[0].confirm, eps[0].end), (3, Some(6)));
        assert_eq!((eps[1].confirm, eps[1].end), (8, None));
    }
}
