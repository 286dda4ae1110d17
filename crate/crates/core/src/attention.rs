//! Debounced eye-contact detection per face track.
//!
//! Each frame a track either looks at the wearer (`|yaw - bearing| <= tau`)
//! or not. A run of `on_frames` looking frames confirms a gaze and emits
//! [`CueEvent::GazeStart`]; a run of `off_frames` other frames ends it with
//! [`CueEvent::GazeEnd`]. A confirmed gaze that begins less than
//! `refractory_ms` after the track's previous `GazeStart` is absorbed
//! silently: the track is busy until the gaze ends, but nothing is emitted.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::faceid::IdentityLabel;
use crate::headpose::{relative_yaw, Bearing, HeadPose};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AttentionError {
    #[error("invalid attention config: {0}")]
    InvalidConfig(String),
    #[error("track {track_id}: timestamp {got} ms does not follow {last} ms")]
    StaleTimestamp { track_id: u32, last: u64, got: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttentionConfig {
    /// Eye-contact half-angle, degrees.
    pub tau: f64,
    pub on_frames: u32,
    pub off_frames: u32,
    pub refractory_ms: u64,
}

impl Default for AttentionConfig {
    fn default() -> Self {
        Self {
            tau: 10.0,
            on_frames: 5,
            off_frames: 8,
            refractory_ms: 4000,
        }
    }
}

impl AttentionConfig {
    pub fn validate(&self) -> Result<(), AttentionError> {
        if !(self.tau > 0.0 && self.tau <= 45.0) {
            return Err(AttentionError::InvalidConfig(format!("tau {} outside (0, 45]", self.tau)));
        }
        if self.on_frames == 0 || self.off_frames == 0 {
            return Err(AttentionError::InvalidConfig("frame counts must be at least 1".into()));
        }
        Ok(())
    }
}

/// One person in an ID snapshot.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotEntry {
    pub track_id: u32,
    pub identity: IdentityLabel,
    pub bearing: Bearing,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CueEvent {
    GazeStart {
        track_id: u32,
        timestamp: u64,
        bearing: Bearing,
        identity: IdentityLabel,
    },
    GazeEnd {
        track_id: u32,
        timestamp: u64,
        bearing: Bearing,
        identity: IdentityLabel,
    },
    IdSnapshot {
        timestamp: u64,
        people: Vec<SnapshotEntry>,
    },
}

impl CueEvent {
    pub fn timestamp(&self) -> u64 {
        match self {
            CueEvent::GazeStart { timestamp, .. } | CueEvent::GazeEnd { timestamp, .. } | CueEvent::IdSnapshot { timestamp, .. } => *timestamp,
        }
    }

    /// Builds a snapshot with people ordered left to right (ties by track).
    pub fn id_snapshot(timestamp: u64, mut people: Vec<SnapshotEntry>) -> Self {
        people.sort_by(|a, b| a.bearing.0.total_cmp(&b.bearing.0).then(a.track_id.cmp(&b.track_id)));
        CueEvent::IdSnapshot { timestamp, people }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    Idle,
    /// Gaze confirmed and announced.
    Active,
    /// Gaze confirmed inside the refractory window; not announced.
    Suppressed,
}

#[derive(Debug, Clone)]
struct TrackState {
    phase: Phase,
    looking_run: u32,
    away_run: u32,
    last_timestamp: u64,
    last_start: Option<u64>,
    bearing: Bearing,
    identity: IdentityLabel,
}

/// A track currently in the announced-gaze state.
#[derive(Debug, Clone, PartialEq)]
pub struct Gazer {
    pub track_id: u32,
    pub identity: IdentityLabel,
    pub bearing: Bearing,
}

#[derive(Debug, Clone)]
pub struct Attention {
    config: AttentionConfig,
    tracks: BTreeMap<u32, TrackState>,
}

impl Attention {
    pub fn new(config: AttentionConfig) -> Result<Self, AttentionError> {
        config.validate()?;
        Ok(Self {
            config,
            tracks: BTreeMap::new(),
        })
    }

    pub fn config(&self) -> &AttentionConfig {
        &self.config
    }

    pub fn is_looking(&self, pose: &HeadPose, bearing: Bearing) -> bool {
        relative_yaw(pose, bearing).abs() <= self.config.tau
    }

    /// Feeds one observation of a track.
    pub fn update(
        &mut self,
        track_id: u32,
        pose: &HeadPose,
        bearing: Bearing,
        identity: IdentityLabel,
        timestamp: u64,
    ) -> Result<Option<CueEvent>, AttentionError> {
        let looking = self.is_looking(pose, bearing);
        self.observe(track_id, looking, bearing, identity, timestamp)
    }

    /// Feeds a precomputed eye-contact decision.
    pub fn observe(
        &mut self,
        track_id: u32,
        looking: bool,
        bearing: Bearing,
        identity: IdentityLabel,
        timestamp: u64,
    ) -> Result<Option<CueEvent>, AttentionError> {
        if let Some(st) = self.tracks.get(&track_id) {
            if timestamp <= st.last_timestamp {
                return Err(AttentionError::StaleTimestamp {
                    track_id,
                    last: st.last_timestamp,
                    got: timestamp,
                });
            }
        }
        let st = self.tracks.entry(track_id).or_insert_with(|| TrackState {
            phase: Phase::Idle,
            looking_run: 0,
            away_run: 0,
            last_timestamp: timestamp,
            last_start: None,
            bearing,
            identity: identity.clone(),
        });
        st.last_timestamp = timestamp;
        st.bearing = bearing;
        st.identity = identity;
        Ok(Self::advance(&self.config, track_id, st, looking, timestamp))
    }

    /// Counts a frame in which the track was not observed as a non-looking
    /// frame. Unknown tracks are ignored.
    pub fn mark_absent(&mut self, track_id: u32, timestamp: u64) -> Result<Option<CueEvent>, AttentionError> {
        let Some(st) = self.tracks.get_mut(&track_id) else {
            return Ok(None);
        };
        if timestamp <= st.last_timestamp {
            return Err(AttentionError::StaleTimestamp {
                track_id,
                last: st.last_timestamp,
                got: timestamp,
            });
        }
        st.last_timestamp = timestamp;
        Ok(Self::advance(&self.config, track_id, st, false, timestamp))
    }

    fn advance(cfg: &AttentionConfig, track_id: u32, st: &mut TrackState, looking: bool, timestamp: u64) -> Option<CueEvent> {
        if looking {
            st.away_run = 0;
            st.looking_run = st.looking_run.saturating_add(1);
            if st.looking_run == cfg.on_frames && st.phase == Phase::Idle {
                let in_refractory = st.last_start.is_some_and(|s| timestamp - s < cfg.refractory_ms);
                if in_refractory {
                    st.phase = Phase::Suppressed;
                } else {
                    st.phase = Phase::Active;
                    st.last_start = Some(timestamp);
                    return Some(CueEvent::GazeStart {
                        track_id,
                        timestamp,
                        bearing: st.bearing,
                        identity: st.identity.clone(),
                    });
                }
            }
        } else {
            st.looking_run = 0;
            st.away_run = st.away_run.saturating_add(1);
            if st.away_run == cfg.off_frames {
                let was = st.phase;
                st.phase = Phase::Idle;
                if was == Phase::Active {
                    return Some(CueEvent::GazeEnd {
                        track_id,
                        timestamp,
                        bearing: st.bearing,
                        identity: st.identity.clone(),
                    });
                }
            }
        }
        None
    }

    pub fn phase(&self, track_id: u32) -> Option<Phase> {
        self.tracks.get(&track_id).map(|s| s.phase)
    }

    pub fn tracks(&self) -> impl Iterator<Item = u32> + '_ {
        self.tracks.keys().copied()
    }

    /// Tracks whose gaze has been announced and not yet ended, by track id.
    pub fn active_gazers(&self) -> Vec<Gazer> {
        self.tracks
            .iter()
            .filter(|(_, s)| s.phase == Phase::Active)
            .map(|(&track_id, s)| Gazer {
                track_id,
                identity: s.identity.clone(),
                bearing: s.bearing,
            })
            .collect()
    }
}
