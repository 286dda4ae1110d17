//! Turns cue events into speech, spearcon and belt commands.
//!
//! GAZE: each announced gaze produces an "eye-contact" spearcon panned
//! towards the person, then their name (or "unknown") at the same pan. With
//! haptics a belt pulse from the person's direction accompanies the spearcon.
//! When more than two people are looking at once only the count is spoken.
//!
//! ID: a roster request speaks the head count, then each person left to
//! right, each name preceded by a belt pulse when haptics are enabled.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::attention::{CueEvent, SnapshotEntry};
use crate::belt::BeltPulse;
use crate::faceid::IdentityLabel;
use crate::headpose::Bearing;

pub const SPEARCON_TOKEN: &str = "eye-contact";
/// Half of the 170° camera field.
pub const HALF_FIELD_DEG: f64 = 85.0;
pub const BELT_CELLS: u32 = 16;
pub const CELL_SPACING_DEG: f64 = 360.0 / BELT_CELLS as f64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ArbiterError {
    #[error("invalid arbiter config: {0}")]
    InvalidConfig(String),
    #[error("unknown variant {0:?} (expected audio or haptics)")]
    UnknownVariant(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Audio,
    AudioHaptics,
}

impl Variant {
    pub fn haptics(self) -> bool {
        self == Variant::AudioHaptics
    }
}

impl FromStr for Variant {
    type Err = ArbiterError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "audio" => Ok(Variant::Audio),
            "haptics" | "audio+haptics" => Ok(Variant::AudioHaptics),
            _ => Err(ArbiterError::UnknownVariant(s.to_string())),
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Audio => "audio",
            Variant::AudioHaptics => "haptics",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArbiterConfig {
    /// Gazer counts above this collapse to a count announcement.
    pub aggregation_threshold: usize,
    /// Quiet mode: speech and spearcons are dropped, pulses kept.
    pub mute: bool,
    /// `{name}` is replaced by the name or "unknown".
    pub gaze_message_template: String,
    /// `{n}` is replaced by the number of gazers.
    pub count_message_template: String,
    /// `{n}` is replaced by the number of people present.
    pub roster_template: String,
    pub roster_template_one: String,
    pub pulse_on_aggregate: bool,
    pub belt_intensity: u8,
    pub belt_duration_ms: u16,
}

impl Default for ArbiterConfig {
    fn default() -> Self {
        Self {
            aggregation_threshold: 2,
            mute: false,
            gaze_message_template: "{name}".into(),
            count_message_template: "{n} people are looking at you".into(),
            roster_template: "{n} people".into(),
            roster_template_one: "1 person".into(),
            pulse_on_aggregate: false,
            belt_intensity: 200,
            belt_duration_ms: 400,
        }
    }
}

impl ArbiterConfig {
    pub fn validate(&self) -> Result<(), ArbiterError> {
        for (k, t) in [
            ("gaze_message_template", &self.gaze_message_template),
            ("count_message_template", &self.count_message_template),
            ("roster_template", &self.roster_template),
            ("roster_template_one", &self.roster_template_one),
        ] {
            if t.trim().is_empty() || t.contains('\n') {
                return Err(ArbiterError::InvalidConfig(format!("{k} must be a non-empty single line")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    Speech { text: String, pan: f64 },
    Spearcon { pan: f64 },
    Belt(BeltPulse),
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputCommand {
    pub seq: u64,
    pub timestamp: u64,
    pub command: Command,
}

/// Belt cell for a bearing measured clockwise from the front midline.
pub fn bearing_to_cell(beta_full: f64) -> u8 {
    ((beta_full / CELL_SPACING_DEG).round() as i64).rem_euclid(BELT_CELLS as i64) as u8
}

/// Stereo pan in [-1, 1]; negative is left.
pub fn bearing_to_pan(beta: Bearing) -> f64 {
    (beta.0 / HALF_FIELD_DEG).clamp(-1.0, 1.0)
}

/// Maps a signed camera bearing onto [0, 360).
pub fn full_bearing(beta: Bearing) -> f64 {
    beta.0.rem_euclid(360.0)
}

#[derive(Debug, Clone)]
pub struct Arbiter {
    config: ArbiterConfig,
    variant: Variant,
    next_seq: u64,
}

impl Arbiter {
    pub fn new(config: ArbiterConfig, variant: Variant) -> Result<Self, ArbiterError> {
        config.validate()?;
        Ok(Self {
            config,
            variant,
            next_seq: 0,
        })
    }

    pub fn config(&self) -> &ArbiterConfig {
        &self.config
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn set_mute(&mut self, mute: bool) {
        self.config.mute = mute;
    }

    fn push(&mut self, out: &mut Vec<OutputCommand>, timestamp: u64, command: Command) {
        let audible = !matches!(command, Command::Belt(_));
        if audible && self.config.mute {
            return;
        }
        if !audible && !self.variant.haptics() {
            return;
        }
        out.push(OutputCommand {
            seq: self.next_seq,
            timestamp,
            command,
        });
        self.next_seq += 1;
    }

    fn pulse(&self, beta: Bearing) -> Command {
        Command::Belt(BeltPulse {
            cell: bearing_to_cell(full_bearing(beta)),
            intensity: self.config.belt_intensity,
            duration_ms: self.config.belt_duration_ms,
        })
    }

    fn name_text(&self, label: &IdentityLabel) -> String {
        self.config.gaze_message_template.replace("{name}", &label.to_string())
    }

    /// Handles all gaze events emitted at one timestamp. `gazers` is the
    /// size of the active-gazer set after those events.
    pub fn on_gaze_events(&mut self, timestamp: u64, events: &[CueEvent], gazers: usize) -> Vec<OutputCommand> {
        let mut out = Vec::new();
        let starts: Vec<(Bearing, &IdentityLabel)> = events
            .iter()
            .filter_map(|e| match e {
                CueEvent::GazeStart { bearing, identity, .. } => Some((*bearing, identity)),
                _ => None,
            })
            .collect();
        if starts.is_empty() {
            return out;
        }
        if gazers > self.config.aggregation_threshold {
            let text = self.config.count_message_template.replace("{n}", &gazers.to_string());
            self.push(&mut out, timestamp, Command::Speech { text, pan: 0.0 });
            if self.config.pulse_on_aggregate {
                for (beta, _) in &starts {
                    let p = self.pulse(*beta);
                    self.push(&mut out, timestamp, p);
                }
            }
            return out;
        }
        for (beta, label) in starts {
            let pan = bearing_to_pan(beta);
            self.push(&mut out, timestamp, Command::Spearcon { pan });
            let p = self.pulse(beta);
            self.push(&mut out, timestamp, p);
            let text = self.name_text(label);
            self.push(&mut out, timestamp, Command::Speech { text, pan });
        }
        out
    }

    /// Speaks the roster; `people` must be ordered by bearing.
    pub fn on_id_request(&mut self, timestamp: u64, people: &[SnapshotEntry]) -> Vec<OutputCommand> {
        let mut out = Vec::new();
        let text = if people.len() == 1 {
            self.config.roster_template_one.clone()
        } else {
            self.config.roster_template.replace("{n}", &people.len().to_string())
        };
        self.push(&mut out, timestamp, Command::Speech { text, pan: 0.0 });
        for person in people {
            let p = self.pulse(person.bearing);
            self.push(&mut out, timestamp, p);
            let text = person.identity.to_string();
            self.push(
                &mut out,
                timestamp,
                Command::Speech {
                    text,
                    pan: bearing_to_pan(person.bearing),
                },
            );
        }
        out
    }
}
