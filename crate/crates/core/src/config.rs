//! Tunable constants, loaded from a `key = value` text file.
//!
//! ```text
//! # eye contact
//! tau = 10
//! on_frames = 5
//! off_frames = 8
//! refractory_ms = 4000
//! # identification
//! unknown_threshold = 12
//! calibrate_threshold = true
//! # output
//! belt_intensity = 200
//! belt_duration_ms = 400
//! mute = false
//! count_message_template = {n} people are looking at you
//! ```
//!
//! Unlisted keys keep their defaults; unknown keys are errors.

use std::fmt::Write as _;
use std::str::FromStr;

use thiserror::Error;

use crate::arbiter::ArbiterConfig;
use crate::attention::AttentionConfig;
use crate::headpose::YawBins;
use crate::stabilizer::StabilizerConfig;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone)]
pub struct Config {
    pub attention: AttentionConfig,
    pub arbiter: ArbiterConfig,
    pub bins: YawBins,
    pub stabilizer: StabilizerConfig,
    /// Unknown-rejection distance used when the gallery cannot calibrate.
    pub unknown_threshold: f64,
    /// Derive the rejection distance from the enrolled gallery.
    pub calibrate_threshold: bool,
    /// Enrollment samples rendered per known participant in texture mode.
    pub enroll_samples: usize,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            attention: AttentionConfig::default(),
            arbiter: ArbiterConfig::default(),
            bins: YawBins::default(),
            stabilizer: StabilizerConfig::default(),
            unknown_threshold: 12.0,
            calibrate_threshold: true,
            enroll_samples: 5,
        }
    }
}

fn value<T: FromStr>(key: &str, v: &str, line: usize) -> Result<T, ConfigError> {
    v.parse().map_err(|_| ConfigError::Parse {
        line,
        message: format!("bad value {v:?} for {key}"),
    })
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut c = Config::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (key, v) = trimmed.split_once('=').ok_or_else(|| ConfigError::Parse {
                line,
                message: format!("expected key = value, found {trimmed:?}"),
            })?;
            c.set(key.trim(), v.trim(), line)?;
        }
        c.validate()?;
        Ok(c)
    }

    fn set(&mut self, key: &str, v: &str, line: usize) -> Result<(), ConfigError> {
        match key {
            "tau" => self.attention.tau = value(key, v, line)?,
            "on_frames" => self.attention.on_frames = value(key, v, line)?,
            "off_frames" => self.attention.off_frames = value(key, v, line)?,
            "refractory_ms" => self.attention.refractory_ms = value(key, v, line)?,
            "bin_inner" => self.bins.inner = value(key, v, line)?,
            "bin_outer" => self.bins.outer = value(key, v, line)?,
            "unknown_threshold" => self.unknown_threshold = value(key, v, line)?,
            "calibrate_threshold" => self.calibrate_threshold = value(key, v, line)?,
            "enroll_samples" => self.enroll_samples = value(key, v, line)?,
            "mute" => self.arbiter.mute = value(key, v, line)?,
            "belt_intensity" => self.arbiter.belt_intensity = value(key, v, line)?,
            "belt_duration_ms" => self.arbiter.belt_duration_ms = value(key, v, line)?,
            "pulse_on_aggregate" => self.arbiter.pulse_on_aggregate = value(key, v, line)?,
            "gaze_message_template" => self.arbiter.gaze_message_template = v.to_string(),
            "count_message_template" => self.arbiter.count_message_template = v.to_string(),
            "roster_template" => self.arbiter.roster_template = v.to_string(),
            "roster_template_one" => self.arbiter.roster_template_one = v.to_string(),
            "smoothing_radius" => self.stabilizer.smoothing_radius = value(key, v, line)?,
            "max_features" => self.stabilizer.max_features = value(key, v, line)?,
            _ => {
                return Err(ConfigError::Parse {
                    line,
                    message: format!("unknown key {key:?}"),
                })
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |m: String| Err(ConfigError::Invalid(m));
        if let Err(e) = self.attention.validate() {
            return invalid(e.to_string());
        }
        if let Err(e) = self.arbiter.validate() {
            return invalid(e.to_string());
        }
        if !(self.bins.inner > 0.0 && self.bins.inner < self.bins.outer && self.bins.outer < 180.0) {
            return invalid(format!("bin edges {} / {} must satisfy 0 < inner < outer < 180", self.bins.inner, self.bins.outer));
        }
        if !(self.unknown_threshold > 0.0 && self.unknown_threshold.is_finite()) {
            return invalid(format!("unknown_threshold {} must be positive", self.unknown_threshold));
        }
        if self.enroll_samples == 0 {
            return invalid("enroll_samples must be at least 1".into());
        }
        if self.stabilizer.max_features < 8 {
            return invalid("max_features must be at least 8".into());
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let a = &self.attention;
        let r = &self.arbiter;
        let mut kv = |k: &str, v: &dyn std::fmt::Display| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("tau", &a.tau);
        kv("on_frames", &a.on_frames);
        kv("off_frames", &a.off_frames);
        kv("refractory_ms", &a.refractory_ms);
        kv("bin_inner", &self.bins.inner);
        kv("bin_outer", &self.bins.outer);
        kv("unknown_threshold", &self.unknown_threshold);
        kv("calibrate_threshold", &self.calibrate_threshold);
        kv("enroll_samples", &self.enroll_samples);
        kv("mute", &r.mute);
        kv("belt_intensity", &r.belt_intensity);
        kv("belt_duration_ms", &r.belt_duration_ms);
        kv("pulse_on_aggregate", &r.pulse_on_aggregate);
        kv("gaze_message_template", &r.gaze_message_template);
        kv("count_message_template", &r.count_message_template);
        kv("roster_template", &r.roster_template);
        kv("roster_template_one", &r.roster_template_one);
        kv("smoothing_radius", &self.stabilizer.smoothing_radius);
        kv("max_features", &self.stabilizer.max_features);
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_default() {
        let c = Config::parse("# nothing\n\n").unwrap();
        assert_eq!(c.attention, AttentionConfig::default());
        assert_eq!(c.arbiter, ArbiterConfig::default());
    }

    #[test]
    fn values_override_defaults() {
        let c = Config::parse("tau = 7.5\nmute=true\ncount_message_template = {n} faces on you\n").unwrap();
        assert_eq!(c.attention.tau, 7.5);
        assert!(c.arbiter.mute);
        assert_eq!(c.arbiter.count_message_template, "{n} faces on you");
    }

    #[test]
    fn round_trip() {
        let mut c = Config::default();
        c.attention.on_frames = 3;
        c.arbiter.belt_intensity = 90;
        c.bins.inner = 20.0;
        let back = Config::parse(&c.to_text()).unwrap();
        assert_eq!(back.to_text(), c.to_text());
    }

    #[test]
    fn errors_carry_line_numbers() {
        assert_eq!(
            Config::parse("tau = 10\nwobble = 3\n").unwrap_err(),
            ConfigError::Parse {
                line: 2,
                message: "unknown key \"wobble\"".into()
            }
        );
        assert!(matches!(Config::parse("belt_intensity = 300"), Err(ConfigError::Parse { line: 1, .. })));
        assert!(matches!(Config::parse("tau = 60"), Err(ConfigError::Invalid(_))));
        assert!(matches!(Config::parse("bin_inner = 70"), Err(ConfigError::Invalid(_))));
    }
}
