use std::fmt::Write as _;

use super::SimError;
use crate::faceid::{validate_name, UNKNOWN_TOKEN};
use crate::headpose::CameraIntrinsics;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Keyframe {
    pub t: u64,
    /// Degrees from the optical axis, positive to the wearer's right.
    pub bearing: f64,
    /// Camera-to-nose distance, mm.
    pub distance: f64,
    /// Head yaw in the camera frame, degrees.
    pub yaw: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Participant {
    /// `None` for someone not in the gallery.
    pub name: Option<String>,
    pub enter: u64,
    pub exit: u64,
    pub keyframes: Vec<Keyframe>,
}

/// Camera shake: a circular displacement of `amplitude` px that repeats
/// every `period` frames.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jitter {
    pub amplitude: f64,
    pub period: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub duration: u64,
    pub fps: f64,
    pub camera: CameraIntrinsics,
    /// Landmark noise standard deviation, px.
    pub noise: f64,
    pub jitter: Option<Jitter>,
    pub participants: Vec<Participant>,
    pub id_requests: Vec<u64>,
}

fn lerp_at(keys: &[Keyframe], t: u64, field: impl Fn(&Keyframe) -> f64) -> f64 {
    let first = &keys[0];
    if t <= first.t {
        return field(first);
    }
    for w in keys.windows(2) {
        if t <= w[1].t {
            let a = (t - w[0].t) as f64 / (w[1].t - w[0].t) as f64;
            return field(&w[0]) + a * (field(&w[1]) - field(&w[0]));
        }
    }
    field(keys.last().unwrap())
}

impl Participant {
    pub fn present(&self, t: u64) -> bool {
        self.enter <= t && t < self.exit
    }

    pub fn bearing_at(&self, t: u64) -> f64 {
        lerp_at(&self.keyframes, t, |k| k.bearing)
    }

    pub fn distance_at(&self, t: u64) -> f64 {
        lerp_at(&self.keyframes, t, |k| k.distance)
    }

    pub fn yaw_at(&self, t: u64) -> f64 {
        lerp_at(&self.keyframes, t, |k| k.yaw)
    }

    pub fn label(&self) -> &str {
        self.name.as_deref().unwrap_or(UNKNOWN_TOKEN)
    }
}

impl Scenario {
    /// Frame timestamps `floor(k * 1000 / fps)` below the duration.
    pub fn frame_times(&self) -> Vec<u64> {
        (0..)
            .map(|k: u64| (k as f64 * 1000.0 / self.fps).floor() as u64)
            .take_while(|&t| t < self.duration)
            .collect()
    }

    pub fn parse(text: &str) -> Result<Self, SimError> {
        parse(text)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::Validation(m));
        if self.duration == 0 {
            return bad("duration must be positive".into());
        }
        if !(self.fps > 0.0 && self.fps <= 1000.0) {
            return bad(format!("fps {} outside (0, 1000]", self.fps));
        }
        if self.camera.validate().is_err() {
            return bad("invalid camera".into());
        }
        let half = self.camera.fov_h / 2.0;
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return bad(format!("noise {} must be non-negative", self.noise));
        }
        if let Some(j) = self.jitter {
            if !(j.amplitude >= 0.0 && j.amplitude.is_finite() && j.period > 0.0 && j.period.is_finite()) {
                return bad("jitter needs amplitude >= 0 and period > 0".into());
            }
        }
        for (i, p) in self.participants.iter().enumerate() {
            if let Some(n) = &p.name {
                if validate_name(n).is_err() {
                    return bad(format!("participant {i}: invalid name {n:?}"));
                }
            }
            if p.enter >= p.exit {
                return bad(format!("participant {i}: enter {} not before exit {}", p.enter, p.exit));
            }
            if p.keyframes.is_empty() {
                return bad(format!("participant {i}: no keyframes"));
            }
            let mut prev: Option<u64> = None;
            for k in &p.keyframes {
                if k.t > self.duration {
                    return bad(format!("participant {i}: keyframe t={} after duration", k.t));
                }
                if prev.is_some_and(|pt| k.t <= pt) {
                    return bad(format!("participant {i}: keyframe times must increase"));
                }
                prev = Some(k.t);
                if !(k.bearing.is_finite() && k.bearing.abs() <= half) {
                    return bad(format!("participant {i}: bearing {} beyond the {half} degree half-field", k.bearing));
                }
                if !(k.distance.is_finite() && k.distance >= 200.0) {
                    return bad(format!("participant {i}: distance {} below 200 mm", k.distance));
                }
                if !(k.yaw.is_finite() && k.yaw.abs() <= 180.0) {
                    return bad(format!("participant {i}: yaw {} outside [-180, 180]", k.yaw));
                }
            }
        }
        if let Some(&t) = self.id_requests.iter().find(|&&t| t > self.duration) {
            return bad(format!("id_request at {t} after duration"));
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "duration {}", self.duration);
        let _ = writeln!(s, "fps {}", self.fps);
        let _ = writeln!(s, "fov {}", self.camera.fov_h);
        let _ = writeln!(s, "resolution {} {}", self.camera.width, self.camera.height);
        let _ = writeln!(s, "noise {}", self.noise);
        match self.jitter {
            Some(j) => {
                let _ = writeln!(s, "jitter {} {}", j.amplitude, j.period);
            }
            None => {
                let _ = writeln!(s, "jitter none");
            }
        }
        for p in &self.participants {
            let _ = writeln!(s, "participant {} enter={} exit={}", p.label(), p.enter, p.exit);
            for k in &p.keyframes {
                let _ = writeln!(s, "  t={} bearing={} distance={} yaw={}", k.t, k.bearing, k.distance, k.yaw);
            }
        }
        for t in &self.id_requests {
            let _ = writeln!(s, "id_request t={t}");
        }
        s
    }
}

fn kv<'a>(tok: &'a str, key: &str, line: usize) -> Result<&'a str, SimError> {
    tok.strip_prefix(key)
        .and_then(|r| r.strip_prefix('='))
        .ok_or_else(|| SimError::Parse {
            line,
            message: format!("expected {key}=<value>, found {tok:?}"),
        })
}

fn num<T: std::str::FromStr>(s: &str, what: &str, line: usize) -> Result<T, SimError> {
    s.parse().map_err(|_| SimError::Parse {
        line,
        message: format!("bad {what} {s:?}"),
    })
}

fn parse(text: &str) -> Result<Scenario, SimError> {
    let mut duration = None;
    let mut fps = 30.0;
    let mut fov = crate::headpose::DEFAULT_FOV_DEG;
    let default_cam = CameraIntrinsics::default();
    let mut resolution = (default_cam.width, default_cam.height);
    let mut noise = 0.0;
    let mut jitter = None;
    let mut participants: Vec<Participant> = Vec::new();
    let mut id_requests = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("");
        if content.trim().is_empty() {
            continue;
        }
        let indented = content.starts_with(' ') || content.starts_with('\t');
        let toks: Vec<&str> = content.split_whitespace().collect();
        let err = |m: String| SimError::Parse { line, message: m };
        if indented {
            let p = participants
                .last_mut()
                .ok_or_else(|| err("keyframe before any participant".into()))?;
            if toks.len() != 4 {
                return Err(err("keyframe needs t= bearing= distance= yaw=".into()));
            }
            p.keyframes.push(Keyframe {
                t: num(kv(toks[0], "t", line)?, "time", line)?,
                bearing: num(kv(toks[1], "bearing", line)?, "bearing", line)?,
                distance: num(kv(toks[2], "distance", line)?, "distance", line)?,
                yaw: num(kv(toks[3], "yaw", line)?, "yaw", line)?,
            });
            continue;
        }
        match toks.as_slice() {
            ["duration", v] => duration = Some(num(v, "duration", line)?),
            ["fps", v] => fps = num(v, "fps", line)?,
            ["fov", v] => fov = num(v, "fov", line)?,
            ["resolution", w, h] => resolution = (num(w, "width", line)?, num(h, "height", line)?),
            ["noise", v] => noise = num(v, "noise", line)?,
            ["jitter", "none"] => jitter = None,
            ["jitter", a, p] => {
                jitter = Some(Jitter {
                    amplitude: num(a, "jitter amplitude", line)?,
                    period: num(p, "jitter period", line)?,
                })
            }
            ["participant", name, enter, exit] => participants.push(Participant {
                name: (*name != UNKNOWN_TOKEN).then(|| name.to_string()),
                enter: num(kv(enter, "enter", line)?, "enter time", line)?,
                exit: num(kv(exit, "exit", line)?, "exit time", line)?,
                keyframes: Vec::new(),
            }),
            ["id_request", t] => id_requests.push(num(kv(t, "t", line)?, "time", line)?),
            _ => return Err(err(format!("unrecognised line {:?}", content.trim()))),
        }
    }
    let duration = duration.ok_or_else(|| SimError::Validation("missing duration".into()))?;
    let camera = CameraIntrinsics {
        width: resolution.0,
        height: resolution.1,
        fov_h: fov,
    };
    let s = Scenario {
        duration,
        fps,
        camera,
        noise,
        jitter,
        participants,
        id_requests,
    };
    s.validate()?;
    Ok(s)
}
