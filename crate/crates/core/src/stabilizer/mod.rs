//! Camera-shake compensation for the chest-worn camera.
//!
//! Each incoming frame is matched against its predecessor with sparse
//! pyramidal optical flow, a similarity transform is fitted robustly, and the
//! accumulated camera path is smoothed with a centred moving average. Frames
//! are re-warped onto the smoothed path. Because the average is centred, the
//! stream is emitted with a delay of `radius` frames; [`Stabilizer::finish`]
//! drains the tail with a truncated window.

mod features;
mod flow;
mod motion;

use std::collections::VecDeque;

use thiserror::Error;

use crate::frame::{to_u8, Frame, PlaneRef};

pub use features::{good_features, CornerParams};
pub use flow::{track_flow, FlowPair, FlowParams, MIN_FEATURES};
pub use motion::{estimate_global_motion, RansacParams, SimilarityTransform};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum StabilizerError {
    #[error("frame size mismatch: previous {prev:?}, current {cur:?}")]
    DimensionMismatch { prev: (usize, usize), cur: (usize, usize) },
    #[error("only {found} trackable features found (need 8)")]
    InsufficientTexture { found: usize },
    #[error("motion fit needs at least 4 flow pairs, got {0}")]
    TooFewPairs(usize),
    #[error("no consensus: {inliers} of {total} pairs agree")]
    NoConsensus { inliers: usize, total: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
}

#[derive(Debug, Clone, Copy)]
pub struct StabilizerConfig {
    pub max_features: usize,
    /// Half-width of the centred moving-average window, in frames.
    pub smoothing_radius: usize,
    pub flow: FlowParams,
    pub ransac: RansacParams,
}

impl Default for StabilizerConfig {
    fn default() -> Self {
        Self {
            max_features: 200,
            smoothing_radius: 15,
            flow: FlowParams::default(),
            ransac: RansacParams::default(),
        }
    }
}

/// One stabilized output frame.
#[derive(Debug, Clone)]
pub struct StabilizedFrame {
    /// Index of the frame in the input stream.
    pub index: usize,
    pub frame: Frame,
    /// Maps input-frame pixel coordinates to output-frame coordinates.
    pub correction: SimilarityTransform,
    /// Set when the inter-frame motion for this frame could not be estimated;
    /// the frame is then passed through unwarped.
    pub failure: Option<StabilizerError>,
}

/// Log-scale, angle and translation of a cumulative path sample. Averaging
/// happens in this parameterisation.
#[derive(Debug, Clone, Copy, Default)]
struct PathSample {
    log_scale: f64,
    rotation: f64,
    tx: f64,
    ty: f64,
}

impl PathSample {
    fn of(t: &SimilarityTransform) -> Self {
        Self {
            log_scale: t.scale.ln(),
            rotation: t.rotation,
            tx: t.translation[0],
            ty: t.translation[1],
        }
    }

    fn transform(&self) -> SimilarityTransform {
        SimilarityTransform::new(self.log_scale.exp(), self.rotation, [self.tx, self.ty])
    }
}

struct Pending {
    index: usize,
    frame: Frame,
    failure: Option<StabilizerError>,
}

/// Streaming stabilizer. One instance per camera stream.
pub struct Stabilizer {
    config: StabilizerConfig,
    prev: Option<(Frame, Vec<flow::Level>)>,
    /// Cumulative transform from frame-0 coordinates to frame-k coordinates.
    cumulative: SimilarityTransform,
    path: Vec<PathSample>,
    pending: VecDeque<Pending>,
    next_index: usize,
}

impl Stabilizer {
    pub fn new(config: StabilizerConfig) -> Self {
        Self {
            config,
            prev: None,
            cumulative: SimilarityTransform::identity(),
            path: Vec::new(),
            pending: VecDeque::new(),
            next_index: 0,
        }
    }

    pub fn config(&self) -> &StabilizerConfig {
        &self.config
    }

    /// Number of frames held back by the centred smoothing window.
    pub fn latency(&self) -> usize {
        self.config.smoothing_radius
    }

    /// Feeds one frame; returns the frames whose smoothing window is now
    /// complete (at most one per call once the pipeline is primed).
    pub fn step(&mut self, frame: Frame) -> Result<Vec<StabilizedFrame>, StabilizerError> {
        let mut failure = None;
        let pyramid = flow::build_pyramid(&frame, self.config.flow.levels);
        if let Some((prev, prev_pyramid)) = &self.prev {
            if prev.width() != frame.width() || prev.height() != frame.height() {
                return Err(StabilizerError::DimensionMismatch {
                    prev: (prev.width(), prev.height()),
                    cur: (frame.width(), frame.height()),
                });
            }
            let motion = if self.config.max_features < MIN_FEATURES {
                Err(StabilizerError::InvalidParameter("max_features must be at least 8"))
            } else {
                flow::track_pyramids(prev, prev_pyramid, &pyramid, self.config.max_features, &self.config.flow)
            };
            match motion.and_then(|pairs| estimate_global_motion(&pairs, &self.config.ransac)) {
                Ok(m) => self.cumulative = m.compose(&self.cumulative),
                Err(e) => failure = Some(e),
            }
        }
        self.path.push(PathSample::of(&self.cumulative));
        self.prev = Some((frame.clone(), pyramid));
        self.pending.push_back(Pending {
            index: self.next_index,
            frame,
            failure,
        });
        self.next_index += 1;

        let mut out = Vec::new();
        let radius = self.config.smoothing_radius;
        while let Some(front) = self.pending.front() {
            if front.index + radius >= self.next_index {
                break;
            }
            let p = self.pending.pop_front().expect("front exists");
            out.push(self.emit(p));
        }
        Ok(out)
    }

    /// Flushes the frames still waiting on look-ahead.
    pub fn finish(&mut self) -> Vec<StabilizedFrame> {
        let mut out = Vec::new();
        while let Some(p) = self.pending.pop_front() {
            out.push(self.emit(p));
        }
        out
    }

    fn smoothed(&self, k: usize) -> PathSample {
        let r = self.config.smoothing_radius;
        let lo = k.saturating_sub(r);
        let hi = (k + r).min(self.path.len() - 1);
        let n = (hi - lo + 1) as f64;
        let mut acc = PathSample::default();
        for s in &self.path[lo..=hi] {
            acc.log_scale += s.log_scale;
            acc.rotation += s.rotation;
            acc.tx += s.tx;
            acc.ty += s.ty;
        }
        PathSample {
            log_scale: acc.log_scale / n,
            rotation: acc.rotation / n,
            tx: acc.tx / n,
            ty: acc.ty / n,
        }
    }

    fn emit(&self, p: Pending) -> StabilizedFrame {
        if p.failure.is_some() {
            return StabilizedFrame {
                index: p.index,
                frame: p.frame,
                correction: SimilarityTransform::identity(),
                failure: p.failure,
            };
        }
        let raw = self.path[p.index].transform();
        let smooth = self.smoothed(p.index).transform();
        let correction = smooth.compose(&raw.inverse());
        let frame = warp(&p.frame, &correction);
        StabilizedFrame {
            index: p.index,
            frame,
            correction,
            failure: None,
        }
    }
}

/// Resamples `frame` so that input point `p` lands at `t.apply(p)`.
/// Bilinear sampling, border pixels replicated. A numerically trivial
/// transform returns an exact copy.
pub fn warp(frame: &Frame, t: &SimilarityTransform) -> Frame {
    if t.is_identity(1e-9, 1e-6) {
        return frame.clone();
    }
    let inv = t.inverse();
    let (w, h) = (frame.width(), frame.height());
    let plane = PlaneRef {
        width: w,
        height: h,
        data: frame.data(),
    };
    let (a, b) = (inv.scale * inv.rotation.cos(), inv.scale * inv.rotation.sin());
    let [tx, ty] = inv.translation;
    let mut data = Vec::with_capacity(w * h);
    for y in 0..h {
        let yf = y as f64;
        for x in 0..w {
            let xf = x as f64;
            let sx = a * xf - b * yf + tx;
            let sy = b * xf + a * yf + ty;
            data.push(to_u8(plane.sample(sx, sy)));
        }
    }
    Frame::new(w, h, data, frame.timestamp()).expect("same geometry as input")
}

/// Stabilizes a whole sequence; output order and length match the input.
pub fn stabilize_sequence(
    frames: impl IntoIterator<Item = Frame>,
    config: StabilizerConfig,
) -> Result<Vec<StabilizedFrame>, StabilizerError> {
    let mut stab = Stabilizer::new(config);
    let mut out = Vec::new();
    for f in frames {
        out.extend(stab.step(f)?);
    }
    out.extend(stab.finish());
    Ok(out)
}
