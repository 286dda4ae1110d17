//! End-to-end run of a scenario: perception, debouncing, arbitration and
//! scoring.
//!
//! Perception of each frame (optional stabilization correction, pose,
//! bearing, identity) depends only on the scenario, the frame index and the
//! seed, so frames are perceived in parallel unless the run is
//! deterministic. Attention and arbitration then consume the frames strictly
//! in time order, which keeps every log identical between the two modes.

use std::collections::BTreeSet;
use std::fs;
use std::io;
use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::arbiter::{ArbiterError, Arbiter, OutputCommand, Variant};
use crate::attention::{Attention, AttentionError, CueEvent, SnapshotEntry};
use crate::config::{Config, ConfigError};
use crate::eventlog::{render_commands, render_events};
use crate::faceid::{extract_descriptor, normalize_face, FaceIdError, Gallery, IdentityLabel};
use crate::headpose::{
    bearing_of, classify_relative_yaw, relative_yaw, wrap_deg, Bearing, FaceModel3D, HeadPose, LandmarkObservation,
};
use crate::metrics::{intervals_from_events, latencies, GazeScore, MetricsReport, Tally};
use crate::simulator::texture::{
    background_frame, jitter_offset, name_seed, render_face, sample_chip, IdentityTexture, BACKGROUND_SIZE,
};
use crate::simulator::{
    ground_truth_events, noise_rng, synthesize_observations, FacePlacement, GroundTruth, Scenario, SyntheticFace,
};
use crate::stabilizer::{SimilarityTransform, Stabilizer, StabilizerError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Arbiter(#[from] ArbiterError),
    #[error("gallery: {0}")]
    Gallery(#[from] FaceIdError),
    #[error("at {timestamp} ms: {source}")]
    Attention { timestamp: u64, source: AttentionError },
    #[error("at {timestamp} ms: {source}")]
    Stabilizer { timestamp: u64, source: StabilizerError },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    pub variant: Variant,
    pub seed: u64,
    /// Single-threaded, in-order execution.
    pub deterministic: bool,
    pub mute: bool,
    /// Render face textures and identify them against a gallery enrolled
    /// from the named participants; otherwise scripted names are used.
    pub identify: bool,
    /// Render shaken background frames, stabilize them and apply the
    /// correction to the landmarks.
    pub stabilize: bool,
}

impl RunOptions {
    pub fn new(variant: Variant, seed: u64) -> Self {
        Self {
            variant,
            seed,
            deterministic: true,
            mute: false,
            identify: false,
            stabilize: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub events: Vec<CueEvent>,
    pub commands: Vec<OutputCommand>,
    pub truth: GroundTruth,
    pub report: MetricsReport,
}

/// What one detection contributed.
#[derive(Debug, Clone)]
struct Percept {
    track_id: u32,
    /// `None` if the pose could not be recovered.
    pose: Option<(HeadPose, Bearing)>,
    label: IdentityLabel,
    bin_hit: Option<bool>,
    rank1_hit: Option<bool>,
    rejected: Option<bool>,
}

const RENDER_STREAM: u64 = 0x7265_6e64_6572_0001;
const ENROLL_STREAM: u64 = 0x656e_726f_6c6c_0001;

fn texture_for(face: &SyntheticFace) -> IdentityTexture {
    match &face.truth.name {
        Some(n) => IdentityTexture::for_name(n),
        None => IdentityTexture::from_seed(name_seed(&format!("stranger-{}", face.truth.track_id))),
    }
}

/// A gallery holding `samples` rendered chips of each named participant,
/// captured in a controlled near-frontal enrollment session.
pub fn enroll_participants(scenario: &Scenario, model: &FaceModel3D, config: &Config, seed: u64) -> Result<Gallery, PipelineError> {
    let mut gallery = Gallery::new(config.unknown_threshold)?;
    let names: BTreeSet<&str> = scenario.participants.iter().filter_map(|p| p.name.as_deref()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ENROLL_STREAM);
    for name in names {
        let texture = IdentityTexture::for_name(name);
        let mut enrolled = 0;
        while enrolled < config.enroll_samples {
            let placement = enrollment_pose(&mut rng);
            if let Some(chip) = sample_chip(&texture, &scenario.camera, model, &placement, 1.0, &mut rng) {
                gallery.enroll(name, extract_descriptor(&chip))?;
                enrolled += 1;
            }
        }
    }
    if config.calibrate_threshold {
        gallery.calibrate();
    }
    Ok(gallery)
}

/// Near-frontal pose used for enrollment samples.
pub fn enrollment_pose(rng: &mut ChaCha8Rng) -> FacePlacement {
    let bearing = rng.random_range(-20.0..20.0);
    let mut p = FacePlacement::new(bearing, rng.random_range(900.0..1800.0), bearing + rng.random_range(-10.0..10.0));
    p.pitch = rng.random_range(-10.0..10.0);
    p.roll = rng.random_range(-8.0..8.0);
    p
}

/// Stabilizer corrections per frame, lifted from background to camera
/// resolution, together with the shake applied to each frame.
fn stabilization_pass(
    scenario: &Scenario,
    times: &[u64],
    config: &Config,
) -> Result<Vec<([f64; 2], SimilarityTransform)>, PipelineError> {
    let scale = scenario.camera.width as f64 / BACKGROUND_SIZE.0 as f64;
    let offsets: Vec<[f64; 2]> = (0..times.len())
        .map(|k| scenario.jitter.map_or([0.0, 0.0], |j| jitter_offset(&j, k)))
        .collect();
    let mut stab = Stabilizer::new(config.stabilizer);
    let mut corrections = vec![SimilarityTransform::identity(); times.len()];
    let mut place = |frames: Vec<crate::stabilizer::StabilizedFrame>| {
        for f in frames {
            let c = f.correction;
            corrections[f.index] = SimilarityTransform::new(
                c.scale,
                c.rotation,
                [c.translation[0] * scale, c.translation[1] * scale],
            );
        }
    };
    for (k, &t) in times.iter().enumerate() {
        let out = stab
            .step(background_frame(offsets[k], t))
            .map_err(|source| PipelineError::Stabilizer { timestamp: t, source })?;
        place(out);
    }
    place(stab.finish());
    Ok(offsets
        .into_iter()
        .map(|o| [o[0] * scale, o[1] * scale])
        .zip(corrections)
        .collect())
}

struct Perceiver<'a> {
    scenario: &'a Scenario,
    model: &'a FaceModel3D,
    config: &'a Config,
    seed: u64,
    gallery: Option<&'a Gallery>,
    shake: Option<&'a [([f64; 2], SimilarityTransform)]>,
}

impl Perceiver<'_> {
    fn frame(&self, k: usize, t: u64) -> Vec<Percept> {
        let faces = synthesize_observations(self.scenario, self.model, t, k as u64, self.seed);
        faces.iter().map(|f| self.face(f, k)).collect()
    }

    fn face(&self, face: &SyntheticFace, k: usize) -> Percept {
        let cam = &self.scenario.camera;
        let obs = match self.shake {
            Some(s) => {
                let (offset, correction) = &s[k];
                face.observation.map_points(|p| correction.apply([p[0] + offset[0], p[1] + offset[1]]))
            }
            None => face.observation.clone(),
        };
        let pose = crate::headpose::solve_pose(&obs, self.model, cam)
            .ok()
            .zip(bearing_of(&obs, cam).ok());
        let bins = &self.config.bins;
        let bin_hit = pose.map(|(p, b)| {
            let truth = classify_relative_yaw(wrap_deg(face.truth.yaw - face.truth.bearing), bins);
            classify_relative_yaw(relative_yaw(&p, b), bins) == truth
        });
        let scripted = face.truth.name.as_ref().map_or(IdentityLabel::Unknown, IdentityLabel::known);
        let mut percept = Percept {
            track_id: face.truth.track_id,
            pose,
            label: scripted,
            bin_hit,
            rank1_hit: None,
            rejected: None,
        };
        if let Some(gallery) = self.gallery {
            let id = self.identify(gallery, face, k);
            match &face.truth.name {
                Some(n) => percept.rank1_hit = Some(id.as_ref().is_some_and(|i| i.nearest.as_deref() == Some(n))),
                None => percept.rejected = Some(id.as_ref().is_none_or(|i| !i.label.is_known())),
            }
            percept.label = id.map_or(IdentityLabel::Unknown, |i| i.label);
        }
        percept
    }

    fn identify(&self, gallery: &Gallery, face: &SyntheticFace, k: usize) -> Option<crate::faceid::Identification> {
        let cam = &self.scenario.camera;
        let truth = LandmarkObservation::from_points(face.truth.track_id, face.clean.clone(), 0).ok()?;
        let mut rng = noise_rng(self.seed ^ RENDER_STREAM, k as u64, face.truth.track_id);
        let patch = render_face(&texture_for(face), &truth, (cam.width, cam.height), 0.0, &mut rng)?;
        let chip = normalize_face(&patch.frame, &patch.localize(&face.observation)).ok()?;
        Some(gallery.identify(&extract_descriptor(&chip)))
    }
}

/// Runs `scenario` end to end.
pub fn run(scenario: &Scenario, config: &Config, opts: &RunOptions) -> Result<RunOutput, PipelineError> {
    config.validate()?;
    let model = FaceModel3D::canonical();
    let mut arbiter_cfg = config.arbiter.clone();
    arbiter_cfg.mute |= opts.mute;
    let mut arbiter = Arbiter::new(arbiter_cfg.clone(), opts.variant)?;
    let mut attention = Attention::new(config.attention).map_err(|e| ConfigError::Invalid(e.to_string()))?;
    let gallery = if opts.identify {
        Some(enroll_participants(scenario, &model, config, opts.seed)?)
    } else {
        None
    };
    let times = scenario.frame_times();

    let started = Instant::now();
    let shake = if opts.stabilize {
        Some(stabilization_pass(scenario, &times, config)?)
    } else {
        None
    };
    let perceiver = Perceiver {
        scenario,
        model: &model,
        config,
        seed: opts.seed,
        gallery: gallery.as_ref(),
        shake: shake.as_deref(),
    };
    let percepts: Vec<Vec<Percept>> = if opts.deterministic {
        times.iter().enumerate().map(|(k, &t)| perceiver.frame(k, t)).collect()
    } else {
        times.par_iter().enumerate().map(|(k, &t)| perceiver.frame(k, t)).collect()
    };

    let mut requests = scenario.id_requests.clone();
    requests.sort_unstable();
    let mut requests = requests.into_iter().peekable();
    let mut events = Vec::new();
    let mut commands = Vec::new();
    for (k, &t) in times.iter().enumerate() {
        let at = |source| PipelineError::Attention { timestamp: t, source };
        let mut batch = Vec::new();
        let mut seen = BTreeSet::new();
        for p in &percepts[k] {
            if let Some((pose, bearing)) = &p.pose {
                seen.insert(p.track_id);
                if let Some(e) = attention.update(p.track_id, pose, *bearing, p.label.clone(), t).map_err(at)? {
                    batch.push(e);
                }
            }
        }
        let missing: Vec<u32> = attention.tracks().filter(|id| !seen.contains(id)).collect();
        for id in missing {
            if let Some(e) = attention.mark_absent(id, t).map_err(at)? {
                batch.push(e);
            }
        }
        batch.sort_by_key(|e| match e {
            CueEvent::GazeStart { track_id, .. } | CueEvent::GazeEnd { track_id, .. } => *track_id,
            CueEvent::IdSnapshot { .. } => u32::MAX,
        });
        if !batch.is_empty() {
            let gazers = attention.active_gazers().len();
            commands.extend(arbiter.on_gaze_events(t, &batch, gazers));
            events.extend(batch);
        }
        while requests.next_if(|&r| r <= t).is_some() {
            let people = percepts[k]
                .iter()
                .filter_map(|p| {
                    p.pose.map(|(_, bearing)| SnapshotEntry {
                        track_id: p.track_id,
                        identity: p.label.clone(),
                        bearing,
                    })
                })
                .collect();
            let snapshot = CueEvent::id_snapshot(t, people);
            if let CueEvent::IdSnapshot { people, .. } = &snapshot {
                commands.extend(arbiter.on_id_request(t, people));
            }
            events.push(snapshot);
        }
    }
    let elapsed = started.elapsed().as_secs_f64();

    let truth = ground_truth_events(scenario, &model, &config.attention, &arbiter_cfg, opts.variant);
    let mut bins = Tally::default();
    let mut rank1 = Tally::default();
    let mut rejection = Tally::default();
    for p in percepts.iter().flatten() {
        if let Some(h) = p.bin_hit {
            bins.record(h);
        }
        if let Some(h) = p.rank1_hit {
            rank1.record(h);
        }
        if let Some(h) = p.rejected {
            rejection.record(h);
        }
    }
    let predicted = intervals_from_events(&events, scenario.duration);
    let reference = intervals_from_events(&truth.events, scenario.duration);
    let score = GazeScore::of(&predicted, &reference);
    let lat = latencies(&predicted, &reference, &truth.contacts);
    let report = MetricsReport {
        frames: times.len(),
        detections: percepts.iter().map(Vec::len).sum(),
        yaw_bin_accuracy: bins.fraction(),
        id_rank1: rank1.fraction(),
        unknown_rejection_rate: rejection.fraction(),
        gaze_event_precision: score.precision(),
        gaze_event_recall: score.recall(),
        mean_gaze_latency_ms: (!lat.is_empty()).then(|| lat.iter().sum::<u64>() as f64 / lat.len() as f64),
        throughput_fps: (elapsed > 0.0).then(|| times.len() as f64 / elapsed),
    };
    Ok(RunOutput {
        events,
        commands,
        truth,
        report,
    })
}

/// Writes `events.log`, `commands.log`, the oracle's `truth_events.log` and
/// `truth_commands.log`, and `report.txt` into `dir`.
pub fn write_outputs(out: &RunOutput, dir: &Path) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("events.log"), render_events(&out.events))?;
    fs::write(dir.join("commands.log"), render_commands(&out.commands))?;
    fs::write(dir.join("truth_events.log"), render_events(&out.truth.events))?;
    fs::write(dir.join("truth_commands.log"), render_commands(&out.truth.commands))?;
    fs::write(dir.join("report.txt"), out.report.to_key_values())?;
    Ok(())
}
