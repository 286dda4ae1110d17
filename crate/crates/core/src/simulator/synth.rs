use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::Scenario;
use crate::headpose::{rotation::from_euler_deg, CameraIntrinsics, FaceModel3D, LandmarkObservation};

/// Ground truth for one visible participant at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneEntry {
    pub track_id: u32,
    pub name: Option<String>,
    pub bearing: f64,
    pub distance: f64,
    pub yaw: f64,
}

/// Full head pose for synthesis; the scenario format only scripts yaw.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FacePlacement {
    pub bearing: f64,
    pub distance: f64,
    pub yaw: f64,
    pub pitch: f64,
    pub roll: f64,
}

impl FacePlacement {
    pub fn new(bearing: f64, distance: f64, yaw: f64) -> Self {
        Self {
            bearing,
            distance,
            yaw,
            pitch: 0.0,
            roll: 0.0,
        }
    }

    /// Camera-frame nose-tip position; faces sit at camera height.
    pub fn position(&self) -> Vector3<f64> {
        let b = self.bearing.to_radians();
        Vector3::new(b.sin(), 0.0, b.cos()) * self.distance
    }

    pub fn camera_points(&self, model: &FaceModel3D) -> Vec<Vector3<f64>> {
        let r = from_euler_deg(self.yaw, self.pitch, self.roll);
        let t = self.position();
        model.points().iter().map(|p| r * p + t).collect()
    }
}

/// Noise-free landmark pixels, or `None` if any point leaves the field or
/// the image.
pub fn project_face(camera: &CameraIntrinsics, model: &FaceModel3D, placement: &FacePlacement) -> Option<Vec<[f64; 2]>> {
    let (w, h) = (camera.width as f64, camera.height as f64);
    placement
        .camera_points(model)
        .iter()
        .map(|p| {
            if p.z <= 0.0 || !camera.in_field(p) {
                return None;
            }
            let px = camera.project(p);
            (px[0] >= 0.0 && px[1] >= 0.0 && px[0] <= w - 1.0 && px[1] <= h - 1.0).then_some(px)
        })
        .collect()
}

/// Deterministic stream for one (seed, frame, track) triple.
pub fn noise_rng(seed: u64, frame: u64, track: u32) -> ChaCha8Rng {
    let mut x = seed ^ 0x5153_4f43_4941_4c31;
    for v in [frame, track as u64] {
        x = (x ^ v).wrapping_mul(0x9e37_79b9_7f4a_7c15);
        x ^= x >> 31;
    }
    ChaCha8Rng::seed_from_u64(x)
}

pub fn add_noise(points: &mut [[f64; 2]], sigma: f64, rng: &mut ChaCha8Rng) {
    if sigma <= 0.0 {
        return;
    }
    let n = Normal::new(0.0, sigma).expect("finite sigma");
    for p in points {
        p[0] += n.sample(rng);
        p[1] += n.sample(rng);
    }
}

/// Participants present at `t` whose whole face projects inside the image.
pub fn scene_state(s: &Scenario, model: &FaceModel3D, t: u64) -> Vec<SceneEntry> {
    s.participants
        .iter()
        .enumerate()
        .filter(|(_, p)| p.present(t))
        .filter_map(|(i, p)| {
            let e = SceneEntry {
                track_id: i as u32,
                name: p.name.clone(),
                bearing: p.bearing_at(t),
                distance: p.distance_at(t),
                yaw: p.yaw_at(t),
            };
            project_face(&s.camera, model, &FacePlacement::new(e.bearing, e.distance, e.yaw)).map(|_| e)
        })
        .collect()
}

/// A synthesized detection together with its truth.
#[derive(Debug, Clone)]
pub struct SyntheticFace {
    pub truth: SceneEntry,
    pub observation: LandmarkObservation,
    /// Landmarks before noise.
    pub clean: Vec<[f64; 2]>,
}

/// Landmarks for every visible participant in frame `frame` at time `t`.
pub fn synthesize_observations(s: &Scenario, model: &FaceModel3D, t: u64, frame: u64, seed: u64) -> Vec<SyntheticFace> {
    scene_state(s, model, t)
        .into_iter()
        .filter_map(|truth| {
            let placement = FacePlacement::new(truth.bearing, truth.distance, truth.yaw);
            let clean = project_face(&s.camera, model, &placement)?;
            let mut pts = clean.clone();
            add_noise(&mut pts, s.noise, &mut noise_rng(seed, frame, truth.track_id));
            let observation = LandmarkObservation::from_points(truth.track_id, pts, t).ok()?;
            Some(SyntheticFace {
                truth,
                observation,
                clean,
            })
        })
        .collect()
}
