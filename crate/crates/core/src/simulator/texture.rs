//! Procedural identity textures and jittered background frames.
//!
//! A face texture is a sum of plane waves defined in canonical chip
//! coordinates, so a person's appearance is attached to their landmarks
//! rather than to the image.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::synth::{add_noise, project_face, FacePlacement};
use super::Jitter;
use crate::faceid::{chip_transform, normalize_face, FaceChip};
use crate::frame::{to_u8, Frame};
use crate::headpose::{CameraIntrinsics, FaceModel3D, LandmarkObservation};

/// FNV-1a, used to derive a texture seed from a name.
pub fn name_seed(name: &str) -> u64 {
    name.bytes()
        .fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3))
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Wave {
    kx: f64,
    ky: f64,
    phase: f64,
    amplitude: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentityTexture {
    waves: Vec<Wave>,
}

impl IdentityTexture {
    pub const WAVES: usize = 3;

    pub fn from_seed(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let waves = (0..Self::WAVES)
            .map(|_| {
                let freq = rng.random_range(0.09..0.17);
                let angle = rng.random_range(0.0..std::f64::consts::PI);
                Wave {
                    kx: TAU * freq * angle.cos(),
                    ky: TAU * freq * angle.sin(),
                    phase: rng.random_range(0.0..TAU),
                    amplitude: rng.random_range(32.0..42.0),
                }
            })
            .collect();
        Self { waves }
    }

    pub fn for_name(name: &str) -> Self {
        Self::from_seed(name_seed(name))
    }

    /// Intensity at chip coordinates `(u, v)`.
    pub fn value(&self, u: f64, v: f64) -> f64 {
        128.0
            + self
                .waves
                .iter()
                .map(|w| w.amplitude * (w.kx * u + w.ky * v + w.phase).sin())
                .sum::<f64>()
    }
}

/// A rendered face region and where it sits in the full image.
#[derive(Debug, Clone)]
pub struct FacePatch {
    pub frame: Frame,
    pub origin: [usize; 2],
}

impl FacePatch {
    /// `obs` re-expressed in patch pixel coordinates.
    pub fn localize(&self, obs: &LandmarkObservation) -> LandmarkObservation {
        let [x0, y0] = self.origin;
        obs.map_points(|p| [p[0] - x0 as f64, p[1] - y0 as f64])
    }
}

/// Renders the face of `texture` around the noise-free landmarks `truth`,
/// clipped to an image of `image_size`. Pixel noise `sigma` is added when
/// positive.
pub fn render_face(
    texture: &IdentityTexture,
    truth: &LandmarkObservation,
    image_size: (usize, usize),
    sigma: f64,
    rng: &mut ChaCha8Rng,
) -> Option<FacePatch> {
    let to_chip = chip_transform(truth).ok()?;
    let b = truth.bbox;
    let margin = 0.3 * b.width.max(b.height);
    let x0 = (b.x - margin).floor().max(0.0) as usize;
    let y0 = (b.y - margin).floor().max(0.0) as usize;
    let x1 = ((b.x + b.width + margin).ceil() as usize).min(image_size.0.saturating_sub(1));
    let y1 = ((b.y + b.height + margin).ceil() as usize).min(image_size.1.saturating_sub(1));
    let (w, h) = (x1.checked_sub(x0)? + 1, y1.checked_sub(y0)? + 1);
    let noise = (sigma > 0.0).then(|| Normal::new(0.0, sigma).expect("finite sigma"));
    let frame = Frame::from_fn(w.max(32), h.max(32), truth.timestamp, |x, y| {
        let q = to_chip.apply([(x0 + x) as f64, (y0 + y) as f64]);
        let n = noise.map_or(0.0, |n| n.sample(rng));
        to_u8(texture.value(q[0], q[1]) + n)
    })
    .ok()?;
    Some(FacePatch { frame, origin: [x0, y0] })
}

/// Renders `texture` at `placement`, detects its landmarks with
/// `landmark_sigma` px of noise and normalises the face onto a chip.
pub fn sample_chip(
    texture: &IdentityTexture,
    camera: &CameraIntrinsics,
    model: &FaceModel3D,
    placement: &FacePlacement,
    landmark_sigma: f64,
    rng: &mut ChaCha8Rng,
) -> Option<FaceChip> {
    let clean = project_face(camera, model, placement)?;
    let truth = LandmarkObservation::from_points(0, clean.clone(), 0).ok()?;
    let patch = render_face(texture, &truth, (camera.width, camera.height), 0.0, rng)?;
    let mut noisy = clean;
    add_noise(&mut noisy, landmark_sigma, rng);
    let obs = LandmarkObservation::from_points(0, noisy, 0).ok()?;
    normalize_face(&patch.frame, &patch.localize(&obs)).ok()
}

/// Adds Gaussian pixel noise to a frame.
pub fn add_pixel_noise(frame: &Frame, sigma: f64, rng: &mut ChaCha8Rng) -> Frame {
    if sigma <= 0.0 {
        return frame.clone();
    }
    let n = Normal::new(0.0, sigma).expect("finite sigma");
    let data = frame.data().iter().map(|&v| to_u8(v as f64 + n.sample(rng))).collect();
    Frame::new(frame.width(), frame.height(), data, frame.timestamp()).expect("same geometry")
}

pub const BACKGROUND_SIZE: (usize, usize) = (640, 480);

/// Camera displacement of frame `k` under `jitter`, px.
pub fn jitter_offset(jitter: &Jitter, k: usize) -> [f64; 2] {
    let a = TAU * k as f64 / jitter.period;
    [jitter.amplitude * a.sin(), jitter.amplitude * a.cos()]
}

/// Static textured scene used to exercise the stabilizer.
pub fn background_value(x: f64, y: f64) -> f64 {
    let cells = ((x / 23.0).floor() as i64 * 7 + (y / 19.0).floor() as i64 * 13).rem_euclid(5) as f64;
    128.0 + 40.0 * (0.071 * x + 0.043 * y).sin() * (0.052 * x - 0.089 * y).cos()
        + 25.0 * (0.13 * x).sin() * (0.11 * y).sin()
        + 8.0 * (cells - 2.0)
}

/// Background frame as seen through a camera displaced by `offset`.
///
/// Equal to sampling [`background_value`] at `(x - offset[0], y - offset[1])`
/// up to rounding; the angle-sum identities split every term into per-column
/// and per-row tables.
pub fn background_frame(offset: [f64; 2], timestamp: u64) -> Frame {
    let (w, h) = BACKGROUND_SIZE;
    let xs: Vec<f64> = (0..w).map(|x| x as f64 - offset[0]).collect();
    let ys: Vec<f64> = (0..h).map(|y| y as f64 - offset[1]).collect();
    let table = |v: &[f64], k: f64| -> (Vec<f64>, Vec<f64>) { v.iter().map(|&u| (k * u).sin_cos()).unzip() };
    let (sx1, cx1) = table(&xs, 0.071);
    let (sy1, cy1) = table(&ys, 0.043);
    let (sx2, cx2) = table(&xs, 0.052);
    let (sy2, cy2) = table(&ys, 0.089);
    let (sx3, _) = table(&xs, 0.13);
    let (sy3, _) = table(&ys, 0.11);
    let cx: Vec<i64> = xs.iter().map(|&u| (u / 23.0).floor() as i64 * 7).collect();
    let cy: Vec<i64> = ys.iter().map(|&u| (u / 19.0).floor() as i64 * 13).collect();
    let mut data = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            // sin(a + b) and cos(c - d)
            let first = sx1[x] * cy1[y] + cx1[x] * sy1[y];
            let second = cx2[x] * cy2[y] + sx2[x] * sy2[y];
            let cells = (cx[x] + cy[y]).rem_euclid(5) as f64;
            let v = 128.0 + 40.0 * first * second + 25.0 * sx3[x] * sy3[y] + 8.0 * (cells - 2.0);
            data.push(to_u8(v));
        }
    }
    Frame::new(w, h, data, timestamp).expect("fixed geometry")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textures_are_deterministic_per_name() {
        assert_eq!(IdentityTexture::for_name("Anna"), IdentityTexture::for_name("Anna"));
        assert_ne!(IdentityTexture::for_name("Anna"), IdentityTexture::for_name("Ben"));
    }

    #[test]
    fn jitter_has_stated_amplitude() {
        let j = Jitter { amplitude: 8.0, period: 10.0 };
        for k in 0..10 {
            let [x, y] = jitter_offset(&j, k);
            assert!((x.hypot(y) - 8.0).abs() < 1e-12);
        }
        assert!((jitter_offset(&j, 10)[0] - jitter_offset(&j, 0)[0]).abs() < 1e-9);
    }

    #[test]
    fn tabulated_background_matches_direct_evaluation() {
        let offset = [3.7, -5.2];
        let f = background_frame(offset, 0);
        for (x, y) in [(0, 0), (17, 300), (320, 240), (639, 479), (101, 5)] {
            let direct = background_value(x as f64 - offset[0], y as f64 - offset[1]);
            assert!((f.get(x, y) as f64 - direct.clamp(0.0, 255.0)).abs() <= 0.5 + 1e-9);
        }
    }
}
