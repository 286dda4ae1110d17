use crate::frame::{to_u8, Frame};
use crate::headpose::{LandmarkObservation, OUTER_EYE_LEFT, OUTER_EYE_RIGHT};
use crate::stabilizer::SimilarityTransform;

use super::FaceIdError;

pub const CHIP_SIZE: usize = 128;
/// Canonical chip positions of the two outer eye corners.
pub const CHIP_EYE_LEFT: [f64; 2] = [32.0, 64.0];
pub const CHIP_EYE_RIGHT: [f64; 2] = [96.0, 64.0];

/// A geometrically normalised face crop with its landmarks in chip pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct FaceChip {
    pub image: Frame,
    pub landmarks: Vec<[f64; 2]>,
}

/// Similarity taking two source points onto two destination points.
pub fn similarity_from_two(src: [[f64; 2]; 2], dst: [[f64; 2]; 2]) -> Option<SimilarityTransform> {
    let (sx, sy) = (src[1][0] - src[0][0], src[1][1] - src[0][1]);
    let (dx, dy) = (dst[1][0] - dst[0][0], dst[1][1] - dst[0][1]);
    let den = sx * sx + sy * sy;
    if den < 1e-12 {
        return None;
    }
    // (a + ib) * (sx + i sy) = dx + i dy
    let a = (dx * sx + dy * sy) / den;
    let b = (dy * sx - dx * sy) / den;
    let tx = dst[0][0] - (a * src[0][0] - b * src[0][1]);
    let ty = dst[0][1] - (b * src[0][0] + a * src[0][1]);
    Some(SimilarityTransform::from_linear(a, b, tx, ty))
}

/// The transform from frame pixels to chip pixels for an observation.
pub fn chip_transform(obs: &LandmarkObservation) -> Result<SimilarityTransform, FaceIdError> {
    let l = obs.point(OUTER_EYE_LEFT);
    let r = obs.point(OUTER_EYE_RIGHT);
    if (l[0] - r[0]).hypot(l[1] - r[1]) < 2.0 {
        return Err(FaceIdError::DegenerateLandmarks);
    }
    similarity_from_two([l, r], [CHIP_EYE_LEFT, CHIP_EYE_RIGHT]).ok_or(FaceIdError::DegenerateLandmarks)
}

/// Warps the face onto the canonical 128x128 chip.
pub fn normalize_face(frame: &Frame, obs: &LandmarkObservation) -> Result<FaceChip, FaceIdError> {
    let (w, h) = (frame.width() as f64, frame.height() as f64);
    for i in [OUTER_EYE_LEFT, OUTER_EYE_RIGHT] {
        let p = obs.point(i);
        if p[0] < 0.0 || p[1] < 0.0 || p[0] > w - 1.0 || p[1] > h - 1.0 {
            return Err(FaceIdError::EyeOutsideFrame);
        }
    }
    let to_chip = chip_transform(obs)?;
    let from_chip = to_chip.inverse();
    let image = Frame::from_fn(CHIP_SIZE, CHIP_SIZE, frame.timestamp(), |x, y| {
        let s = from_chip.apply([x as f64, y as f64]);
        to_u8(frame.sample(s[0], s[1]))
    })
    .expect("chip geometry is valid");
    let landmarks = obs.points().iter().map(|&p| to_chip.apply(p)).collect();
    Ok(FaceChip { image, landmarks })
}
