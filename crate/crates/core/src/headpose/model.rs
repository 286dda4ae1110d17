//! The fixed 3D head model the landmarks are matched against.

use nalgebra::Vector3;

use super::PoseError;

pub const LANDMARK_COUNT: usize = 68;
/// Jaw-line landmarks; their 3D location depends on the viewpoint.
pub const CONTOUR: std::ops::Range<usize> = 0..17;
/// Landmarks used for pose and appearance: brows, nose, eyes, mouth.
pub const INTERIOR: std::ops::Range<usize> = 17..68;
pub const INTERIOR_COUNT: usize = 51;
pub const NOSE_TIP: usize = 30;
/// Outer corner of the eye on the image-left side of a frontal face.
pub const OUTER_EYE_LEFT: usize = 36;
/// Outer corner of the eye on the image-right side of a frontal face.
pub const OUTER_EYE_RIGHT: usize = 45;

const BUNDLED: &str = include_str!("../../data/face_model_68.txt");

/// Mirror partner of each landmark under x-negation.
pub fn mirror_index(i: usize) -> usize {
    match i {
        0..=16 => 16 - i,
        17..=26 => 43 - i,
        27..=30 => i,
        31..=35 => 66 - i,
        36..=39 => 81 - i,
        40 | 41 => 87 - i,
        42..=45 => 81 - i,
        46 | 47 => 87 - i,
        48..=54 => 102 - i,
        55..=59 => 114 - i,
        60..=64 => 124 - i,
        65..=67 => 132 - i,
        _ => panic!("landmark index {i} out of range"),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FaceModel3D {
    points: Vec<Vector3<f64>>,
}

impl FaceModel3D {
    /// The model shipped with the crate.
    pub fn canonical() -> Self {
        Self::parse(BUNDLED).expect("bundled face model is valid")
    }

    pub fn from_points(points: Vec<Vector3<f64>>) -> Result<Self, PoseError> {
        if points.len() != LANDMARK_COUNT {
            return Err(PoseError::BadModel(format!("expected 68 points, got {}", points.len())));
        }
        if points.iter().any(|p| !p.iter().all(|v| v.is_finite())) {
            return Err(PoseError::BadModel("non-finite coordinate".into()));
        }
        for i in 0..LANDMARK_COUNT {
            let j = mirror_index(i);
            let p = points[i];
            let q = points[j];
            let mirrored = Vector3::new(-q.x, q.y, q.z);
            if (p - mirrored).norm() > 1.0 {
                return Err(PoseError::BadModel(format!(
                    "landmarks {i} and {j} are not mirror images within 1 mm"
                )));
            }
        }
        Ok(Self { points })
    }

    /// Parses `index x y z` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, PoseError> {
        let mut slots: Vec<Option<Vector3<f64>>> = vec![None; LANDMARK_COUNT];
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: &str| PoseError::BadModel(format!("line {}: {msg}", lineno + 1));
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 4 {
                return Err(err("expected `index x y z`"));
            }
            let idx: usize = fields[0].parse().map_err(|_| err("bad index"))?;
            if idx >= LANDMARK_COUNT {
                return Err(err("index out of range"));
            }
            let mut v = [0.0; 3];
            for (k, f) in fields[1..].iter().enumerate() {
                v[k] = f.parse().map_err(|_| err("bad coordinate"))?;
            }
            if slots[idx].replace(Vector3::new(v[0], v[1], v[2])).is_some() {
                return Err(err("duplicate index"));
            }
        }
        let points = slots
            .into_iter()
            .enumerate()
            .map(|(i, p)| p.ok_or_else(|| PoseError::BadModel(format!("missing landmark {i}"))))
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_points(points)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (i, p) in self.points.iter().enumerate() {
            s.push_str(&format!("{i} {} {} {}\n", p.x, p.y, p.z));
        }
        s
    }

    pub fn points(&self) -> &[Vector3<f64>] {
        &self.points
    }

    pub fn point(&self, i: usize) -> Vector3<f64> {
        self.points[i]
    }
}
