//! Head orientation, bearing and yaw classification from 68 facial landmarks.

mod camera;
mod model;
pub mod rotation;
mod solver;

use nalgebra::Vector3;
use thiserror::Error;

pub use camera::{CameraIntrinsics, DEFAULT_FOV_DEG};
pub use model::{
    mirror_index, FaceModel3D, CONTOUR, INTERIOR, INTERIOR_COUNT, LANDMARK_COUNT, NOSE_TIP,
    OUTER_EYE_LEFT, OUTER_EYE_RIGHT,
};
pub use solver::{linear_pose, refine, solve_rays, RigidPose, Solution};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum PoseError {
    #[error("point is {angle_deg:.2}° off axis, outside the field of view")]
    OutOfField { angle_deg: f64 },
    #[error("non-finite image coordinate")]
    NonFinite,
    #[error("invalid camera intrinsics")]
    InvalidIntrinsics,
    #[error("invalid landmark observation: {0}")]
    InvalidObservation(String),
    #[error("invalid face model: {0}")]
    BadModel(String),
    #[error("correspondences do not determine a pose")]
    DegenerateConfiguration,
    #[error("pose refinement did not converge")]
    NoConvergence,
}

/// Axis-aligned box in pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    pub x: f64,
    pub y: f64,
    pub width: f64,
    pub height: f64,
}

impl BoundingBox {
    pub fn contains(&self, p: [f64; 2]) -> bool {
        p[0] >= self.x && p[1] >= self.y && p[0] <= self.x + self.width && p[1] <= self.y + self.height
    }

    /// Tight box around a point set.
    pub fn around(points: &[[f64; 2]]) -> Self {
        let (mut x0, mut y0, mut x1, mut y1) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in points {
            x0 = x0.min(p[0]);
            y0 = y0.min(p[1]);
            x1 = x1.max(p[0]);
            y1 = y1.max(p[1]);
        }
        Self {
            x: x0,
            y: y0,
            width: x1 - x0,
            height: y1 - y0,
        }
    }
}

/// One detected face at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct LandmarkObservation {
    pub track_id: u32,
    points: Vec<[f64; 2]>,
    pub bbox: BoundingBox,
    pub timestamp: u64,
}

impl LandmarkObservation {
    pub fn new(track_id: u32, points: Vec<[f64; 2]>, bbox: BoundingBox, timestamp: u64) -> Result<Self, PoseError> {
        if points.len() != LANDMARK_COUNT {
            return Err(PoseError::InvalidObservation(format!("{} points, expected 68", points.len())));
        }
        if points.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
            return Err(PoseError::NonFinite);
        }
        let inside = points.iter().filter(|p| bbox.contains(**p)).count();
        if inside < 60 {
            return Err(PoseError::InvalidObservation(format!("bbox holds only {inside} of 68 points")));
        }
        Ok(Self {
            track_id,
            points,
            bbox,
            timestamp,
        })
    }

    /// Observation whose box is the tight hull of its points.
    pub fn from_points(track_id: u32, points: Vec<[f64; 2]>, timestamp: u64) -> Result<Self, PoseError> {
        let bbox = BoundingBox::around(&points);
        Self::new(track_id, points, bbox, timestamp)
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    pub fn point(&self, i: usize) -> [f64; 2] {
        self.points[i]
    }

    /// Applies `f` to every landmark and re-derives the box.
    pub fn map_points(&self, f: impl Fn([f64; 2]) -> [f64; 2]) -> Self {
        let points: Vec<_> = self.points.iter().map(|&p| f(p)).collect();
        Self {
            track_id: self.track_id,
            bbox: BoundingBox::around(&points),
            points,
            timestamp: self.timestamp,
        }
    }
}

/// Head orientation of a face in the camera frame (see [`rotation`]).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeadPose {
    /// Degrees; zero when the face plane is parallel to the image plane.
    pub yaw: f64,
    pub pitch: f64,
    pub roll: f64,
    /// Camera-frame nose-tip position, mm.
    pub translation: [f64; 3],
    pub rms_reprojection: f64,
}

/// Horizontal angle of a face from the optical axis, degrees, positive to
/// the wearer's right.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Bearing(pub f64);

impl Bearing {
    pub fn degrees(self) -> f64 {
        self.0
    }
}

/// Relative yaw class. `Left`/`Right` name the side of the wearer the face
/// is turned towards.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum YawBin {
    FarLeft,
    Left,
    AtWearer,
    Right,
    FarRight,
}

impl YawBin {
    pub const ALL: [YawBin; 5] = [YawBin::FarLeft, YawBin::Left, YawBin::AtWearer, YawBin::Right, YawBin::FarRight];
}

/// Bin edges on |relative yaw|, degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct YawBins {
    pub inner: f64,
    pub outer: f64,
}

impl Default for YawBins {
    fn default() -> Self {
        Self { inner: 22.5, outer: 67.5 }
    }
}

/// Wraps degrees into (-180, 180].
pub fn wrap_deg(a: f64) -> f64 {
    let mut r = a % 360.0;
    if r > 180.0 {
        r -= 360.0;
    } else if r <= -180.0 {
        r += 360.0;
    }
    r
}

/// `yaw - bearing`; zero when the face points at the wearer.
pub fn relative_yaw(pose: &HeadPose, bearing: Bearing) -> f64 {
    wrap_deg(pose.yaw - bearing.0)
}

pub fn classify_relative_yaw(delta: f64, bins: &YawBins) -> YawBin {
    let mag = delta.abs();
    // positive relative yaw turns the face towards the wearer's left
    match (mag <= bins.inner, mag <= bins.outer, delta > 0.0) {
        (true, _, _) => YawBin::AtWearer,
        (false, true, true) => YawBin::Left,
        (false, true, false) => YawBin::Right,
        (false, false, true) => YawBin::FarLeft,
        (false, false, false) => YawBin::FarRight,
    }
}

pub fn classify_yaw(pose: &HeadPose, bearing: Bearing, bins: &YawBins) -> YawBin {
    classify_relative_yaw(relative_yaw(pose, bearing), bins)
}

/// Estimates the head pose of `obs` against `model`, using interior
/// landmarks only.
pub fn solve_pose(obs: &LandmarkObservation, model: &FaceModel3D, intr: &CameraIntrinsics) -> Result<HeadPose, PoseError> {
    intr.validate()?;
    let rays = INTERIOR
        .map(|i| intr.undistort(obs.point(i)))
        .collect::<Result<Vec<_>, _>>()?;
    let pts: Vec<Vector3<f64>> = INTERIOR.map(|i| model.point(i)).collect();
    let sol = solve_rays(&rays, &pts)?;
    let t = sol.pose.translation;
    if t.z <= 0.0 {
        return Err(PoseError::DegenerateConfiguration);
    }
    let (yaw, pitch, roll) = rotation::to_euler_deg(&sol.pose.rotation);
    Ok(HeadPose {
        yaw,
        pitch,
        roll,
        translation: [t.x, t.y, t.z],
        rms_reprojection: sol.rms_angle * intr.focal(),
    })
}

/// Bearing of the ray through the nose-tip landmark.
pub fn bearing_of(obs: &LandmarkObservation, intr: &CameraIntrinsics) -> Result<Bearing, PoseError> {
    let ray = intr.undistort(obs.point(NOSE_TIP))?;
    Ok(Bearing(ray.x.atan2(ray.z).to_degrees()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn project_model(yaw: f64, pitch: f64, roll: f64, t: Vector3<f64>, intr: &CameraIntrinsics) -> LandmarkObservation {
        let model = FaceModel3D::canonical();
        let r = rotation::from_euler_deg(yaw, pitch, roll);
        let pts = model.points().iter().map(|x| intr.project(&(r * x + t))).collect();
        LandmarkObservation::from_points(1, pts, 0).unwrap()
    }

    #[test]
    fn identity_pose_is_recovered() {
        let intr = CameraIntrinsics::default();
        let obs = project_model(0.0, 0.0, 0.0, Vector3::new(0.0, 0.0, 1000.0), &intr);
        let pose = solve_pose(&obs, &FaceModel3D::canonical(), &intr).unwrap();
        assert!(pose.yaw.abs() < 0.1 && pose.pitch.abs() < 0.1 && pose.roll.abs() < 0.1, "{pose:?}");
        assert!((pose.translation[2] - 1000.0).abs() < 1.0);
        assert!(pose.translation[0].abs() < 1.0 && pose.translation[1].abs() < 1.0);
        assert!(pose.rms_reprojection < 1e-3);
    }

    #[test]
    fn nose_bearing_examples() {
        let intr = CameraIntrinsics::default();
        let [cx, cy] = intr.center();
        let mut pts = vec![[cx, cy]; 68];
        let obs = LandmarkObservation::from_points(0, pts.clone(), 0).unwrap();
        assert_eq!(bearing_of(&obs, &intr).unwrap(), Bearing(0.0));

        pts[NOSE_TIP] = [cx + intr.focal() * 30f64.to_radians(), cy];
        let obs = LandmarkObservation::new(0, pts.clone(), BoundingBox::around(&pts), 0).unwrap();
        assert!((bearing_of(&obs, &intr).unwrap().0 - 30.0).abs() < 0.1);

        pts[NOSE_TIP] = [cx + intr.width as f64 / 2.0, cy];
        let obs = LandmarkObservation::new(0, pts.clone(), BoundingBox::around(&pts), 0).unwrap();
        assert!((bearing_of(&obs, &intr).unwrap().0 - 85.0).abs() < 1e-9);
    }

    #[test]
    fn bin_edges_and_ties() {
        let b = YawBins::default();
        assert_eq!(classify_relative_yaw(0.0, &b), YawBin::AtWearer);
        assert_eq!(classify_relative_yaw(22.5, &b), YawBin::AtWearer);
        assert_eq!(classify_relative_yaw(-22.5, &b), YawBin::AtWearer);
        assert_eq!(classify_relative_yaw(22.6, &b), YawBin::Left);
        assert_eq!(classify_relative_yaw(-67.5, &b), YawBin::Right);
        assert_eq!(classify_relative_yaw(67.51, &b), YawBin::FarLeft);
        assert_eq!(classify_relative_yaw(-150.0, &b), YawBin::FarRight);
    }

    #[test]
    fn camera_directed_face_is_at_wearer() {
        let pose = HeadPose {
            yaw: 20.0,
            pitch: 0.0,
            roll: 0.0,
            translation: [0.0, 0.0, 1.0],
            rms_reprojection: 0.0,
        };
        assert_eq!(classify_yaw(&pose, Bearing(20.0), &YawBins::default()), YawBin::AtWearer);
    }

    #[test]
    fn observation_validation() {
        assert!(LandmarkObservation::from_points(0, vec![[0.0, 0.0]; 67], 0).is_err());
        let mut pts = vec![[10.0, 10.0]; 68];
        pts[3] = [f64::NAN, 1.0];
        assert_eq!(LandmarkObservation::from_points(0, pts, 0), Err(PoseError::NonFinite));
        let pts: Vec<[f64; 2]> = (0..68).map(|i| [i as f64, 0.0]).collect();
        let tight = BoundingBox { x: 0.0, y: -1.0, width: 50.0, height: 2.0 };
        assert!(LandmarkObservation::new(0, pts.clone(), tight, 0).is_err());
        let loose = BoundingBox { x: 0.0, y: -1.0, width: 60.0, height: 2.0 };
        assert!(LandmarkObservation::new(0, pts, loose, 0).is_ok());
    }

    #[test]
    fn coplanar_points_are_degenerate() {
        let flat: Vec<Vector3<f64>> = FaceModel3D::canonical()
            .points()
            .iter()
            .map(|p| Vector3::new(p.x, p.y, 0.0))
            .collect();
        let t = Vector3::new(0.0, 0.0, 1000.0);
        let m: Vec<_> = INTERIOR.map(|i| flat[i]).collect();
        let rays: Vec<_> = m.iter().map(|p| (p + t).normalize()).collect();
        assert_eq!(linear_pose(&rays, &m).err(), Some(PoseError::DegenerateConfiguration));
    }
}
