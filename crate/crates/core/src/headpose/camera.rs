//! Equidistant fisheye camera: a ray at angle `theta` from the optical axis
//! lands at radius `r = f * theta` from the image centre.
//!
//! Camera frame: x right, y down, z along the optical axis.

use nalgebra::Vector3;

use super::PoseError;

/// Horizontal field of view of the wearable camera, degrees.
pub const DEFAULT_FOV_DEG: f64 = 170.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraIntrinsics {
    pub width: usize,
    pub height: usize,
    /// Horizontal field of view, degrees.
    pub fov_h: f64,
}

impl Default for CameraIntrinsics {
    /// 5 MP sensor behind a 170° lens.
    fn default() -> Self {
        Self {
            width: 2592,
            height: 1944,
            fov_h: DEFAULT_FOV_DEG,
        }
    }
}

impl CameraIntrinsics {
    pub fn new(width: usize, height: usize, fov_h: f64) -> Result<Self, PoseError> {
        let c = Self { width, height, fov_h };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), PoseError> {
        if !(self.fov_h > 0.0 && self.fov_h <= 180.0) || self.width == 0 || self.height == 0 {
            return Err(PoseError::InvalidIntrinsics);
        }
        Ok(())
    }

    /// Focal scale in px per radian.
    pub fn focal(&self) -> f64 {
        (self.width as f64 / 2.0) / self.half_fov_rad()
    }

    pub fn half_fov_rad(&self) -> f64 {
        (self.fov_h / 2.0).to_radians()
    }

    pub fn center(&self) -> [f64; 2] {
        [self.width as f64 / 2.0, self.height as f64 / 2.0]
    }

    /// Projects a camera-frame point (any non-zero direction) to pixels.
    pub fn project(&self, p: &Vector3<f64>) -> [f64; 2] {
        let [cx, cy] = self.center();
        let rho = p.x.hypot(p.y);
        if rho == 0.0 {
            return [cx, cy];
        }
        let theta = rho.atan2(p.z);
        let r = self.focal() * theta;
        [cx + r * p.x / rho, cy + r * p.y / rho]
    }

    /// Whether a camera-frame direction falls inside the horizontal field.
    pub fn in_field(&self, p: &Vector3<f64>) -> bool {
        let theta = p.x.hypot(p.y).atan2(p.z);
        theta <= self.half_fov_rad()
    }

    /// Inverts the projection to a unit ray.
    pub fn undistort(&self, px: [f64; 2]) -> Result<Vector3<f64>, PoseError> {
        let [cx, cy] = self.center();
        let (dx, dy) = (px[0] - cx, px[1] - cy);
        if !dx.is_finite() || !dy.is_finite() {
            return Err(PoseError::NonFinite);
        }
        let r = dx.hypot(dy);
        let theta = r / self.focal();
        if theta > self.half_fov_rad() * (1.0 + 1e-12) {
            return Err(PoseError::OutOfField {
                angle_deg: theta.to_degrees(),
            });
        }
        if r == 0.0 {
            return Ok(Vector3::z());
        }
        let s = theta.sin() / r;
        Ok(Vector3::new(s * dx, s * dy, theta.cos()))
    }

    pub fn undistort_points(&self, points: &[[f64; 2]]) -> Result<Vec<Vector3<f64>>, PoseError> {
        points.iter().map(|&p| self.undistort(p)).collect()
    }
}
