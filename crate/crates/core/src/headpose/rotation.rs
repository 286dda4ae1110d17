//! Euler convention shared by the solver and the simulator.
//!
//! A face with yaw = pitch = roll = 0 faces the camera squarely: its +z
//! (out of the face) points along camera -z and its +y (up) along camera -y.
//! The face-to-camera rotation is
//!
//! `R = Ry(yaw) * Rx(pitch) * Rz(roll) * R0`, with `R0 = diag(1, -1, -1)`,
//!
//! where `Ry`, `Rx`, `Rz` rotate about the camera's vertical, horizontal and
//! optical axes. With this convention a face at bearing `b` whose normal
//! points at the camera has yaw equal to `b`.

use nalgebra::{Matrix3, Rotation3, Vector3};

fn base() -> Matrix3<f64> {
    Matrix3::from_diagonal(&Vector3::new(1.0, -1.0, -1.0))
}

/// Face-to-camera rotation for Euler angles in degrees.
pub fn from_euler_deg(yaw: f64, pitch: f64, roll: f64) -> Rotation3<f64> {
    let ry = Rotation3::from_axis_angle(&Vector3::y_axis(), yaw.to_radians());
    let rx = Rotation3::from_axis_angle(&Vector3::x_axis(), pitch.to_radians());
    let rz = Rotation3::from_axis_angle(&Vector3::z_axis(), roll.to_radians());
    let m = (ry * rx * rz).matrix() * base();
    Rotation3::from_matrix_unchecked(m)
}

/// Inverse of [`from_euler_deg`]: returns (yaw, pitch, roll) in degrees.
pub fn to_euler_deg(r: &Rotation3<f64>) -> (f64, f64, f64) {
    let m = r.matrix() * base();
    let pitch = (-m[(1, 2)]).clamp(-1.0, 1.0).asin();
    let yaw = m[(0, 2)].atan2(m[(2, 2)]);
    let roll = m[(1, 0)].atan2(m[(1, 1)]);
    (yaw.to_degrees(), pitch.to_degrees(), roll.to_degrees())
}
