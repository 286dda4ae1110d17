//! Pose from 2D-3D correspondences in ray space.
//!
//! The observed landmarks are lifted to unit rays through the fisheye model,
//! a linear estimate is taken from the null space of the ray cross-product
//! constraints, and Gauss-Newton then minimises the tangent-plane angular
//! error of each model point against its ray.

use nalgebra::{DMatrix, Matrix3, Matrix6, Rotation3, Vector3, Vector6, SVD};

use super::PoseError;

pub const MAX_ITERATIONS: usize = 50;
pub const STEP_TOLERANCE: f64 = 1e-8;
/// Consecutive non-improving iterations tolerated before giving up.
pub const STALL_LIMIT: usize = 10;
/// Step halvings tried when a Gauss-Newton step raises the cost.
const MAX_HALVINGS: usize = 30;

#[derive(Debug, Clone, Copy)]
pub struct RigidPose {
    pub rotation: Rotation3<f64>,
    pub translation: Vector3<f64>,
}

impl RigidPose {
    pub fn transform(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Solution {
    pub pose: RigidPose,
    /// RMS angle between each ray and its transformed model point, radians.
    pub rms_angle: f64,
    pub iterations: usize,
}

/// Two unit vectors completing `b` to an orthonormal basis.
fn tangent_basis(b: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let helper = if b.x.abs() < 0.9 { Vector3::x() } else { Vector3::y() };
    let e1 = b.cross(&helper).normalize();
    let e2 = b.cross(&e1);
    (e1, e2)
}

/// Linear initialisation from the constraints `ray × (M [X; 1]) = 0`.
pub fn linear_pose(rays: &[Vector3<f64>], model: &[Vector3<f64>]) -> Result<RigidPose, PoseError> {
    let n = rays.len();
    if n < 6 {
        return Err(PoseError::DegenerateConfiguration);
    }
    // condition the model coordinates
    let centroid = model.iter().fold(Vector3::zeros(), |a, p| a + p) / n as f64;
    let spread = model.iter().map(|p| (p - centroid).norm()).sum::<f64>() / n as f64;
    if spread < 1e-9 {
        return Err(PoseError::DegenerateConfiguration);
    }

    let mut a = DMatrix::<f64>::zeros(3 * n, 12);
    for (k, (b, x)) in rays.iter().zip(model).enumerate() {
        let xn = (x - centroid) / spread;
        let xh = [xn.x, xn.y, xn.z, 1.0];
        for j in 0..4 {
            // row block for each component of b × p, with p_i = m_i · xh
            a[(3 * k, 8 + j)] = b.y * xh[j];
            a[(3 * k, 4 + j)] = -b.z * xh[j];
            a[(3 * k + 1, j)] = b.z * xh[j];
            a[(3 * k + 1, 8 + j)] = -b.x * xh[j];
            a[(3 * k + 2, 4 + j)] = b.x * xh[j];
            a[(3 * k + 2, j)] = -b.y * xh[j];
        }
    }
    let svd = SVD::new(a, false, true);
    let v_t = svd.v_t.ok_or(PoseError::DegenerateConfiguration)?;
    let sv = &svd.singular_values;
    let (mut imin, mut smin) = (0, f64::INFINITY);
    let mut second = f64::INFINITY;
    for (i, &s) in sv.iter().enumerate() {
        if s < smin {
            second = smin;
            smin = s;
            imin = i;
        } else if s < second {
            second = s;
        }
    }
    // a second near-null direction means the points do not pin the pose
    if second <= 1e-9 * sv.max() {
        return Err(PoseError::DegenerateConfiguration);
    }
    let m = v_t.row(imin);
    let mut lin = Matrix3::new(m[0], m[1], m[2], m[4], m[5], m[6], m[8], m[9], m[10]);
    let mut col = Vector3::new(m[3], m[7], m[11]);
    // the model centroid must sit in front of the camera
    let mean_ray = rays.iter().fold(Vector3::zeros(), |a, b| a + b);
    if col.dot(&mean_ray) < 0.0 {
        lin = -lin;
        col = -col;
    }
    let lsvd = lin.svd(true, true);
    let (u, vt) = (lsvd.u.unwrap(), lsvd.v_t.unwrap());
    let mut r = u * vt;
    if r.determinant() < 0.0 {
        // near-degenerate linear solution; flip the weakest axis
        let mut u2 = u;
        let weakest = lsvd
            .singular_values
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap();
        u2.column_mut(weakest).neg_mut();
        r = u2 * vt;
    }
    let lambda = lsvd.singular_values.mean();
    if lambda <= 0.0 {
        return Err(PoseError::DegenerateConfiguration);
    }
    // the null vector is mu * [spread R | R c + t] with lambda = mu * spread
    let rotation = Rotation3::from_matrix_unchecked(r);
    let translation = col * spread / lambda - rotation * centroid;
    Ok(RigidPose {
        rotation,
        translation,
    })
}

struct Residuals {
    cost: f64,
    jtj: Matrix6<f64>,
    jtr: Vector6<f64>,
}

fn evaluate(
    pose: &RigidPose,
    rays: &[Vector3<f64>],
    bases: &[(Vector3<f64>, Vector3<f64>)],
    model: &[Vector3<f64>],
    with_jacobian: bool,
) -> Option<Residuals> {
    let mut cost = 0.0;
    let mut jtj = Matrix6::zeros();
    let mut jtr = Vector6::zeros();
    for ((b, (e1, e2)), x) in rays.iter().zip(bases).zip(model) {
        let rx = pose.rotation * x;
        let p = rx + pose.translation;
        let depth = b.dot(&p);
        if depth <= 0.0 {
            return None;
        }
        let u = e1.dot(&p) / depth;
        let v = e2.dot(&p) / depth;
        cost += u * u + v * v;
        if !with_jacobian {
            continue;
        }
        let du_dp = (e1 - b * u) / depth;
        let dv_dp = (e2 - b * v) / depth;
        // dp/dω = -[Rx]×, dp/dt = I
        for (g, r) in [(du_dp, u), (dv_dp, v)] {
            let rot = rx.cross(&g); // gᵀ(-[Rx]×) = (Rx × g)ᵀ
            let row = Vector6::new(rot.x, rot.y, rot.z, g.x, g.y, g.z);
            jtj += row * row.transpose();
            jtr += row * r;
        }
    }
    Some(Residuals { cost, jtj, jtr })
}

/// Gauss-Newton refinement starting from `init`.
pub fn refine(
    init: RigidPose,
    rays: &[Vector3<f64>],
    model: &[Vector3<f64>],
) -> Result<Solution, PoseError> {
    let bases: Vec<_> = rays.iter().map(tangent_basis).collect();
    let mut pose = init;
    let mut current = evaluate(&pose, rays, &bases, model, true).ok_or(PoseError::DegenerateConfiguration)?;
    let mut stalled = 0;
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let chol = current.jtj.cholesky().ok_or(PoseError::DegenerateConfiguration)?;
        let step = -chol.solve(&current.jtr);
        if !step.iter().all(|v| v.is_finite()) {
            return Err(PoseError::DegenerateConfiguration);
        }
        let moved = |scale: f64| {
            let dw = Vector3::new(step[0], step[1], step[2]) * scale;
            let dt = Vector3::new(step[3], step[4], step[5]) * scale;
            RigidPose {
                rotation: Rotation3::new(dw) * pose.rotation,
                translation: pose.translation + dt,
            }
        };
        // full Gauss-Newton step unless it overshoots; then halve it
        let mut accepted = None;
        let mut scale = 1.0;
        for _ in 0..MAX_HALVINGS {
            let candidate = moved(scale);
            if let Some(next) = evaluate(&candidate, rays, &bases, model, true) {
                if next.cost < current.cost || scale == 1.0 && accepted.is_none() {
                    let improved = next.cost < current.cost;
                    accepted = Some((candidate, next));
                    if improved {
                        break;
                    }
                }
            }
            scale *= 0.5;
        }
        match accepted {
            Some((candidate, next)) => {
                if next.cost >= current.cost {
                    stalled += 1;
                } else {
                    stalled = 0;
                }
                pose = candidate;
                current = next;
            }
            None => stalled += 1,
        }
        if step.norm() < STEP_TOLERANCE {
            break;
        }
        if stalled >= STALL_LIMIT {
            return Err(PoseError::NoConvergence);
        }
    }
    let mut sq = 0.0;
    for (b, x) in rays.iter().zip(model) {
        let p = pose.transform(x);
        let ang = b.cross(&p).norm().atan2(b.dot(&p));
        sq += ang * ang;
    }
    Ok(Solution {
        pose,
        rms_angle: (sq / rays.len() as f64).sqrt(),
        iterations,
    })
}

/// Linear initialisation followed by Gauss-Newton.
pub fn solve_rays(rays: &[Vector3<f64>], model: &[Vector3<f64>]) -> Result<Solution, PoseError> {
    if rays.len() != model.len() {
        return Err(PoseError::DegenerateConfiguration);
    }
    let init = linear_pose(rays, model)?;
    refine(init, rays, model)
}
