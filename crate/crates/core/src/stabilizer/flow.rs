//! Sparse pyramidal Lucas-Kanade tracking with a forward-backward check.

use super::features::{good_features, CornerParams};
use super::StabilizerError;
use crate::frame::{Frame, PlaneRef};

/// A tracked feature: `from` in the previous frame, `to` in the current one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowPair {
    pub from: [f64; 2],
    pub to: [f64; 2],
    /// Forward-backward round-trip error, px.
    pub residual: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct FlowParams {
    /// Number of pyramid levels including full resolution.
    pub levels: usize,
    /// Odd integration window edge, px.
    pub window: usize,
    pub max_iterations: usize,
    /// Stop iterating once the update is shorter than this, px.
    pub epsilon: f64,
    /// Pairs whose forward-backward error exceeds this are dropped, px.
    pub max_fb_error: f64,
    /// Minimum per-pixel eigenvalue of the window structure tensor.
    pub min_eigen: f64,
    pub corners: CornerParams,
}

impl Default for FlowParams {
    fn default() -> Self {
        Self {
            levels: 3,
            window: 15,
            max_iterations: 20,
            epsilon: 0.01,
            max_fb_error: 1.0,
            min_eigen: 1e-3,
            corners: CornerParams::default(),
        }
    }
}

/// Minimum number of corners needed before tracking is attempted.
pub const MIN_FEATURES: usize = 8;

pub(super) struct Level {
    width: usize,
    height: usize,
    img: Vec<f32>,
    gx: Vec<f32>,
    gy: Vec<f32>,
}

impl Level {
    fn plane<'a>(&self, data: &'a [f32]) -> PlaneRef<'a, f32> {
        PlaneRef {
            width: self.width,
            height: self.height,
            data,
        }
    }
}

fn downsample(src: &[f32], w: usize, h: usize) -> (Vec<f32>, usize, usize) {
    const K: [f32; 5] = [1.0, 4.0, 6.0, 4.0, 1.0];
    let at = |v: isize, n: usize| v.clamp(0, n as isize - 1) as usize;
    let nw = w.div_ceil(2);
    let nh = h.div_ceil(2);
    // horizontal pass at even columns only
    let mut tmp = vec![0f32; nw * h];
    for y in 0..h {
        let row = &src[y * w..(y + 1) * w];
        let out = &mut tmp[y * nw..(y + 1) * nw];
        for (nx, o) in out.iter_mut().enumerate() {
            let x = 2 * nx;
            *o = if x >= 2 && x + 2 < w {
                (row[x - 2] + 4.0 * row[x - 1] + 6.0 * row[x] + 4.0 * row[x + 1] + row[x + 2]) / 16.0
            } else {
                K.iter()
                    .enumerate()
                    .map(|(k, wgt)| wgt * row[at(x as isize + k as isize - 2, w)])
                    .sum::<f32>()
                    / 16.0
            };
        }
    }
    let mut out = vec![0f32; nw * nh];
    for ny in 0..nh {
        let y = (2 * ny) as isize;
        let rows: [&[f32]; 5] = std::array::from_fn(|k| {
            let r = at(y + k as isize - 2, h);
            &tmp[r * nw..(r + 1) * nw]
        });
        for (nx, o) in out[ny * nw..(ny + 1) * nw].iter_mut().enumerate() {
            *o = (rows[0][nx] + 4.0 * rows[1][nx] + 6.0 * rows[2][nx] + 4.0 * rows[3][nx] + rows[4][nx]) / 16.0;
        }
    }
    (out, nw, nh)
}

fn gradients(img: &[f32], w: usize, h: usize) -> (Vec<f32>, Vec<f32>) {
    let mut gx = vec![0f32; w * h];
    let mut gy = vec![0f32; w * h];
    for y in 0..h {
        let up = &img[y.saturating_sub(1) * w..][..w];
        let row = &img[y * w..][..w];
        let down = &img[(y + 1).min(h - 1) * w..][..w];
        let gxr = &mut gx[y * w..][..w];
        let gyr = &mut gy[y * w..][..w];
        for x in 0..w {
            let xm = x.saturating_sub(1);
            let xp = (x + 1).min(w - 1);
            gxr[x] = 0.5 * (row[xp] - row[xm]);
            gyr[x] = 0.5 * (down[x] - up[x]);
        }
    }
    (gx, gy)
}

pub(super) fn build_pyramid(frame: &Frame, levels: usize) -> Vec<Level> {
    let mut out: Vec<Level> = Vec::with_capacity(levels);
    let mut img: Vec<f32> = frame.data().iter().map(|&v| v as f32).collect();
    let (mut w, mut h) = (frame.width(), frame.height());
    for l in 0..levels.max(1) {
        if l > 0 {
            let (next, nw, nh) = downsample(&img, w, h);
            img = next;
            w = nw;
            h = nh;
        }
        let (gx, gy) = gradients(&img, w, h);
        out.push(Level {
            width: w,
            height: h,
            img: img.clone(),
            gx,
            gy,
        });
    }
    out
}

/// Bilinear samples of the `(2 * half + 1)^2` window centred on `c`, row
/// by row. All samples share one fractional offset, so windows clear of the
/// border skip the per-sample clamping.
fn sample_window(plane: &PlaneRef<'_, f32>, c: [f64; 2], half: isize, out: &mut Vec<f64>) {
    out.clear();
    let x0 = c[0].floor();
    let y0 = c[1].floor();
    let (xi, yi) = (x0 as isize, y0 as isize);
    let inside = c[0].is_finite()
        && c[1].is_finite()
        && xi - half >= 0
        && yi - half >= 0
        && xi + half + 1 < plane.width as isize
        && yi + half + 1 < plane.height as isize;
    if !inside {
        for dy in -half..=half {
            for dx in -half..=half {
                out.push(plane.sample(c[0] + dx as f64, c[1] + dy as f64));
            }
        }
        return;
    }
    let (fx, fy) = (c[0] - x0, c[1] - y0);
    let w = plane.width;
    for dy in -half..=half {
        let r0 = (yi + dy) as usize * w;
        let r1 = r0 + w;
        for dx in -half..=half {
            let x = (xi + dx) as usize;
            let p00 = plane.data[r0 + x] as f64;
            let p10 = plane.data[r0 + x + 1] as f64;
            let p01 = plane.data[r1 + x] as f64;
            let p11 = plane.data[r1 + x + 1] as f64;
            let top = p00 + (p10 - p00) * fx;
            let bottom = p01 + (p11 - p01) * fx;
            out.push(top + (bottom - top) * fy);
        }
    }
}

/// Tracks one point from `a` to `b`; returns the tracked position or `None`
/// when the window is untextured or the point leaves the frame.
fn track_point(a: &[Level], b: &[Level], p: [f64; 2], params: &FlowParams) -> Option<[f64; 2]> {
    let half = (params.window / 2) as isize;
    let n = ((2 * half + 1) * (2 * half + 1)) as usize;
    let mut tmpl = Vec::with_capacity(n);
    let mut tgx = Vec::with_capacity(n);
    let mut tgy = Vec::with_capacity(n);
    let mut warped = Vec::with_capacity(n);
    let mut guess = [0f64; 2];

    for l in (0..a.len()).rev() {
        let la = &a[l];
        let lb = &b[l];
        let scale = (1u32 << l) as f64;
        let pl = [p[0] / scale, p[1] / scale];

        sample_window(&la.plane(&la.img), pl, half, &mut tmpl);
        sample_window(&la.plane(&la.gx), pl, half, &mut tgx);
        sample_window(&la.plane(&la.gy), pl, half, &mut tgy);
        let (mut gxx, mut gxy, mut gyy) = (0f64, 0f64, 0f64);
        for (ix, iy) in tgx.iter().zip(&tgy) {
            gxx += ix * ix;
            gxy += ix * iy;
            gyy += iy * iy;
        }
        let det = gxx * gyy - gxy * gxy;
        let min_eig = 0.5 * (gxx + gyy) - (0.25 * (gxx - gyy).powi(2) + gxy * gxy).sqrt();
        if min_eig / (n as f64) < params.min_eigen || det.abs() < f64::EPSILON {
            return None;
        }

        let cur = lb.plane(&lb.img);
        let mut v = [0f64; 2];
        for _ in 0..params.max_iterations {
            let base = [pl[0] + guess[0] + v[0], pl[1] + guess[1] + v[1]];
            sample_window(&cur, base, half, &mut warped);
            let (mut bx, mut by) = (0f64, 0f64);
            for i in 0..n {
                let e = tmpl[i] - warped[i];
                bx += e * tgx[i];
                by += e * tgy[i];
            }
            let sx = (gyy * bx - gxy * by) / det;
            let sy = (gxx * by - gxy * bx) / det;
            v[0] += sx;
            v[1] += sy;
            if sx * sx + sy * sy < params.epsilon * params.epsilon {
                break;
            }
        }
        guess = [guess[0] + v[0], guess[1] + v[1]];
        if l > 0 {
            guess = [guess[0] * 2.0, guess[1] * 2.0];
        }
    }

    let q = [p[0] + guess[0], p[1] + guess[1]];
    let (w, h) = (a[0].width as f64, a[0].height as f64);
    if !q[0].is_finite() || !q[1].is_finite() || q[0] < -1.0 || q[1] < -1.0 || q[0] > w || q[1] > h {
        return None;
    }
    Some(q)
}

/// Detects corners in `prev` and tracks them into `cur`.
pub fn track_flow(
    prev: &Frame,
    cur: &Frame,
    max_features: usize,
    params: &FlowParams,
) -> Result<Vec<FlowPair>, StabilizerError> {
    if prev.width() != cur.width() || prev.height() != cur.height() {
        return Err(StabilizerError::DimensionMismatch {
            prev: (prev.width(), prev.height()),
            cur: (cur.width(), cur.height()),
        });
    }
    if max_features < MIN_FEATURES {
        return Err(StabilizerError::InvalidParameter("max_features must be at least 8"));
    }
    let pa = build_pyramid(prev, params.levels);
    let pb = build_pyramid(cur, params.levels);
    track_pyramids(prev, &pa, &pb, max_features, params)
}

/// [`track_flow`] on pyramids that are already built; `pa` must belong to
/// `prev`.
pub(super) fn track_pyramids(
    prev: &Frame,
    pa: &[Level],
    pb: &[Level],
    max_features: usize,
    params: &FlowParams,
) -> Result<Vec<FlowPair>, StabilizerError> {
    let corners = good_features(prev, max_features, &params.corners);
    if corners.len() < MIN_FEATURES {
        return Err(StabilizerError::InsufficientTexture { found: corners.len() });
    }
    let mut pairs = Vec::with_capacity(corners.len());
    for p in corners {
        let Some(q) = track_point(pa, pb, p, params) else {
            continue;
        };
        let Some(back) = track_point(pb, pa, q, params) else {
            continue;
        };
        let fb = ((back[0] - p[0]).powi(2) + (back[1] - p[1]).powi(2)).sqrt();
        if fb > params.max_fb_error {
            continue;
        }
        pairs.push(FlowPair {
            from: p,
            to: q,
            residual: fb,
        });
    }
    Ok(pairs)
}
