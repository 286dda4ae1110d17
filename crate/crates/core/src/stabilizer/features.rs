//! Minimum-eigenvalue ("good features to track") corner selection.

use crate::frame::Frame;

#[derive(Debug, Clone, Copy)]
pub struct CornerParams {
    /// Candidates below `quality * best_score` are discarded.
    pub quality: f64,
    /// Minimum Euclidean spacing between accepted corners, px.
    pub min_distance: f64,
    /// Pixels closer than this to the border are never selected.
    pub border: usize,
}

impl Default for CornerParams {
    fn default() -> Self {
        Self {
            quality: 0.01,
            min_distance: 10.0,
            border: 8,
        }
    }
}

/// Returns up to `max_corners` corner locations ordered by decreasing score.
pub fn good_features(frame: &Frame, max_corners: usize, params: &CornerParams) -> Vec<[f64; 2]> {
    let (w, h) = (frame.width(), frame.height());
    let border = params.border.max(2);
    if w <= 2 * border || h <= 2 * border {
        return Vec::new();
    }

    // Central-difference gradients, then the three structure-tensor products.
    let mut ixx = vec![0f32; w * h];
    let mut iyy = vec![0f32; w * h];
    let mut ixy = vec![0f32; w * h];
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let gx = (frame.get(x + 1, y) as f32 - frame.get(x - 1, y) as f32) * 0.5;
            let gy = (frame.get(x, y + 1) as f32 - frame.get(x, y - 1) as f32) * 0.5;
            let i = y * w + x;
            ixx[i] = gx * gx;
            iyy[i] = gy * gy;
            ixy[i] = gx * gy;
        }
    }

    // 3x3 box sum and min eigenvalue of [[a, b], [b, c]].
    let mut score = vec![0f32; w * h];
    let mut best = 0f32;
    for y in 2..h - 2 {
        for x in 2..w - 2 {
            let (mut a, mut b, mut c) = (0f32, 0f32, 0f32);
            for dy in 0..3 {
                let row = (y + dy - 1) * w;
                for dx in 0..3 {
                    let i = row + x + dx - 1;
                    a += ixx[i];
                    b += ixy[i];
                    c += iyy[i];
                }
            }
            let half_tr = 0.5 * (a + c);
            let d = (0.25 * (a - c) * (a - c) + b * b).sqrt();
            let lambda = half_tr - d;
            score[y * w + x] = lambda;
            best = best.max(lambda);
        }
    }
    if best <= 0.0 {
        return Vec::new();
    }
    let floor = (params.quality as f32) * best;

    let mut candidates = Vec::new();
    for y in border..h - border {
        for x in border..w - border {
            let s = score[y * w + x];
            if s < floor || s <= 0.0 {
                continue;
            }
            let mut is_max = true;
            'nms: for dy in -1isize..=1 {
                for dx in -1isize..=1 {
                    if dx == 0 && dy == 0 {
                        continue;
                    }
                    let j = (y as isize + dy) as usize * w + (x as isize + dx) as usize;
                    if score[j] > s {
                        is_max = false;
                        break 'nms;
                    }
                }
            }
            if is_max {
                candidates.push((s, x, y));
            }
        }
    }
    // Deterministic order: score, then raster position.
    candidates.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.2.cmp(&b.2)).then(a.1.cmp(&b.1)));

    let cell = params.min_distance.max(1.0);
    let gw = (w as f64 / cell).ceil() as usize + 1;
    let gh = (h as f64 / cell).ceil() as usize + 1;
    let mut grid: Vec<Vec<[f64; 2]>> = vec![Vec::new(); gw * gh];
    let min_d2 = params.min_distance * params.min_distance;
    let mut out = Vec::new();
    for (_, x, y) in candidates {
        if out.len() >= max_corners {
            break;
        }
        let p = [x as f64, y as f64];
        let (cx, cy) = ((p[0] / cell) as usize, (p[1] / cell) as usize);
        let mut free = true;
        'grid: for gy in cy.saturating_sub(1)..=(cy + 1).min(gh - 1) {
            for gx in cx.saturating_sub(1)..=(cx + 1).min(gw - 1) {
                for q in &grid[gy * gw + gx] {
                    let (dx, dy) = (q[0] - p[0], q[1] - p[1]);
                    if dx * dx + dy * dy < min_d2 {
                        free = false;
                        break 'grid;
                    }
                }
            }
        }
        if free {
            grid[cy * gw + cx].push(p);
            out.push(p);
        }
    }
    out
}
