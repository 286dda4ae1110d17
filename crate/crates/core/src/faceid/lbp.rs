//! Uniform LBP(8,1) histograms sampled around facial landmarks.

use std::sync::OnceLock;

use super::chip::{FaceChip, CHIP_SIZE};
use crate::headpose::{INTERIOR, INTERIOR_COUNT};

pub const LBP_BINS: usize = 59;
pub const PATCH_SIZE: usize = 16;
pub const DESCRIPTOR_LEN: usize = INTERIOR_COUNT * LBP_BINS;

/// Maps an 8-bit LBP code to its uniform-pattern bin: the 58 codes with at
/// most two circular 0/1 transitions get bins 0..58 in ascending code order,
/// everything else shares bin 58.
pub fn uniform_table() -> &'static [u8; 256] {
    static TABLE: OnceLock<[u8; 256]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = [0u8; 256];
        let mut next = 0u8;
        for code in 0..256u32 {
            let transitions = (code ^ ((code >> 1) | ((code & 1) << 7))).count_ones();
            if transitions <= 2 {
                t[code as usize] = next;
                next += 1;
            } else {
                t[code as usize] = (LBP_BINS - 1) as u8;
            }
        }
        debug_assert_eq!(next as usize, LBP_BINS - 1);
        t
    })
}

/// Concatenated per-landmark histograms, each L1-normalised (or all zero
/// when its patch lies entirely outside the chip).
#[derive(Debug, Clone, PartialEq)]
pub struct LbpDescriptor {
    values: Vec<f64>,
}

impl LbpDescriptor {
    pub fn from_values(values: Vec<f64>) -> Option<Self> {
        if values.len() != DESCRIPTOR_LEN || values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return None;
        }
        Some(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn histogram(&self, k: usize) -> &[f64] {
        &self.values[k * LBP_BINS..(k + 1) * LBP_BINS]
    }
}

/// Neighbour offsets at radius 1, counter-clockwise from +x (image y down).
fn offsets() -> [(f64, f64); 8] {
    let d = std::f64::consts::FRAC_1_SQRT_2;
    [
        (1.0, 0.0),
        (d, -d),
        (0.0, -1.0),
        (-d, -d),
        (-1.0, 0.0),
        (-d, d),
        (0.0, 1.0),
        (d, d),
    ]
}

/// LBP code at integer pixel `(x, y)`; all neighbours must be inside.
/// Interpolation works on differences from the centre so that adding a
/// constant to the image cannot change any comparison.
fn code_at(img: &[u8], x: usize, y: usize) -> u8 {
    let w = CHIP_SIZE;
    let c = img[y * w + x] as f64;
    let mut code = 0u8;
    for (bit, (dx, dy)) in offsets().iter().enumerate() {
        let sx = x as f64 + dx;
        let sy = y as f64 + dy;
        let x0 = sx.floor();
        let y0 = sy.floor();
        let fx = sx - x0;
        let fy = sy - y0;
        let (xi, yi) = (x0 as usize, y0 as usize);
        let at = |xx: usize, yy: usize| img[yy * w + xx.min(w - 1)] as f64 - c;
        let p00 = at(xi, yi);
        let (p10, p01, p11) = if fx == 0.0 && fy == 0.0 {
            (0.0, 0.0, 0.0)
        } else {
            (at(xi + 1, yi), at(xi, (yi + 1).min(w - 1)), at(xi + 1, (yi + 1).min(w - 1)))
        };
        let top = p00 + (p10 - p00) * fx;
        let bottom = p01 + (p11 - p01) * fx;
        let v = top + (bottom - top) * fy;
        if v >= 0.0 {
            code |= 1 << bit;
        }
    }
    code
}

/// Histograms over a 16x16 patch centred on each interior landmark.
pub fn extract_descriptor(chip: &FaceChip) -> LbpDescriptor {
    let table = uniform_table();
    let img = chip.image.data();
    let half = (PATCH_SIZE / 2) as isize;
    let mut values = Vec::with_capacity(DESCRIPTOR_LEN);
    for i in INTERIOR {
        let p = chip.landmarks[i];
        let mut hist = [0f64; LBP_BINS];
        let mut total = 0usize;
        if p[0].is_finite() && p[1].is_finite() {
            let cx = p[0].round() as isize;
            let cy = p[1].round() as isize;
            // pixels whose whole 3x3 neighbourhood is inside the chip
            let lo = 1isize;
            let hi = CHIP_SIZE as isize - 2;
            for y in (cy - half).max(lo)..(cy + half).min(hi + 1) {
                for x in (cx - half).max(lo)..(cx + half).min(hi + 1) {
                    let code = code_at(img, x as usize, y as usize);
                    hist[table[code as usize] as usize] += 1.0;
                    total += 1;
                }
            }
        }
        if total > 0 {
            let n = total as f64;
            values.extend(hist.iter().map(|v| v / n));
        } else {
            values.extend(hist.iter());
        }
    }
    LbpDescriptor { values }
}

/// Chi-square distance over bins where either side is non-zero.
pub fn chi_square(a: &LbpDescriptor, b: &LbpDescriptor) -> f64 {
    a.values
        .iter()
        .zip(&b.values)
        .map(|(&x, &y)| {
            let s = x + y;
            if s > 0.0 {
                (x - y) * (x - y) / s
            } else {
                0.0
            }
        })
        .sum()
}
