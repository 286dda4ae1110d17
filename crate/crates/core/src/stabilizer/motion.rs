//! Four-parameter similarity model and its robust fit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{FlowPair, StabilizerError};

/// `p' = scale * R(rotation) * p + translation`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimilarityTransform {
    pub scale: f64,
    /// Radians, counter-clockwise in image coordinates (y down).
    pub rotation: f64,
    pub translation: [f64; 2],
}

impl Default for SimilarityTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl SimilarityTransform {
    pub fn identity() -> Self {
        Self {
            scale: 1.0,
            rotation: 0.0,
            translation: [0.0, 0.0],
        }
    }

    pub fn new(scale: f64, rotation: f64, translation: [f64; 2]) -> Self {
        Self {
            scale,
            rotation,
            translation,
        }
    }

    /// Builds from the linear parameterisation `a = s cos r, b = s sin r`.
    pub fn from_linear(a: f64, b: f64, tx: f64, ty: f64) -> Self {
        Self {
            scale: a.hypot(b),
            rotation: b.atan2(a),
            translation: [tx, ty],
        }
    }

    fn ab(&self) -> (f64, f64) {
        (self.scale * self.rotation.cos(), self.scale * self.rotation.sin())
    }

    pub fn apply(&self, p: [f64; 2]) -> [f64; 2] {
        let (a, b) = self.ab();
        [
            a * p[0] - b * p[1] + self.translation[0],
            b * p[0] + a * p[1] + self.translation[1],
        ]
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &SimilarityTransform) -> SimilarityTransform {
        let t = self.apply(other.translation);
        SimilarityTransform {
            scale: self.scale * other.scale,
            rotation: wrap_angle(self.rotation + other.rotation),
            translation: t,
        }
    }

    pub fn inverse(&self) -> SimilarityTransform {
        let s = 1.0 / self.scale;
        let r = -self.rotation;
        let (c, sn) = (r.cos(), r.sin());
        let [tx, ty] = self.translation;
        SimilarityTransform {
            scale: s,
            rotation: r,
            translation: [-s * (c * tx - sn * ty), -s * (sn * tx + c * ty)],
        }
    }

    pub fn is_identity(&self, tol_linear: f64, tol_translation: f64) -> bool {
        (self.scale - 1.0).abs() <= tol_linear
            && self.rotation.abs() <= tol_linear
            && self.translation[0].abs() <= tol_translation
            && self.translation[1].abs() <= tol_translation
    }
}

pub(crate) fn wrap_angle(a: f64) -> f64 {
    let two_pi = std::f64::consts::TAU;
    let mut r = a % two_pi;
    if r > std::f64::consts::PI {
        r -= two_pi;
    } else if r <= -std::f64::consts::PI {
        r += two_pi;
    }
    r
}

#[derive(Debug, Clone, Copy)]
pub struct RansacParams {
    pub iterations: usize,
    /// Inlier residual threshold, px.
    pub threshold: f64,
    pub min_inlier_ratio: f64,
    pub seed: u64,
}

impl Default for RansacParams {
    fn default() -> Self {
        Self {
            iterations: 200,
            threshold: 2.0,
            min_inlier_ratio: 0.5,
            seed: 0x5eed,
        }
    }
}

/// Closed-form least-squares similarity over the selected pairs.
fn fit_least_squares(pairs: &[FlowPair], idx: &[usize]) -> Option<SimilarityTransform> {
    let n = idx.len() as f64;
    if idx.len() < 2 {
        return None;
    }
    let (mut mx, mut my, mut nx, mut ny) = (0.0, 0.0, 0.0, 0.0);
    for &i in idx {
        mx += pairs[i].from[0];
        my += pairs[i].from[1];
        nx += pairs[i].to[0];
        ny += pairs[i].to[1];
    }
    mx /= n;
    my /= n;
    nx /= n;
    ny /= n;
    let (mut num_a, mut num_b, mut den) = (0.0, 0.0, 0.0);
    for &i in idx {
        let (x, y) = (pairs[i].from[0] - mx, pairs[i].from[1] - my);
        let (u, v) = (pairs[i].to[0] - nx, pairs[i].to[1] - ny);
        num_a += x * u + y * v;
        num_b += x * v - y * u;
        den += x * x + y * y;
    }
    if den < 1e-9 {
        return None;
    }
    let a = num_a / den;
    let b = num_b / den;
    let tx = nx - (a * mx - b * my);
    let ty = ny - (b * mx + a * my);
    Some(SimilarityTransform::from_linear(a, b, tx, ty))
}

fn residual(t: &SimilarityTransform, p: &FlowPair) -> f64 {
    let q = t.apply(p.from);
    (q[0] - p.to[0]).hypot(q[1] - p.to[1])
}

fn inliers(t: &SimilarityTransform, pairs: &[FlowPair], threshold: f64) -> (Vec<usize>, f64) {
    let mut idx = Vec::new();
    let mut cost = 0.0;
    for (i, p) in pairs.iter().enumerate() {
        let r = residual(t, p);
        if r <= threshold {
            idx.push(i);
            cost += r * r;
        }
    }
    (idx, cost)
}

/// Random-sample-consensus similarity fit followed by least-squares
/// refinement on the consensus set.
pub fn estimate_global_motion(
    pairs: &[FlowPair],
    params: &RansacParams,
) -> Result<SimilarityTransform, StabilizerError> {
    if pairs.len() < 4 {
        return Err(StabilizerError::TooFewPairs(pairs.len()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut best: Option<(Vec<usize>, f64)> = None;
    for _ in 0..params.iterations {
        let i = rng.random_range(0..pairs.len());
        let j = rng.random_range(0..pairs.len());
        let (a, b) = (pairs[i].from, pairs[j].from);
        if i == j || (a[0] - b[0]).hypot(a[1] - b[1]) < 1.0 {
            continue;
        }
        let Some(model) = fit_least_squares(pairs, &[i, j]) else {
            continue;
        };
        if !(0.5..2.0).contains(&model.scale) {
            continue;
        }
        let (idx, cost) = inliers(&model, pairs, params.threshold);
        let better = match &best {
            None => true,
            Some((bi, bc)) => idx.len() > bi.len() || (idx.len() == bi.len() && cost < *bc),
        };
        if better {
            best = Some((idx, cost));
        }
    }
    let (mut idx, _) = best.unwrap_or_default();
    let mut model = None;
    // two refinement rounds: refit, re-select
    for _ in 0..2 {
        let Some(m) = fit_least_squares(pairs, &idx) else {
            break;
        };
        model = Some(m);
        idx = inliers(&m, pairs, params.threshold).0;
    }
    let ratio = idx.len() as f64 / pairs.len() as f64;
    match model {
        Some(m) if ratio >= params.min_inlier_ratio && m.scale > 0.5 && m.scale < 2.0 => {
            // final fit on the final consensus set
            Ok(fit_least_squares(pairs, &idx).unwrap_or(m))
        }
        _ => Err(StabilizerError::NoConsensus {
            inliers: idx.len(),
            total: pairs.len(),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn pair(from: [f64; 2], to: [f64; 2]) -> FlowPair {
        FlowPair { from, to, residual: 0.0 }
    }

    fn grid_pairs(t: &SimilarityTransform) -> Vec<FlowPair> {
        let mut v = Vec::new();
        for i in 0..10 {
            for j in 0..8 {
                let p = [40.0 + 60.0 * i as f64, 30.0 + 55.0 * j as f64];
                v.push(pair(p, t.apply(p)));
            }
        }
        v
    }

    #[test]
    fn identity_pairs_give_identity() {
        let pairs = grid_pairs(&SimilarityTransform::identity());
        let t = estimate_global_motion(&pairs, &RansacParams::default()).unwrap();
        assert!(t.is_identity(1e-12, 1e-9), "{t:?}");
    }

    #[test]
    fn three_pairs_are_rejected() {
        let pairs: Vec<_> = (0..3).map(|i| pair([i as f64 * 10.0, 0.0], [i as f64 * 10.0, 0.0])).collect();
        assert_eq!(
            estimate_global_motion(&pairs, &RansacParams::default()),
            Err(StabilizerError::TooFewPairs(3))
        );
    }

    #[test]
    fn translation_with_gross_outliers() {
        let truth = SimilarityTransform::new(1.0, 0.0, [5.0, 0.0]);
        let mut pairs = grid_pairs(&truth);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n_out = (pairs.len() as f64 * 0.3) as usize;
        for p in pairs.iter_mut().take(n_out) {
            p.to = [rng.random_range(0.0..640.0), rng.random_range(0.0..480.0)];
        }
        let t = estimate_global_motion(&pairs, &RansacParams::default()).unwrap();
        assert!((t.translation[0] - 5.0).abs() <= 0.3);
        assert!(t.translation[1].abs() <= 0.3);
    }

    #[test]
    fn mostly_outliers_is_no_consensus() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pairs: Vec<_> = (0..40)
            .map(|_| {
                pair(
                    [rng.random_range(0.0..640.0), rng.random_range(0.0..480.0)],
                    [rng.random_range(0.0..640.0), rng.random_range(0.0..480.0)],
                )
            })
            .collect();
        assert!(matches!(
            estimate_global_motion(&pairs, &RansacParams::default()),
            Err(StabilizerError::NoConsensus { .. })
        ));
    }

    #[test]
    fn seeded_fit_is_deterministic() {
        let truth = SimilarityTransform::new(1.02, 0.03, [2.0, -1.5]);
        let mut pairs = grid_pairs(&truth);
        pairs[3].to = [0.0, 0.0];
        pairs[17].to = [600.0, 2.0];
        let p = RansacParams::default();
        let a = estimate_global_motion(&pairs, &p).unwrap();
        let b = estimate_global_motion(&pairs, &p).unwrap();
        assert_eq!(a.scale.to_bits(), b.scale.to_bits());
        assert_eq!(a.rotation.to_bits(), b.rotation.to_bits());
        assert_eq!(a.translation[0].to_bits(), b.translation[0].to_bits());
    }

    proptest! {
        #[test]
        fn inverse_composes_to_identity(s in 0.51f64..1.99, r in -3.0f64..3.0, tx in -300.0f64..300.0, ty in -300.0f64..300.0) {
            let t = SimilarityTransform::new(s, r, [tx, ty]);
            let id = t.compose(&t.inverse());
            prop_assert!(id.is_identity(1e-9, 1e-9), "{:?}", id);
            let id2 = t.inverse().compose(&t);
            prop_assert!(id2.is_identity(1e-9, 1e-9), "{:?}", id2);
        }

        #[test]
        fn recovers_similarity_with_outliers(
            s in 0.81f64..1.24,
            deg in -10.0f64..10.0,
            tx in -40.0f64..40.0,
            ty in -40.0f64..40.0,
            outlier_frac in 0.0f64..0.3,
            seed in 0u64..1000,
        ) {
            let truth = SimilarityTransform::new(s, deg.to_radians(), [tx, ty]);
            let mut pairs = grid_pairs(&truth);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n_out = (pairs.len() as f64 * outlier_frac) as usize;
            for k in 0..n_out {
                let i = (k * 7 + seed as usize) % pairs.len();
                pairs[i].to = [rng.random_range(-100.0..740.0), rng.random_range(-100.0..580.0)];
            }
            let t = estimate_global_motion(&pairs, &RansacParams { seed, ..Default::default() }).unwrap();
            prop_assert!((t.scale - s).abs() < 1e-3);
            prop_assert!((t.rotation.to_degrees() - deg).abs() < 0.05);
            prop_assert!((t.translation[0] - tx).abs() < 0.1);
            prop_assert!((t.translation[1] - ty).abs() < 0.1);
        }
    }
}
