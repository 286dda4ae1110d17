use std::collections::BTreeMap;
use std::fmt;

use super::lbp::{chi_square, LbpDescriptor};
use super::FaceIdError;

/// Token spoken and logged for faces not in the gallery.
pub const UNKNOWN_TOKEN: &str = "unknown";

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum IdentityLabel {
    Known(String),
    Unknown,
}

impl IdentityLabel {
    pub fn known(name: impl Into<String>) -> Self {
        IdentityLabel::Known(name.into())
    }

    pub fn is_known(&self) -> bool {
        matches!(self, IdentityLabel::Known(_))
    }

    /// Parses the log token form produced by `Display`.
    pub fn from_token(s: &str) -> Self {
        if s == UNKNOWN_TOKEN {
            IdentityLabel::Unknown
        } else {
            IdentityLabel::Known(s.to_string())
        }
    }
}

impl fmt::Display for IdentityLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IdentityLabel::Known(n) => f.write_str(n),
            IdentityLabel::Unknown => f.write_str(UNKNOWN_TOKEN),
        }
    }
}

/// Names are single tokens so they survive the line-oriented logs.
pub fn validate_name(name: &str) -> Result<(), FaceIdError> {
    if name.is_empty() || name == UNKNOWN_TOKEN || name.chars().any(|c| c.is_whitespace() || c == ':' || c == '/') {
        return Err(FaceIdError::InvalidName(name.to_string()));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Identification {
    pub label: IdentityLabel,
    /// Chi-square distance to the nearest enrolled sample; `+inf` for an
    /// empty gallery.
    pub distance: f64,
    /// Nearest identity regardless of the rejection threshold.
    pub nearest: Option<String>,
}

/// Enrolled identities with an open-set rejection threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct Gallery {
    entries: BTreeMap<String, Vec<LbpDescriptor>>,
    threshold: f64,
    fallback_threshold: f64,
}

impl Gallery {
    pub fn new(fallback_threshold: f64) -> Result<Self, FaceIdError> {
        if !(fallback_threshold > 0.0 && fallback_threshold.is_finite()) {
            return Err(FaceIdError::InvalidThreshold(fallback_threshold));
        }
        Ok(Self {
            entries: BTreeMap::new(),
            threshold: fallback_threshold,
            fallback_threshold,
        })
    }

    pub fn enroll(&mut self, name: &str, descriptor: LbpDescriptor) -> Result<(), FaceIdError> {
        validate_name(name)?;
        self.entries.entry(name.to_string()).or_default().push(descriptor);
        Ok(())
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn samples(&self, name: &str) -> Option<&[LbpDescriptor]> {
        self.entries.get(name).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn fallback_threshold(&self) -> f64 {
        self.fallback_threshold
    }

    pub fn set_threshold(&mut self, t: f64) -> Result<(), FaceIdError> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(FaceIdError::InvalidThreshold(t));
        }
        self.threshold = t;
        Ok(())
    }

    /// Sets the threshold halfway between the largest within-identity
    /// distance and the smallest cross-identity distance. Galleries with
    /// fewer than two identities fall back to the configured constant.
    pub fn calibrate(&mut self) -> f64 {
        if self.entries.len() < 2 {
            self.threshold = self.fallback_threshold;
            return self.threshold;
        }
        let groups: Vec<&Vec<LbpDescriptor>> = self.entries.values().collect();
        let mut max_genuine = 0f64;
        let mut min_impostor = f64::INFINITY;
        for (gi, g) in groups.iter().enumerate() {
            for (i, a) in g.iter().enumerate() {
                for b in &g[i + 1..] {
                    max_genuine = max_genuine.max(chi_square(a, b));
                }
                for h in &groups[gi + 1..] {
                    for b in h.iter() {
                        min_impostor = min_impostor.min(chi_square(a, b));
                    }
                }
            }
        }
        let t = 0.5 * (min_impostor + max_genuine);
        self.threshold = if t > 0.0 && t.is_finite() { t } else { self.fallback_threshold };
        self.threshold
    }

    /// Nearest-neighbour match; ties go to the lexicographically smallest
    /// name.
    pub fn identify(&self, d: &LbpDescriptor) -> Identification {
        let mut best: Option<(&str, f64)> = None;
        for (name, samples) in &self.entries {
            for s in samples {
                let dist = chi_square(d, s);
                // BTreeMap order makes strict `<` keep the smallest name on ties
                if best.is_none_or(|(_, b)| dist < b) {
                    best = Some((name, dist));
                }
            }
        }
        match best {
            None => Identification {
                label: IdentityLabel::Unknown,
                distance: f64::INFINITY,
                nearest: None,
            },
            Some((name, dist)) => Identification {
                label: if dist <= self.threshold {
                    IdentityLabel::Known(name.to_string())
                } else {
                    IdentityLabel::Unknown
                },
                distance: dist,
                nearest: Some(name.to_string()),
            },
        }
    }

    pub(crate) fn entries(&self) -> &BTreeMap<String, Vec<LbpDescriptor>> {
        &self.entries
    }

    pub(crate) fn from_parts(
        entries: BTreeMap<String, Vec<LbpDescriptor>>,
        threshold: f64,
        fallback_threshold: f64,
    ) -> Result<Self, FaceIdError> {
        let mut g = Gallery::new(fallback_threshold)?;
        g.set_threshold(threshold)?;
        for name in entries.keys() {
            validate_name(name)?;
        }
        g.entries = entries;
        Ok(g)
    }
}

#[cfg(test)]
mod tests {
    use super::super::lbp::DESCRIPTOR_LEN;
    use super::*;
    use proptest::prelude::*;

    fn desc(seed: u64) -> LbpDescriptor {
        // deterministic pseudo-histograms, each block normalised
        let mut v = Vec::with_capacity(DESCRIPTOR_LEN);
        let mut x = seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) | 1;
        for _ in 0..51 {
            let mut block: Vec<f64> = (0..59)
                .map(|_| {
                    x ^= x << 13;
                    x ^= x >> 7;
                    x ^= x << 17;
                    (x % 1000) as f64
                })
                .collect();
            let s: f64 = block.iter().sum();
            block.iter_mut().for_each(|b| *b /= s);
            v.extend(block);
        }
        LbpDescriptor::from_values(v).unwrap()
    }

    #[test]
    fn empty_gallery_is_unknown_at_infinity() {
        let g = Gallery::new(1.0).unwrap();
        let id = g.identify(&desc(1));
        assert_eq!(id.label, IdentityLabel::Unknown);
        assert!(id.distance.is_infinite());
    }

    #[test]
    fn enrolled_descriptor_matches_itself() {
        let mut g = Gallery::new(1.0).unwrap();
        g.enroll("Anna", desc(1)).unwrap();
        g.enroll("Ben", desc(2)).unwrap();
        let id = g.identify(&desc(2));
        assert_eq!(id.label, IdentityLabel::known("Ben"));
        assert_eq!(id.distance, 0.0);
    }

    #[test]
    fn ties_prefer_smallest_name() {
        let mut g = Gallery::new(1.0).unwrap();
        g.enroll("Zoe", desc(5)).unwrap();
        g.enroll("Adam", desc(5)).unwrap();
        assert_eq!(g.identify(&desc(5)).label, IdentityLabel::known("Adam"));
    }

    #[test]
    fn names_are_validated() {
        let mut g = Gallery::new(1.0).unwrap();
        for bad in ["", "unknown", "two words", "a:b"] {
            assert!(g.enroll(bad, desc(1)).is_err(), "{bad:?}");
        }
        assert!(Gallery::new(0.0).is_err());
    }

    #[test]
    fn calibration_splits_genuine_and_impostor() {
        let mut g = Gallery::new(7.0).unwrap();
        g.enroll("A", desc(1)).unwrap();
        assert_eq!(g.calibrate(), 7.0);
        g.enroll("B", desc(2)).unwrap();
        let t = g.calibrate();
        assert!((t - 0.5 * chi_square(&desc(1), &desc(2))).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn raising_threshold_never_unlabels(probe in 0u64..50, t1 in 0.01f64..20.0, dt in 0.0f64..20.0) {
            let mut g = Gallery::new(1.0).unwrap();
            for (i, n) in ["a", "b", "c"].iter().enumerate() {
                g.enroll(n, desc(100 + i as u64)).unwrap();
            }
            g.set_threshold(t1).unwrap();
            let lo = g.identify(&desc(probe));
            g.set_threshold(t1 + dt).unwrap();
            let hi = g.identify(&desc(probe));
            if lo.label.is_known() {
                prop_assert_eq!(lo.label, hi.label);
            }
        }

        #[test]
        fn chi_square_symmetric_nonnegative(a in 0u64..1000, b in 0u64..1000) {
            let (x, y) = (desc(a), desc(b));
            prop_assert_eq!(chi_square(&x, &x), 0.0);
            prop_assert!(chi_square(&x, &y) >= 0.0);
            prop_assert_eq!(chi_square(&x, &y), chi_square(&y, &x));
        }
    }
}
