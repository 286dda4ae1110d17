use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Keyframe, Participant, Scenario};
use crate::headpose::CameraIntrinsics;

const NAMES: [&str; 8] = ["Anna", "Ben", "Carla", "David", "Eva", "Femi", "Goran", "Hana"];

/// Minimum distance, in degrees, between any sampled relative yaw and the
/// eye-contact threshold, so estimation error cannot flip a decision.
pub const DECISION_MARGIN: f64 = 0.5;

fn tenths(rng: &mut ChaCha8Rng, lo: i32, hi: i32) -> f64 {
    rng.random_range(lo..=hi) as f64 / 10.0
}

fn draw(rng: &mut ChaCha8Rng) -> Scenario {
    let duration = rng.random_range(60..=120u64) * 100;
    let fps = [15.0, 20.0, 25.0, 30.0][rng.random_range(0..4)];
    let count = rng.random_range(1..=5);
    let mut names: Vec<&str> = NAMES.to_vec();
    let mut bearings: Vec<f64> = Vec::new();
    let mut participants = Vec::new();
    for _ in 0..count {
        let bearing = loop {
            let b = tenths(rng, -600, 600);
            if bearings.iter().all(|o| (o - b).abs() >= 8.0) {
                break b;
            }
        };
        bearings.push(bearing);
        let distance = rng.random_range(800..=2500) as f64;
        let name = if rng.random_bool(0.3) || names.is_empty() {
            None
        } else {
            Some(names.swap_remove(rng.random_range(0..names.len())).to_string())
        };
        let enter = if rng.random_bool(0.6) { 0 } else { rng.random_range(0..duration / 2) };
        let exit = if rng.random_bool(0.6) {
            duration
        } else {
            rng.random_range((enter + 1000).min(duration)..=duration)
        };
        let mut keyframes = Vec::new();
        let mut t = 0;
        while t <= duration {
            let delta = if rng.random_bool(0.5) {
                tenths(rng, -40, 40)
            } else {
                let m = tenths(rng, 250, 800);
                if rng.random_bool(0.5) {
                    m
                } else {
                    -m
                }
            };
            let yaw = bearing + delta;
            keyframes.push(Keyframe { t, bearing, distance, yaw });
            let hold = rng.random_range(3..=25u64) * 100;
            if t + hold > duration {
                break;
            }
            keyframes.push(Keyframe { t: t + hold, bearing, distance, yaw });
            // switch on the next millisecond so no frame sees an intermediate yaw
            t += hold + 1;
        }
        participants.push(Participant {
            name,
            enter,
            exit,
            keyframes,
        });
    }
    let id_requests = (0..rng.random_range(0..=2)).map(|_| rng.random_range(0..duration)).collect();
    Scenario {
        duration,
        fps,
        camera: CameraIntrinsics::default(),
        noise: 0.0,
        jitter: None,
        participants,
        id_requests,
    }
}

fn clear_of_threshold(s: &Scenario, tau: f64) -> bool {
    s.frame_times().iter().all(|&t| {
        s.participants.iter().filter(|p| p.present(t)).all(|p| {
            let d = (p.yaw_at(t) - p.bearing_at(t)).abs();
            (d - tau).abs() >= DECISION_MARGIN
        })
    })
}

/// A random meeting: up to five people at fixed one-decimal bearings
/// alternating between facing the wearer and looking away, with occasional
/// late arrivals, early departures and roster requests. Draws are repeated
/// until no frame puts a relative yaw within [`DECISION_MARGIN`] of `tau`.
pub fn random_scenario(seed: u64, tau: f64) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let s = draw(&mut rng);
        if clear_of_threshold(&s, tau) {
            debug_assert!(s.validate().is_ok());
            return s;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generated_scenarios_validate_and_round_trip() {
        for seed in 0..20 {
            let s = random_scenario(seed, 10.0);
            s.validate().unwrap();
            assert_eq!(Scenario::parse(&s.to_text()).unwrap(), s);
        }
    }

    #[test]
    fn generation_is_seeded() {
        assert_eq!(random_scenario(7, 10.0), random_scenario(7, 10.0));
        assert_ne!(random_scenario(7, 10.0), random_scenario(8, 10.0));
    }
}
