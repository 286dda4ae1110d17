//! Scripted scenarios run through the attention tracker and the full
//! pipeline, checked against the ground-truth oracle.

use std::collections::BTreeSet;
use std::fs;
use std::path::PathBuf;

use proptest::prelude::*;
use socialcue::arbiter::{Command, Variant};
use socialcue::attention::{Attention, CueEvent};
use socialcue::config::Config;
use socialcue::eventlog::{render_commands, render_events};
use socialcue::faceid::IdentityLabel;
use socialcue::headpose::{bearing_of, solve_pose, CameraIntrinsics, FaceModel3D};
use socialcue::pipeline::{run, RunOptions};
use socialcue::simulator::{ground_truth_events, random_scenario, synthesize_observations, Scenario};

fn bundled(name: &str) -> Scenario {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join(format!("../../scenarios/{name}.scn"));
    Scenario::parse(&fs::read_to_string(path).unwrap()).unwrap()
}

const THREE_GAZERS: &str = "\
duration 4000
fps 30
fov 170
noise 0
jitter none
participant Anna enter=0 exit=4000
  t=0 bearing=-40 distance=1300 yaw=0
  t=799 bearing=-40 distance=1300 yaw=0
  t=800 bearing=-40 distance=1300 yaw=-40
participant Ben enter=0 exit=4000
  t=0 bearing=0 distance=1100 yaw=45
  t=1199 bearing=0 distance=1100 yaw=45
  t=1200 bearing=0 distance=1100 yaw=2
  t=2999 bearing=0 distance=1100 yaw=2
  t=3000 bearing=0 distance=1100 yaw=45
participant unknown enter=0 exit=4000
  t=0 bearing=40 distance=1600 yaw=-20
  t=1499 bearing=40 distance=1600 yaw=-20
  t=1500 bearing=40 distance=1600 yaw=38
";

/// Tracks the oracle considers gazing at `t`.
fn open_at(events: &[CueEvent], t: u64) -> BTreeSet<u32> {
    let mut open = BTreeSet::new();
    for e in events.iter().take_while(|e| e.timestamp() <= t) {
        match e {
            CueEvent::GazeStart { track_id, .. } => {
                open.insert(*track_id);
            }
            CueEvent::GazeEnd { track_id, .. } => {
                open.remove(track_id);
            }
            CueEvent::IdSnapshot { .. } => {}
        }
    }
    open
}

#[test]
fn three_gazer_active_set_follows_the_oracle() {
    let s = Scenario::parse(THREE_GAZERS).unwrap();
    let cfg = Config::default();
    let model = FaceModel3D::canonical();
    let cam = CameraIntrinsics::default();
    let truth = ground_truth_events(&s, &model, &cfg.attention, &cfg.arbiter, Variant::Audio);
    let mut att = Attention::new(cfg.attention).unwrap();
    let mut peak = 0;
    for (k, t) in s.frame_times().into_iter().enumerate() {
        for face in synthesize_observations(&s, &model, t, k as u64, 0) {
            let obs = &face.observation;
            let pose = solve_pose(obs, &model, &cam).unwrap();
            let b = bearing_of(obs, &cam).unwrap();
            let id = IdentityLabel::from_token(face.truth.name.as_deref().unwrap_or("unknown"));
            att.update(obs.track_id, &pose, b, id, t).unwrap();
        }
        let active: BTreeSet<u32> = att.active_gazers().iter().map(|g| g.track_id).collect();
        assert_eq!(active, open_at(&truth.events, t), "t = {t}");
        peak = peak.max(active.len());
    }
    assert_eq!(peak, 3);
}

#[test]
fn nobody_looking_means_an_empty_log() {
    let text = THREE_GAZERS
        .lines()
        .filter(|l| !["t=800 ", "t=1200 ", "t=1500 ", "t=2999 "].iter().any(|k| l.contains(k)))
        .collect::<Vec<_>>()
        .join("\n");
    let s = Scenario::parse(&text).unwrap();
    let cfg = Config::default();
    let truth = ground_truth_events(&s, &FaceModel3D::canonical(), &cfg.attention, &cfg.arbiter, Variant::AudioHaptics);
    assert!(truth.events.is_empty() && truth.commands.is_empty());
    let out = run(&s, &cfg, &RunOptions::new(Variant::AudioHaptics, 0)).unwrap();
    assert!(out.events.is_empty() && out.commands.is_empty());
}

#[test]
fn four_way_gaze_announces_the_count_once() {
    let s = bundled("four_gazers");
    let cfg = Config::default();
    for variant in [Variant::Audio, Variant::AudioHaptics] {
        let truth = ground_truth_events(&s, &FaceModel3D::canonical(), &cfg.attention, &cfg.arbiter, variant);
        let counts: Vec<_> = truth
            .commands
            .iter()
            .filter(|c| matches!(&c.command, Command::Speech { text, .. } if text == "4 people are looking at you"))
            .collect();
        assert_eq!(counts.len(), 1);
        let speech = truth.commands.iter().filter(|c| matches!(c.command, Command::Speech { .. })).count();
        assert_eq!(speech, 1);
    }
}

#[test]
fn five_bins_is_classified_exactly() {
    let s = bundled("five_bins");
    let out = run(&s, &Config::default(), &RunOptions::new(Variant::Audio, 0)).unwrap();
    assert_eq!(out.report.yaw_bin_accuracy, Some(1.0));
    assert_eq!(out.report.gaze_event_precision, Some(1.0));
    assert_eq!(out.report.gaze_event_recall, Some(1.0));
}

#[test]
fn noisy_runs_are_reproducible() {
    let mut s = bundled("id_request_mixed");
    s.noise = 1.5;
    let cfg = Config::default();
    let opts = RunOptions::new(Variant::AudioHaptics, 11);
    let a = run(&s, &cfg, &opts).unwrap();
    let b = run(&s, &cfg, &opts).unwrap();
    assert_eq!(render_events(&a.events), render_events(&b.events));
    assert_eq!(render_commands(&a.commands), render_commands(&b.commands));
    assert_eq!(a.report.yaw_bin_accuracy, b.report.yaw_bin_accuracy);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn random_scenarios_round_trip_and_match_the_oracle(seed in 0u64..1_000_000) {
        let cfg = Config::default();
        let s = random_scenario(seed, cfg.attention.tau);
        prop_assert_eq!(Scenario::parse(&s.to_text()).unwrap(), s.clone());
        let out = run(&s, &cfg, &RunOptions::new(Variant::AudioHaptics, seed)).unwrap();
        prop_assert_eq!(render_events(&out.events), render_events(&out.truth.events));
        prop_assert_eq!(render_commands(&out.commands), render_commands(&out.truth.commands));
    }

    #[test]
    fn events_alternate_and_respect_refractory(seed in 0u64..1_000_000) {
        let cfg = Config::default();
        let mut s = random_scenario(seed, cfg.attention.tau);
        s.noise = 1.0;
        let out = run(&s, &cfg, &RunOptions::new(Variant::Audio, seed)).unwrap();
        let mut last_start = std::collections::BTreeMap::new();
        let mut open = BTreeSet::new();
        for e in &out.events {
            match e {
                CueEvent::GazeStart { track_id, timestamp, .. } => {
                    prop_assert!(open.insert(*track_id));
                    if let Some(prev) = last_start.insert(*track_id, *timestamp) {
                        prop_assert!(timestamp - prev >= cfg.attention.refractory_ms);
                    }
                }
                CueEvent::GazeEnd { track_id, .. } => prop_assert!(open.remove(track_id)),
                CueEvent::IdSnapshot { .. } => {}
            }
        }
    }
}
