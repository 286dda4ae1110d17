use socialcue::frame::Frame;
use socialcue::simulator::texture::{background_frame, jitter_offset};
use socialcue::simulator::Jitter;
use socialcue::stabilizer::{
    estimate_global_motion, stabilize_sequence, track_flow, FlowParams, RansacParams, StabilizerConfig,
    StabilizerError,
};

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

/// `prev` translated right by `dx` whole pixels, left border replicated.
fn shifted(prev: &Frame, dx: usize) -> Frame {
    Frame::from_fn(prev.width(), prev.height(), prev.timestamp() + 33, |x, y| {
        prev.get(x.saturating_sub(dx), y)
    })
    .unwrap()
}

#[test]
fn identical_frames_give_zero_flow() {
    let f = background_frame([0.0, 0.0], 0);
    let pairs = track_flow(&f, &f, 200, &FlowParams::default()).unwrap();
    assert!(pairs.len() >= 8);
    for p in pairs {
        assert!((p.to[0] - p.from[0]).abs() < 1e-6 && (p.to[1] - p.from[1]).abs() < 1e-6);
        assert!(p.residual < 1e-6);
    }
}

#[test]
fn five_pixel_shift_gives_median_flow_of_five() {
    let prev = background_frame([0.0, 0.0], 0);
    let cur = shifted(&prev, 5);
    let pairs = track_flow(&prev, &cur, 200, &FlowParams::default()).unwrap();
    assert!(pairs.len() <= 200 && pairs.len() >= 8);
    let dx = median(pairs.iter().map(|p| p.to[0] - p.from[0]).collect());
    let dy = median(pairs.iter().map(|p| p.to[1] - p.from[1]).collect());
    assert!((dx - 5.0).abs() <= 0.25 && dy.abs() <= 0.25, "median flow ({dx}, {dy})");
    for p in &pairs {
        assert!(p.residual <= 1.0);
        assert!(p.to[0] >= -1.0 && p.to[0] <= prev.width() as f64 + 1.0);
    }
}

#[test]
fn flow_rejects_size_mismatch_and_flat_frames() {
    let a = background_frame([0.0, 0.0], 0);
    let small = Frame::from_fn(320, 240, 0, |_, _| 0).unwrap();
    assert!(matches!(
        track_flow(&a, &small, 200, &FlowParams::default()),
        Err(StabilizerError::DimensionMismatch { .. })
    ));
    let flat = Frame::from_fn(640, 480, 0, |_, _| 90).unwrap();
    assert!(matches!(
        track_flow(&flat, &flat, 200, &FlowParams::default()),
        Err(StabilizerError::InsufficientTexture { .. })
    ));
}

#[test]
fn tracked_shift_fits_a_translation() {
    let prev = background_frame([0.0, 0.0], 0);
    let cur = background_frame([3.0, -2.0], 33);
    let pairs = track_flow(&prev, &cur, 200, &FlowParams::default()).unwrap();
    let t = estimate_global_motion(&pairs, &RansacParams::default()).unwrap();
    assert!((t.translation[0] - 3.0).abs() < 0.1 && (t.translation[1] + 2.0).abs() < 0.1);
    assert!((t.scale - 1.0).abs() < 1e-3 && t.rotation.abs() < 1e-3);
}

#[test]
fn static_stream_is_bit_exact() {
    let frames: Vec<Frame> = (0..40).map(|k| background_frame([0.0, 0.0], k * 33)).collect();
    let out = stabilize_sequence(frames.clone(), StabilizerConfig::default()).unwrap();
    assert_eq!(out.len(), frames.len());
    for (o, f) in out.iter().zip(&frames) {
        assert_eq!(&o.frame, f);
        assert!(o.failure.is_none());
    }
}

#[test]
fn single_frame_stream_is_unchanged() {
    let f = background_frame([2.0, 1.0], 0);
    let out = stabilize_sequence([f.clone()], StabilizerConfig::default()).unwrap();
    assert_eq!(out.len(), 1);
    assert_eq!(out[0].frame, f);
}

#[test]
fn flat_frames_pass_through_flagged() {
    let frames: Vec<Frame> = (0..5).map(|k| Frame::from_fn(64, 48, k * 33, |_, _| 10).unwrap()).collect();
    let out = stabilize_sequence(frames.clone(), StabilizerConfig::default()).unwrap();
    for (o, f) in out.iter().zip(&frames).skip(1) {
        assert_eq!(&o.frame, f);
        assert!(matches!(o.failure, Some(StabilizerError::InsufficientTexture { .. })));
    }
}

#[test]
fn sinusoidal_jitter_is_removed() {
    let jitter = Jitter { amplitude: 8.0, period: 10.0 };
    let offsets: Vec<[f64; 2]> = (0..100).map(|k| jitter_offset(&jitter, k)).collect();
    let frames = offsets.iter().enumerate().map(|(k, o)| background_frame(*o, k as u64 * 33));
    let out = stabilize_sequence(frames, StabilizerConfig::default()).unwrap();
    assert_eq!(out.len(), 100);
    // the same scene point, followed through shake and correction
    let landed: Vec<[f64; 2]> = out
        .iter()
        .map(|f| f.correction.apply([200.0 + offsets[f.index][0], 150.0 + offsets[f.index][1]]))
        .collect();
    let spread = |pts: &[[f64; 2]]| {
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p[0]).sum::<f64>() / n;
        let my = pts.iter().map(|p| p[1]).sum::<f64>() / n;
        (pts.iter().map(|p| (p[0] - mx).powi(2) + (p[1] - my).powi(2)).sum::<f64>() / n).sqrt()
    };
    let injected = spread(&offsets);
    let residual = spread(&landed);
    assert!(residual <= 0.1 * injected, "residual {residual} vs injected {injected}");
}
