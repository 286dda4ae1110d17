//! Pose solving against the simulator's forward projector.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use socialcue::headpose::{
    bearing_of, classify_relative_yaw, relative_yaw, solve_pose, CameraIntrinsics, FaceModel3D, LandmarkObservation,
    YawBins,
};
use socialcue::simulator::{add_noise, project_face, FacePlacement};

fn observe(p: &FacePlacement) -> LandmarkObservation {
    let cam = CameraIntrinsics::default();
    let pts = project_face(&cam, &FaceModel3D::canonical(), p).expect("face in view");
    LandmarkObservation::from_points(1, pts, 0).unwrap()
}

#[test]
fn yaw_thirty_at_bearing_twenty() {
    let obs = observe(&FacePlacement::new(20.0, 1200.0, 30.0));
    let pose = solve_pose(&obs, &FaceModel3D::canonical(), &CameraIntrinsics::default()).unwrap();
    assert!((pose.yaw - 30.0).abs() <= 0.5, "yaw {}", pose.yaw);
    assert!(pose.rms_reprojection < 1e-3);
}

#[test]
fn noisy_yaw_forty_five_within_five_degrees_at_p95() {
    let cam = CameraIntrinsics::default();
    let model = FaceModel3D::canonical();
    let mut rng = ChaCha8Rng::seed_from_u64(45);
    let mut errors: Vec<f64> = (0..100)
        .map(|_| {
            let mut pts = project_face(&cam, &model, &FacePlacement::new(0.0, 1500.0, 45.0)).unwrap();
            add_noise(&mut pts, 1.0, &mut rng);
            let obs = LandmarkObservation::from_points(1, pts, 0).unwrap();
            solve_pose(&obs, &model, &cam).map_or(f64::INFINITY, |p| (p.yaw - 45.0).abs())
        })
        .collect();
    errors.sort_by(f64::total_cmp);
    assert!(errors[94] <= 5.0, "95th percentile {}", errors[94]);
}

#[test]
fn noisy_far_faces_still_converge() {
    let cam = CameraIntrinsics::default();
    let model = FaceModel3D::canonical();
    let mut rng = ChaCha8Rng::seed_from_u64(3000);
    for _ in 0..200 {
        let mut pts = project_face(&cam, &model, &FacePlacement::new(0.0, 3000.0, 10.0)).unwrap();
        add_noise(&mut pts, 1.0, &mut rng);
        let obs = LandmarkObservation::from_points(1, pts, 0).unwrap();
        solve_pose(&obs, &model, &cam).expect("converges");
    }
}

#[test]
fn noise_free_bins_are_exact_across_all_five() {
    let cam = CameraIntrinsics::default();
    let model = FaceModel3D::canonical();
    let bins = YawBins::default();
    for bearing in [-55.0, -20.0, 0.0, 35.0, 60.0] {
        for delta in [-80.0, -60.0, -40.0, -22.0, -5.0, 0.0, 10.0, 23.0, 50.0, 67.0, 70.0, 85.0] {
            let obs = observe(&FacePlacement::new(bearing, 1800.0, bearing + delta));
            let pose = solve_pose(&obs, &model, &cam).unwrap();
            let b = bearing_of(&obs, &cam).unwrap();
            assert_eq!(
                classify_relative_yaw(relative_yaw(&pose, b), &bins),
                classify_relative_yaw(delta, &bins),
                "bearing {bearing} delta {delta}"
            );
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bearing_is_antisymmetric(bearing in -70.0f64..70.0, distance in 800.0f64..3000.0, delta in -40.0f64..40.0) {
        let cam = CameraIntrinsics::default();
        let right = bearing_of(&observe(&FacePlacement::new(bearing, distance, bearing + delta)), &cam).unwrap();
        let left = bearing_of(&observe(&FacePlacement::new(-bearing, distance, -bearing - delta)), &cam).unwrap();
        prop_assert!((right.degrees() + left.degrees()).abs() < 1e-9);
    }

    #[test]
    fn converged_solves_reproject_exactly(
        bearing in -60.0f64..60.0,
        distance in 800.0f64..3000.0,
        delta in -60.0f64..60.0,
        pitch in -15.0f64..15.0,
    ) {
        let mut p = FacePlacement::new(bearing, distance, bearing + delta);
        p.pitch = pitch;
        let pose = solve_pose(&observe(&p), &FaceModel3D::canonical(), &CameraIntrinsics::default()).unwrap();
        prop_assert!(pose.rms_reprojection < 1e-3);
        prop_assert!((pose.yaw - p.yaw).abs() < 0.5);
    }
}
