use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use socialcue::faceid::{chi_square, extract_descriptor, load_gallery, save_gallery, Gallery, LbpDescriptor, CHIP_SIZE};
use socialcue::headpose::{CameraIntrinsics, FaceModel3D};
use socialcue::pipeline::enrollment_pose;
use socialcue::simulator::texture::{sample_chip, IdentityTexture};

fn descriptor(name: &str, rng: &mut ChaCha8Rng) -> LbpDescriptor {
    let placement = enrollment_pose(rng);
    let chip = sample_chip(
        &IdentityTexture::for_name(name),
        &CameraIntrinsics::default(),
        &FaceModel3D::canonical(),
        &placement,
        1.0,
        rng,
    )
    .expect("face in view");
    assert_eq!((chip.image.width(), chip.image.height()), (CHIP_SIZE, CHIP_SIZE));
    extract_descriptor(&chip)
}

#[test]
fn same_identity_is_closer_than_another() {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let names = ["Anna", "Ben", "Carla", "David"];
    let mut wins = 0;
    for _ in 0..20 {
        let i = rng.random_range(0..names.len());
        let j = (i + rng.random_range(1..names.len())) % names.len();
        let a = descriptor(names[i], &mut rng);
        let a2 = descriptor(names[i], &mut rng);
        let b = descriptor(names[j], &mut rng);
        wins += (chi_square(&a, &a2) < chi_square(&a, &b)) as usize;
    }
    assert!(wins >= 19, "genuine pair closer in {wins}/20 trials");
}

#[test]
fn enrolled_gallery_identifies_and_persists() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut gallery = Gallery::new(12.0).unwrap();
    for name in ["Anna", "Ben", "Carla"] {
        for _ in 0..5 {
            let d = descriptor(name, &mut rng);
            gallery.enroll(name, d).unwrap();
        }
    }
    gallery.calibrate();
    let probe = descriptor("Ben", &mut rng);
    let id = gallery.identify(&probe);
    assert_eq!(id.nearest.as_deref(), Some("Ben"));
    assert!(id.label.is_known());

    let dir = tempfile::tempdir().unwrap();
    save_gallery(&gallery, dir.path()).unwrap();
    let loaded = load_gallery(dir.path()).unwrap();
    assert_eq!(loaded, gallery);
    let again = loaded.identify(&probe);
    assert_eq!(again.nearest, id.nearest);
    assert_eq!(again.distance, id.distance);
}
