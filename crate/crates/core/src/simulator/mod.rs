//! Scripted meetings as a ground-truth source.
//!
//! A [`Scenario`] places people around the wearer on piecewise-linear
//! bearing, distance and head-yaw timelines. The simulator projects the
//! canonical face model through the fisheye camera to produce landmark
//! observations, renders per-identity textures for face identification,
//! produces shaken background frames for the stabilizer, and computes the
//! event and command logs a perfect pipeline would emit.
//!
//! Scenario files are line oriented:
//!
//! ```text
//! duration 8000          # ms
//! fps 30
//! fov 170                # degrees
//! resolution 2592 1944   # optional
//! noise 0                # landmark noise, px
//! jitter none            # or: jitter <amplitude px> <period frames>
//! participant Anna enter=0 exit=8000
//!   t=0 bearing=-30 distance=1200 yaw=0
//!   t=2000 bearing=-30 distance=1200 yaw=-30
//! participant unknown enter=1000 exit=8000
//!   t=0 bearing=25 distance=1500 yaw=60
//! id_request t=5000
//! ```

mod oracle;
mod random;
mod scenario;
mod synth;
pub mod texture;

use thiserror::Error;

pub use oracle::{ground_truth_events, ContactInterval, GroundTruth};
pub use random::{random_scenario, DECISION_MARGIN};
pub use scenario::{Jitter, Keyframe, Participant, Scenario};
pub use synth::{
    add_noise, noise_rng, project_face, scene_state, synthesize_observations, FacePlacement, SceneEntry,
    SyntheticFace,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid scenario: {0}")]
    Validation(String),
}
