//! Social cue extraction for a chest-worn fisheye camera.
//!
//! The pipeline stabilizes frames, estimates each visible face's head pose
//! and bearing, identifies it against an enrolled gallery, debounces
//! eye-contact into gaze events and arbitrates those events into stereo
//! speech, spearcons and vibrotactile belt pulses.

pub mod arbiter;
pub mod attention;
pub mod belt;
pub mod config;
pub mod eventlog;
pub mod faceid;
pub mod frame;
pub mod headpose;
pub mod metrics;
pub mod pipeline;
pub mod simulator;
pub mod stabilizer;
