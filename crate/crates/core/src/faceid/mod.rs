//! Open-set face identification with landmark-anchored LBP histograms.

mod chip;
mod gallery;
mod lbp;
mod store;

use thiserror::Error;

pub use chip::{chip_transform, normalize_face, similarity_from_two, FaceChip, CHIP_EYE_LEFT, CHIP_EYE_RIGHT, CHIP_SIZE};
pub use gallery::{validate_name, Gallery, Identification, IdentityLabel, UNKNOWN_TOKEN};
pub use lbp::{chi_square, extract_descriptor, uniform_table, LbpDescriptor, DESCRIPTOR_LEN, LBP_BINS, PATCH_SIZE};
pub use store::{decode_samples, encode_samples, load_gallery, save_gallery};

#[derive(Debug, Error)]
pub enum FaceIdError {
    #[error("outer eye corners coincide")]
    DegenerateLandmarks,
    #[error("an outer eye corner lies outside the frame")]
    EyeOutsideFrame,
    #[error("invalid identity name {0:?}")]
    InvalidName(String),
    #[error("rejection threshold must be positive and finite, got {0}")]
    InvalidThreshold(f64),
    #[error("corrupt gallery store: {0}")]
    CorruptStore(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl PartialEq for FaceIdError {
    fn eq(&self, other: &Self) -> bool {
        use FaceIdError::*;
        match (self, other) {
            (DegenerateLandmarks, DegenerateLandmarks) | (EyeOutsideFrame, EyeOutsideFrame) => true,
            (InvalidName(a), InvalidName(b)) | (CorruptStore(a), CorruptStore(b)) => a == b,
            (InvalidThreshold(a), InvalidThreshold(b)) => a == b,
            _ => false,
        }
    }
}
