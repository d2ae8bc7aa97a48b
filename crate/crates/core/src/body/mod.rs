//! Parametric articulated body: shape blend-shapes, forward kinematics and
//! linear blend skinning.

mod container;
mod model;
mod skinning;

pub use container::{load_body_model, load_raw_body_model, save_body_model, MODEL_MANIFEST};
pub use model::{BodyModel, InvariantCheck, PoseParams, RawBodyModel, ShapeParams, DEFAULT_BETA_CLAMP};
pub use skinning::{apply_shape, forward_kinematics, lbs_skin, pose_feature, JointTransforms, PosedMesh};

use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("missing model file {0}")]
    MissingFile(PathBuf),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed model manifest {path}: {message}")]
    Manifest { path: PathBuf, message: String },
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("weights not normalized: vertex {vertex} sums to {sum}")]
    WeightsNotNormalized { vertex: usize, sum: f64 },
    #[error("negative skinning weight at vertex {vertex}, joint {joint}")]
    NegativeWeight { vertex: usize, joint: usize },
    #[error("joint regressor row {joint} sums to {sum}, expected 1")]
    RegressorNotNormalized { joint: usize, sum: f64 },
    #[error("kinematic cycle through joint {joint}")]
    KinematicCycle { joint: usize },
    #[error("kinematic tree must have exactly one root, found {roots}")]
    RootCount { roots: usize },
    #[error("parent index {parent} of joint {joint} out of range")]
    ParentOutOfRange { joint: usize, parent: i64 },
    #[error("face {face} references vertex {index} (vertex count {count})")]
    FaceIndexOutOfRange { face: usize, index: u32, count: usize },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("beta length {found} does not match model shape dimension {expected}")]
    ShapeLength { expected: usize, found: usize },
    #[error("|beta[{index}]| = {value} exceeds clamp {clamp}")]
    BetaOutOfRange { index: usize, value: f64, clamp: f64 },
    #[error("pose has {found} joint rotations, model has {expected} joints")]
    PoseLength { expected: usize, found: usize },
    #[error("pose contains non-finite values")]
    PoseNonFinite,
}
