//! Calibrated cameras: projection, viewing rays, lens distortion and sensor noise.

mod model;
mod rig;

pub use model::{look_at, CameraModel};
pub use rig::{add_sensor_noise, CameraRig, NoiseModel, RigSampling, SeedPolicy};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum CameraError {
    #[error("invalid camera: {0}")]
    InvalidCamera(String),
    #[error("invalid rig: {0}")]
    InvalidRig(String),
    #[error("undistortion diverged at normalized ({x}, {y})")]
    UndistortionDiverged { x: f64, y: f64 },
}
