//! Synthetic dense-correspondence dataset generation: parametric bodies posed
//! from motion capture, rendered through calibrated cameras with per-pixel
//! surface labels, composited with occluders, and scored with dense-pose metrics.

pub mod atlas;
pub mod binio;
pub mod body;
pub mod camera;
pub mod cli;
pub mod compositor;
pub mod dataset;
pub mod fsutil;
pub mod geometry;
pub mod math;
pub mod metrics;
pub mod mocap;
pub mod raster;
pub mod render;
pub mod toy;
