//! Scene sampling, per-frame generation, annotation extraction, RLE masks and
//! COCO-DensePose interchange.

mod annotation;
mod coco;
mod config;
mod pipeline;
mod rle;
mod scene;

pub use annotation::{extract_annotation, DenseAnnotation, DensePoint, BOX_FRAME, DEFAULT_POINTS_PER_INSTANCE};
pub use coco::{coco_from_str, coco_to_string, read_coco, write_coco, CocoDataset, ImageMeta};
pub use config::{ClipSource, OcclusionConfig, RigConfig, SceneConfig, SubjectSampling};
pub use pipeline::{frame_files, frame_id, generate_frame, image_file_name, ClipPoses, FrameResult, Resources};
pub use rle::{rle_decode, rle_encode, RleMask};
pub use scene::{frame_rng, frame_seed_bytes, sample_scene, OccluderDraw, SceneCatalog, SceneSpec};

use std::path::PathBuf;

use thiserror::Error;

use crate::atlas::AtlasError;
use crate::body::ModelError;
use crate::camera::CameraError;
use crate::compositor::CompositorError;
use crate::geometry::GeometryError;
use crate::mocap::MocapError;
use crate::raster::RasterError;
use crate::render::RenderError;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("RLE counts sum to {sum}, expected {expected}")]
    RleLength { sum: u64, expected: u64 },
    #[error("malformed RLE string: {0}")]
    RleString(String),
    #[error("duplicate {kind} id {id}")]
    DuplicateId { kind: &'static str, id: u64 },
    #[error("annotation {annotation} refers to unknown image {image}")]
    UnknownImage { annotation: u64, image: u64 },
    #[error("annotation {id}: {message}")]
    Annotation { id: u64, message: String },
    #[error("{path}: {message}")]
    Json { path: String, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("instance mask is empty")]
    EmptyInstance,
    #[error("no {0} found")]
    EmptyResources(String),
    #[error("missing resource {0}")]
    MissingResource(PathBuf),
    #[error("invalid scene config: {0}")]
    Config(String),
    #[error("frame {frame}: {message}")]
    Invariant { frame: usize, message: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Atlas(#[from] AtlasError),
    #[error(transparent)]
    Camera(#[from] CameraError),
    #[error(transparent)]
    Mocap(#[from] MocapError),
    #[error(transparent)]
    Render(#[from] RenderError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Compositor(#[from] CompositorError),
    #[error(transparent)]
    Raster(#[from] RasterError),
}
