//! Motion capture ingestion: BVH clips, retargeting onto model joints, and
//! continuous-time pose sampling.

mod bvh;
mod retarget;

pub use bvh::{parse_bvh, write_bvh, BvhJoint, Channel, MotionClip};
pub use retarget::{retarget, retarget_clip, sample_pose, JointMapping, RetargetMap};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum MocapError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: unsupported channel {token}")]
    UnsupportedChannel { line: usize, token: String },
    #[error("frame {frame} (line {line}) has {found} values, expected {expected}")]
    ChannelCount {
        frame: usize,
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("header declares {declared} frames but {found} were found")]
    FrameCount { declared: usize, found: usize },
    #[error("frame index {index} out of range for clip with {frames} frames")]
    FrameOutOfRange { index: usize, frames: usize },
    #[error("cannot sample an empty pose sequence")]
    EmptySequence,
    #[error("invalid retarget map: {0}")]
    InvalidMap(String),
    #[error("retarget map names joint {0:?} which the clip does not contain")]
    UnknownSourceJoint(String),
    #[error("reading {path}: {source}")]
    Io {
        path: std::path::PathBuf,
        source: std::io::Error,
    },
}

/// Reads and parses a BVH file.
pub fn load_bvh(path: &std::path::Path) -> Result<MotionClip, MocapError> {
    let text = std::fs::read_to_string(path).map_err(|source| MocapError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_bvh(&text)
}
