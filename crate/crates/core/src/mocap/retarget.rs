use std::collections::HashSet;
use std::path::Path;

use nalgebra::UnitQuaternion;
use serde::{Deserialize, Serialize};

use super::{MocapError, MotionClip};
use crate::body::PoseParams;
use crate::math::{axis_angle_of, axis_angle_to_quaternion, quaternion_to_axis_angle, Vec3};

/// One source joint mapped onto a model joint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointMapping {
    pub source: String,
    pub target: usize,
    /// Output component `i` takes source component `axis_permutation[i]`.
    #[serde(default = "identity_perm")]
    pub axis_permutation: [usize; 3],
    #[serde(default = "unit_signs")]
    pub axis_signs: [f64; 3],
}

fn identity_perm() -> [usize; 3] {
    [0, 1, 2]
}

fn unit_signs() -> [f64; 3] {
    [1.0; 3]
}

/// Source-name to model-joint mapping, loaded from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetargetMap {
    pub num_joints: usize,
    pub joints: Vec<JointMapping>,
    /// Source joint whose position channels drive the root translation.
    #[serde(default)]
    pub translation_source: Option<String>,
    /// Multiplier taking clip units to meters.
    #[serde(default = "unit_scale")]
    pub translation_scale: f64,
}

fn unit_scale() -> f64 {
    1.0
}

impl JointMapping {
    fn correct(&self, v: &Vec3) -> Vec3 {
        let p = self.axis_permutation;
        Vec3::new(
            self.axis_signs[0] * v[p[0]],
            self.axis_signs[1] * v[p[1]],
            self.axis_signs[2] * v[p[2]],
        )
    }
}

impl RetargetMap {
    /// Identity mapping of joint `i` of the clip onto model joint `i`.
    pub fn identity(clip: &MotionClip) -> RetargetMap {
        RetargetMap {
            num_joints: clip.joints.len(),
            joints: clip
                .joints
                .iter()
                .enumerate()
                .map(|(i, j)| JointMapping {
                    source: j.name.clone(),
                    target: i,
                    axis_permutation: identity_perm(),
                    axis_signs: unit_signs(),
                })
                .collect(),
            translation_source: None,
            translation_scale: 1.0,
        }
    }

    pub fn validate(&self) -> Result<(), MocapError> {
        let mut seen = HashSet::new();
        for m in &self.joints {
            if m.target >= self.num_joints {
                return Err(MocapError::InvalidMap(format!(
                    "target {} of {:?} is not below {}",
                    m.target, m.source, self.num_joints
                )));
            }
            if !seen.insert(m.target) {
                return Err(MocapError::InvalidMap(format!("target {} mapped twice", m.target)));
            }
            let mut perm = m.axis_permutation;
            perm.sort_unstable();
            if perm != [0, 1, 2] {
                return Err(MocapError::InvalidMap(format!(
                    "axis permutation {:?} of {:?} is not a permutation",
                    m.axis_permutation, m.source
                )));
            }
            if m.axis_signs.iter().any(|s| s.abs() != 1.0) {
                return Err(MocapError::InvalidMap(format!("axis signs of {:?} must be ±1", m.source)));
            }
        }
        if !self.translation_scale.is_finite() {
            return Err(MocapError::InvalidMap("translation_scale must be finite".into()));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<RetargetMap, MocapError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let map: RetargetMap = serde_path_to_error::deserialize(de)
            .map_err(|e| MocapError::InvalidMap(format!("{}: {}", e.path(), e.inner())))?;
        map.validate()?;
        Ok(map)
    }

    pub fn load(path: &Path) -> Result<RetargetMap, MocapError> {
        let text = std::fs::read_to_string(path).map_err(|source| MocapError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        RetargetMap::from_json(&text)
    }
}

/// Converts one clip frame to model pose parameters.
///
/// Each mapped joint's Euler channels become an axis-angle vector, then the
/// map's axis permutation and signs are applied. Unmapped model joints stay at
/// identity.
pub fn retarget(clip: &MotionClip, frame_index: usize, map: &RetargetMap) -> Result<PoseParams, MocapError> {
    if frame_index >= clip.num_frames() {
        return Err(MocapError::FrameOutOfRange {
            index: frame_index,
            frames: clip.num_frames(),
        });
    }
    map.validate()?;
    let mut pose = PoseParams::identity(map.num_joints);
    for m in &map.joints {
        let src = clip
            .joint_index(&m.source)
            .ok_or_else(|| MocapError::UnknownSourceJoint(m.source.clone()))?;
        let aa = axis_angle_of(&clip.joint_rotation(frame_index, src));
        pose.joint_rotations[m.target] = m.correct(&aa);
    }
    if let Some(name) = &map.translation_source {
        let src = clip
            .joint_index(name)
            .ok_or_else(|| MocapError::UnknownSourceJoint(name.clone()))?;
        let p = clip.joint_position(frame_index, src) * map.translation_scale;
        pose.root_translation = match map.joints.iter().find(|m| &m.source == name) {
            Some(m) => m.correct(&p),
            None => p,
        };
    }
    Ok(pose)
}

/// Retargets every frame of a clip.
pub fn retarget_clip(clip: &MotionClip, map: &RetargetMap) -> Result<Vec<PoseParams>, MocapError> {
    (0..clip.num_frames()).map(|f| retarget(clip, f, map)).collect()
}

fn slerp(a: &Vec3, b: &Vec3, s: f64) -> Vec3 {
    let qa = axis_angle_to_quaternion(a);
    let mut qb = axis_angle_to_quaternion(b);
    if qa.coords.dot(&qb.coords) < 0.0 {
        qb = UnitQuaternion::new_unchecked(-qb.into_inner());
    }
    let q = qa.try_slerp(&qb, s, 1e-12).unwrap_or(qa);
    quaternion_to_axis_angle(&q)
}

/// Samples a pose sequence at `t_seconds`, clamping to the clip ends.
///
/// Rotations are slerped per joint and the root translation is interpolated
/// linearly. A time that lands on a frame (within 1e-9 frames) returns that
/// frame unchanged.
pub fn sample_pose(sequence: &[PoseParams], t_seconds: f64, frame_time: f64) -> Result<PoseParams, MocapError> {
    let last = sequence.len().checked_sub(1).ok_or(MocapError::EmptySequence)?;
    let f = if frame_time > 0.0 && t_seconds.is_finite() {
        (t_seconds / frame_time).clamp(0.0, last as f64)
    } else {
        0.0
    };
    let nearest = f.round();
    if (f - nearest).abs() < 1e-9 {
        return Ok(sequence[nearest as usize].clone());
    }
    let k = f.floor() as usize;
    let s = f - k as f64;
    let (a, b) = (&sequence[k], &sequence[k + 1]);
    Ok(PoseParams {
        joint_rotations: a
            .joint_rotations
            .iter()
            .zip(&b.joint_rotations)
            .map(|(ra, rb)| slerp(ra, rb, s))
            .collect(),
        root_translation: a.root_translation * (1.0 - s) + b.root_translation * s,
    })
}
