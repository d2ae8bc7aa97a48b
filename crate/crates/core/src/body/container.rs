//! On-disk model container: `model.json` plus raw little-endian arrays.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{BodyModel, ModelError, RawBodyModel};
use crate::binio;
use crate::math::Vec3;

pub const MODEL_MANIFEST: &str = "model.json";
const FORMAT_TAG: &str = "corrgen-body-model";

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    format: String,
    version: u32,
    num_vertices: usize,
    num_faces: usize,
    num_joints: usize,
    num_shape: usize,
    num_pose_features: usize,
    parents: Vec<i64>,
    gender_tag: String,
    arrays: ArrayFiles,
}

#[derive(Debug, Serialize, Deserialize)]
struct ArrayFiles {
    template: String,
    faces: String,
    shape_dirs: String,
    pose_dirs: Option<String>,
    joint_regressor: String,
    skin_weights: String,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ModelError + '_ {
    move |source| {
        if source.kind() == std::io::ErrorKind::NotFound {
            ModelError::MissingFile(path.to_path_buf())
        } else {
            ModelError::Io {
                path: path.to_path_buf(),
                source,
            }
        }
    }
}

fn read_array(dir: &Path, name: &str, expected: usize, what: &'static str) -> Result<Vec<f64>, ModelError> {
    let path = dir.join(name);
    let values = binio::read_f32(&path).map_err(io_err(&path))?;
    if values.len() != expected {
        return Err(ModelError::DimensionMismatch {
            what,
            expected,
            found: values.len(),
        });
    }
    Ok(values)
}

/// Reads the container without validating model invariants.
pub fn load_raw_body_model(dir: &Path) -> Result<RawBodyModel, ModelError> {
    let manifest_path = dir.join(MODEL_MANIFEST);
    let text = std::fs::read_to_string(&manifest_path).map_err(io_err(&manifest_path))?;
    let m: Manifest = serde_json::from_str(&text).map_err(|e| ModelError::Manifest {
        path: manifest_path.clone(),
        message: e.to_string(),
    })?;
    if m.format != FORMAT_TAG {
        return Err(ModelError::Manifest {
            path: manifest_path,
            message: format!("unexpected format tag {:?}", m.format),
        });
    }
    if m.parents.len() != m.num_joints {
        return Err(ModelError::DimensionMismatch {
            what: "parents",
            expected: m.num_joints,
            found: m.parents.len(),
        });
    }
    let v = m.num_vertices;
    let template = read_array(dir, &m.arrays.template, v * 3, "template")?;
    let faces_path = dir.join(&m.arrays.faces);
    let faces_flat = binio::read_u32(&faces_path).map_err(io_err(&faces_path))?;
    if faces_flat.len() != m.num_faces * 3 {
        return Err(ModelError::DimensionMismatch {
            what: "faces",
            expected: m.num_faces * 3,
            found: faces_flat.len(),
        });
    }
    let shape_dirs = read_array(dir, &m.arrays.shape_dirs, v * 3 * m.num_shape, "shape_dirs")?;
    let pose_dirs = match &m.arrays.pose_dirs {
        Some(name) => Some(read_array(dir, name, v * 3 * m.num_pose_features, "pose_dirs")?),
        None => None,
    };
    // Weight and regressor files are read at their natural size so dimension
    // problems are reported by the invariant checks rather than here.
    let read_any = |name: &str| -> Result<Vec<f64>, ModelError> {
        let path = dir.join(name);
        binio::read_f32(&path).map_err(io_err(&path))
    };
    let joint_regressor = read_any(&m.arrays.joint_regressor)?;
    let skin_weights = read_any(&m.arrays.skin_weights)?;
    Ok(RawBodyModel {
        template: template.chunks(3).map(|c| Vec3::new(c[0], c[1], c[2])).collect(),
        faces: faces_flat.chunks(3).map(|c| [c[0], c[1], c[2]]).collect(),
        num_shape: m.num_shape,
        shape_dirs,
        pose_dirs,
        joint_regressor,
        skin_weights,
        parents: m.parents,
        gender_tag: m.gender_tag,
    })
}

/// Loads and validates a model container directory.
pub fn load_body_model(dir: &Path) -> Result<BodyModel, ModelError> {
    load_raw_body_model(dir)?.validate()
}

/// Writes a container; all floats are stored as `f32`.
pub fn save_body_model(model: &BodyModel, dir: &Path) -> Result<(), ModelError> {
    save_raw(&model.to_raw(), dir)
}

pub(crate) fn save_raw(raw: &RawBodyModel, dir: &Path) -> Result<(), ModelError> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let write = |name: &str, values: &[f64]| -> Result<(), ModelError> {
        let path: PathBuf = dir.join(name);
        binio::write_f32(&path, values.iter().copied()).map_err(io_err(&path))
    };
    let template: Vec<f64> = raw.template.iter().flat_map(|p| [p.x, p.y, p.z]).collect();
    write("template.f32", &template)?;
    let faces_path = dir.join("faces.u32");
    binio::write_u32(&faces_path, raw.faces.iter().flatten().copied()).map_err(io_err(&faces_path))?;
    write("shape_dirs.f32", &raw.shape_dirs)?;
    if let Some(pd) = &raw.pose_dirs {
        write("pose_dirs.f32", pd)?;
    }
    write("joint_regressor.f32", &raw.joint_regressor)?;
    write("skin_weights.f32", &raw.skin_weights)?;
    let j = raw.parents.len();
    let manifest = Manifest {
        format: FORMAT_TAG.into(),
        version: 1,
        num_vertices: raw.template.len(),
        num_faces: raw.faces.len(),
        num_joints: j,
        num_shape: raw.num_shape,
        num_pose_features: if raw.pose_dirs.is_some() { 9 * j.saturating_sub(1) } else { 0 },
        parents: raw.parents.clone(),
        gender_tag: raw.gender_tag.clone(),
        arrays: ArrayFiles {
            template: "template.f32".into(),
            faces: "faces.u32".into(),
            shape_dirs: "shape_dirs.f32".into(),
            pose_dirs: raw.pose_dirs.as_ref().map(|_| "pose_dirs.f32".into()),
            joint_regressor: "joint_regressor.f32".into(),
            skin_weights: "skin_weights.f32".into(),
        },
    };
    let path = dir.join(MODEL_MANIFEST);
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    std::fs::write(&path, text).map_err(io_err(&path))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_joint_raw() -> RawBodyModel {
        // A 2-joint, 8-shape-dimension tetrahedron; every value is f32-exact.
        let template = vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(0.0, 0.0, 1.0),
        ];
        RawBodyModel {
            template,
            faces: vec![[0, 2, 1], [0, 1, 3], [0, 3, 2], [1, 2, 3]],
            num_shape: 8,
            shape_dirs: (0..4 * 3 * 8).map(|i| (i % 7) as f64 * 0.125).collect(),
            pose_dirs: None,
            joint_regressor: vec![0.5, 0.5, 0.0, 0.0, 0.0, 0.0, 0.5, 0.5],
            skin_weights: vec![1.0, 0.0, 0.75, 0.25, 0.25, 0.75, 0.0, 1.0],
            parents: vec![-1, 0],
            gender_tag: "neutral".into(),
        }
    }

    #[test]
    fn round_trip_two_joint_container() {
        let dir = tempfile::tempdir().unwrap();
        let model = two_joint_raw().validate().unwrap();
        save_body_model(&model, dir.path()).unwrap();
        let loaded = load_body_model(dir.path()).unwrap();
        assert_eq!(loaded.num_joints(), 2);
        assert_eq!(loaded.num_shape(), 8);
        assert_eq!(loaded, model);
    }

    #[test]
    fn missing_file_reported() {
        let dir = tempfile::tempdir().unwrap();
        let model = two_joint_raw().validate().unwrap();
        save_body_model(&model, dir.path()).unwrap();
        std::fs::remove_file(dir.path().join("skin_weights.f32")).unwrap();
        assert!(matches!(load_body_model(dir.path()), Err(ModelError::MissingFile(_))));
        assert!(matches!(
            load_body_model(&dir.path().join("nope")),
            Err(ModelError::MissingFile(_))
        ));
    }

    #[test]
    fn denormalized_container_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let mut raw = two_joint_raw();
        raw.skin_weights[0] = 0.9;
        save_raw(&raw, dir.path()).unwrap();
        let err = load_body_model(dir.path()).unwrap_err();
        assert!(err.to_string().contains("weights not normalized"));
    }

    #[test]
    fn cyclic_container_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let mut raw = two_joint_raw();
        raw.parents = vec![1, 0];
        save_raw(&raw, dir.path()).unwrap();
        let err = load_body_model(dir.path()).unwrap_err();
        assert!(err.to_string().contains("kinematic cycle"));
    }

    #[test]
    fn truncated_weights_are_dimension_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let mut raw = two_joint_raw();
        raw.skin_weights.truncate(6);
        save_raw(&raw, dir.path()).unwrap();
        assert!(matches!(
            load_body_model(dir.path()),
            Err(ModelError::DimensionMismatch { .. })
        ));
    }
}
