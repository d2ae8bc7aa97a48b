use std::sync::Arc;

use nalgebra::{Matrix3, Matrix4, Vector4};

use super::{BodyModel, ModelError, PoseParams, ShapeParams};
use crate::math::{rodrigues, Vec3};

/// A posed, world-space mesh sharing its topology with the model.
#[derive(Debug, Clone, PartialEq)]
pub struct PosedMesh {
    pub vertices: Vec<Vec3>,
    pub faces: Arc<[[u32; 3]]>,
    pub normals: Vec<Vec3>,
}

impl PosedMesh {
    /// Builds a mesh and its area-weighted vertex normals.
    pub fn new(vertices: Vec<Vec3>, faces: Arc<[[u32; 3]]>) -> Self {
        let normals = vertex_normals(&vertices, &faces);
        PosedMesh { vertices, faces, normals }
    }

    pub fn from_vecs(vertices: Vec<Vec3>, faces: Vec<[u32; 3]>) -> Self {
        Self::new(vertices, faces.into())
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn triangle(&self, face: usize) -> [Vec3; 3] {
        let [a, b, c] = self.faces[face];
        [self.vertices[a as usize], self.vertices[b as usize], self.vertices[c as usize]]
    }

    /// Applies a rigid transform `x -> r·x + t` to all vertices.
    pub fn transformed(&self, r: &Matrix3<f64>, t: &Vec3) -> PosedMesh {
        let vertices = self.vertices.iter().map(|v| r * v + t).collect();
        PosedMesh::new(vertices, self.faces.clone())
    }
}

/// Area-weighted vertex normals: the sum of un-normalized face cross products.
fn vertex_normals(vertices: &[Vec3], faces: &[[u32; 3]]) -> Vec<Vec3> {
    let mut acc = vec![Vec3::zeros(); vertices.len()];
    for f in faces {
        let [a, b, c] = f.map(|i| i as usize);
        let n = (vertices[b] - vertices[a]).cross(&(vertices[c] - vertices[a]));
        acc[a] += n;
        acc[b] += n;
        acc[c] += n;
    }
    acc.into_iter()
        .map(|n| {
            let len = n.norm();
            if len > 0.0 && len.is_finite() {
                n / len
            } else {
                Vec3::z()
            }
        })
        .collect()
}

/// `template + shape_dirs · beta`.
pub fn apply_shape(model: &BodyModel, shape: &ShapeParams) -> Result<Vec<Vec3>, ModelError> {
    let k = model.num_shape();
    if shape.beta.len() != k {
        return Err(ModelError::ShapeLength {
            expected: k,
            found: shape.beta.len(),
        });
    }
    let dirs = model.shape_dirs();
    Ok(model
        .template()
        .iter()
        .enumerate()
        .map(|(v, p)| {
            let mut out = *p;
            for c in 0..3 {
                let row = &dirs[(v * 3 + c) * k..(v * 3 + c + 1) * k];
                out[c] += row.iter().zip(&shape.beta).map(|(d, b)| d * b).sum::<f64>();
            }
            out
        })
        .collect())
}

/// Per-joint transforms produced by forward kinematics.
#[derive(Debug, Clone, PartialEq)]
pub struct JointTransforms {
    /// Rest joint locations regressed from the shaped vertices.
    pub rest_joints: Vec<Vec3>,
    /// Joint frame to world: `G_j`.
    pub global: Vec<Matrix4<f64>>,
    /// Rest pose to posed world: `G_j · G_j(rest)⁻¹`.
    pub skinning: Vec<Matrix4<f64>>,
}

impl JointTransforms {
    pub fn joint_positions(&self) -> Vec<Vec3> {
        self.global
            .iter()
            .map(|g| Vec3::new(g[(0, 3)], g[(1, 3)], g[(2, 3)]))
            .collect()
    }
}

pub(crate) fn homogeneous(r: &Matrix3<f64>, t: &Vec3) -> Matrix4<f64> {
    let mut m = Matrix4::identity();
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(r);
    m.fixed_view_mut::<3, 1>(0, 3).copy_from(t);
    m
}

fn regress_joints(model: &BodyModel, shaped: &[Vec3]) -> Vec<Vec3> {
    model
        .joint_regressor_rows()
        .iter()
        .map(|row| {
            row.iter()
                .fold(Vec3::zeros(), |acc, &(v, w)| acc + shaped[v as usize] * w)
        })
        .collect()
}

/// Chains each joint's rotation about its rest location down the kinematic tree.
pub fn forward_kinematics(
    model: &BodyModel,
    shaped_vertices: &[Vec3],
    pose: &PoseParams,
) -> Result<JointTransforms, ModelError> {
    pose.validate(model.num_joints())?;
    let rest = regress_joints(model, shaped_vertices);
    let mut global = vec![Matrix4::identity(); model.num_joints()];
    for &j in model.kinematic_order() {
        let r = rodrigues(&pose.joint_rotations[j]);
        global[j] = match model.parents()[j] {
            None => homogeneous(&r, &(rest[j] + pose.root_translation)),
            Some(p) => global[p] * homogeneous(&r, &(rest[j] - rest[p])),
        };
    }
    let skinning = global
        .iter()
        .zip(&rest)
        .map(|(g, jr)| g * homogeneous(&Matrix3::identity(), &-jr))
        .collect();
    Ok(JointTransforms {
        rest_joints: rest,
        global,
        skinning,
    })
}

/// Pose-corrective feature `vec(R_j − I)` over non-root joints, in joint index order.
pub fn pose_feature(model: &BodyModel, pose: &PoseParams) -> Vec<f64> {
    let mut feat = Vec::with_capacity(9 * model.num_joints().saturating_sub(1));
    for (j, parent) in model.parents().iter().enumerate() {
        if parent.is_none() {
            continue;
        }
        let d = rodrigues(&pose.joint_rotations[j]) - Matrix3::identity();
        for r in 0..3 {
            for c in 0..3 {
                feat.push(d[(r, c)]);
            }
        }
    }
    feat
}

/// Linear blend skinning, with pose blend-shapes applied first when present.
pub fn lbs_skin(
    model: &BodyModel,
    shaped_vertices: &[Vec3],
    transforms: &JointTransforms,
    pose: &PoseParams,
) -> PosedMesh {
    let nj = model.num_joints();
    let corrected: Vec<Vec3> = match model.pose_dirs() {
        None => shaped_vertices.to_vec(),
        Some(dirs) => {
            let feat = pose_feature(model, pose);
            let p = feat.len();
            shaped_vertices
                .iter()
                .enumerate()
                .map(|(v, x)| {
                    let mut out = *x;
                    for c in 0..3 {
                        let row = &dirs[(v * 3 + c) * p..(v * 3 + c + 1) * p];
                        out[c] += row.iter().zip(&feat).map(|(d, f)| d * f).sum::<f64>();
                    }
                    out
                })
                .collect()
        }
    };
    let weights = model.skin_weights();
    let vertices = corrected
        .iter()
        .enumerate()
        .map(|(v, x)| {
            let xh = Vector4::new(x.x, x.y, x.z, 1.0);
            let mut acc = Vector4::zeros();
            for (j, m) in transforms.skinning.iter().enumerate() {
                let w = weights[v * nj + j];
                if w != 0.0 {
                    acc += (m * xh) * w;
                }
            }
            Vec3::new(acc.x, acc.y, acc.z)
        })
        .collect();
    PosedMesh::new(vertices, model.faces().clone())
}

impl BodyModel {
    /// Shape, pose and skin in one call.
    pub fn posed(&self, shape: &ShapeParams, pose: &PoseParams) -> Result<(PosedMesh, JointTransforms), ModelError> {
        let shaped = apply_shape(self, shape)?;
        let transforms = forward_kinematics(self, &shaped, pose)?;
        let mesh = lbs_skin(self, &shaped, &transforms, pose);
        Ok((mesh, transforms))
    }
}
