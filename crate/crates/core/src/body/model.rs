use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::ModelError;
use crate::math::Vec3;

pub const DEFAULT_BETA_CLAMP: f64 = 5.0;
const WEIGHT_SUM_TOL: f64 = 1e-6;
const REGRESSOR_SUM_TOL: f64 = 1e-5;

/// Unvalidated model arrays, as read from a container.
///
/// Array layouts (all row-major):
/// `shape_dirs` is `V × 3 × K`, `pose_dirs` is `V × 3 × P` with `P = 9·(J − 1)`,
/// `joint_regressor` is `J × V`, `skin_weights` is `V × J`.
#[derive(Debug, Clone, PartialEq)]
pub struct RawBodyModel {
    pub template: Vec<Vec3>,
    pub faces: Vec<[u32; 3]>,
    pub num_shape: usize,
    pub shape_dirs: Vec<f64>,
    pub pose_dirs: Option<Vec<f64>>,
    pub joint_regressor: Vec<f64>,
    pub skin_weights: Vec<f64>,
    /// Parent joint per joint, `-1` for the root.
    pub parents: Vec<i64>,
    pub gender_tag: String,
}

/// Outcome of one load-time invariant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl InvariantCheck {
    pub fn from_result<E: std::fmt::Display>(name: &str, r: Result<(), E>) -> Self {
        match r {
            Ok(()) => InvariantCheck {
                name: name.to_string(),
                passed: true,
                detail: "ok".into(),
            },
            Err(e) => InvariantCheck {
                name: name.to_string(),
                passed: false,
                detail: e.to_string(),
            },
        }
    }
}

impl RawBodyModel {
    pub fn num_vertices(&self) -> usize {
        self.template.len()
    }

    pub fn num_joints(&self) -> usize {
        self.parents.len()
    }

    fn check_dimensions(&self) -> Result<(), ModelError> {
        let v = self.num_vertices();
        let j = self.num_joints();
        let expect = |what, expected: usize, found: usize| {
            if expected == found {
                Ok(())
            } else {
                Err(ModelError::DimensionMismatch { what, expected, found })
            }
        };
        if j == 0 {
            return Err(ModelError::DimensionMismatch {
                what: "joint count",
                expected: 1,
                found: 0,
            });
        }
        expect("shape_dirs", v * 3 * self.num_shape, self.shape_dirs.len())?;
        if let Some(pd) = &self.pose_dirs {
            expect("pose_dirs", v * 3 * 9 * (j - 1), pd.len())?;
        }
        expect("joint_regressor", j * v, self.joint_regressor.len())?;
        expect("skin_weights (J columns vs parents)", v * j, self.skin_weights.len())
    }

    fn check_finite(&self) -> Result<(), ModelError> {
        if !self.template.iter().all(|p| p.iter().all(|c| c.is_finite())) {
            return Err(ModelError::NonFinite("template"));
        }
        let arrays: [(&'static str, &[f64]); 3] = [
            ("shape_dirs", &self.shape_dirs),
            ("joint_regressor", &self.joint_regressor),
            ("skin_weights", &self.skin_weights),
        ];
        for (name, a) in arrays {
            if !a.iter().all(|x| x.is_finite()) {
                return Err(ModelError::NonFinite(name));
            }
        }
        if let Some(pd) = &self.pose_dirs {
            if !pd.iter().all(|x| x.is_finite()) {
                return Err(ModelError::NonFinite("pose_dirs"));
            }
        }
        Ok(())
    }

    fn check_faces(&self) -> Result<(), ModelError> {
        let count = self.num_vertices();
        for (face, tri) in self.faces.iter().enumerate() {
            for &index in tri {
                if index as usize >= count {
                    return Err(ModelError::FaceIndexOutOfRange { face, index, count });
                }
            }
        }
        Ok(())
    }

    fn check_weights_nonnegative(&self) -> Result<(), ModelError> {
        let j = self.num_joints();
        for (i, w) in self.skin_weights.iter().enumerate() {
            if *w < 0.0 {
                return Err(ModelError::NegativeWeight {
                    vertex: i / j,
                    joint: i % j,
                });
            }
        }
        Ok(())
    }

    fn check_weights_normalized(&self) -> Result<(), ModelError> {
        let j = self.num_joints();
        for (vertex, row) in self.skin_weights.chunks(j).enumerate() {
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
                return Err(ModelError::WeightsNotNormalized { vertex, sum });
            }
        }
        Ok(())
    }

    fn check_regressor(&self) -> Result<(), ModelError> {
        let v = self.num_vertices();
        for (joint, row) in self.joint_regressor.chunks(v.max(1)).enumerate() {
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > REGRESSOR_SUM_TOL {
                return Err(ModelError::RegressorNotNormalized { joint, sum });
            }
        }
        Ok(())
    }

    fn check_tree(&self) -> Result<Vec<usize>, ModelError> {
        kinematic_order(&self.parents)
    }

    /// Every load-time invariant, evaluated independently.
    pub fn checks(&self) -> Vec<InvariantCheck> {
        let dims = self.check_dimensions();
        let dims_ok = dims.is_ok();
        let mut out = vec![InvariantCheck::from_result("dimensions", dims)];
        out.push(InvariantCheck::from_result("finite_values", self.check_finite()));
        out.push(InvariantCheck::from_result("faces_valid", self.check_faces()));
        if dims_ok {
            out.push(InvariantCheck::from_result(
                "weights_nonnegative",
                self.check_weights_nonnegative(),
            ));
            out.push(InvariantCheck::from_result("weights_normalized", self.check_weights_normalized()));
            out.push(InvariantCheck::from_result("regressor_normalized", self.check_regressor()));
        }
        out.push(InvariantCheck::from_result("kinematic_tree", self.check_tree().map(|_| ())));
        out
    }

    /// Validates every invariant and builds the immutable model.
    pub fn validate(self) -> Result<BodyModel, ModelError> {
        self.check_dimensions()?;
        self.check_finite()?;
        self.check_faces()?;
        self.check_weights_nonnegative()?;
        self.check_weights_normalized()?;
        self.check_regressor()?;
        let order = self.check_tree()?;

        let v = self.num_vertices();
        let regressor_rows = self
            .joint_regressor
            .chunks(v)
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|(_, w)| **w != 0.0)
                    .map(|(i, w)| (i as u32, *w))
                    .collect()
            })
            .collect();
        let parents = self
            .parents
            .iter()
            .map(|&p| if p < 0 { None } else { Some(p as usize) })
            .collect();
        Ok(BodyModel {
            template: self.template,
            faces: self.faces.into(),
            num_shape: self.num_shape,
            shape_dirs: self.shape_dirs,
            pose_dirs: self.pose_dirs,
            regressor_dense: self.joint_regressor,
            regressor_rows,
            skin_weights: self.skin_weights,
            parents,
            order,
            gender_tag: self.gender_tag,
        })
    }
}

/// Parents-before-children order; errors on cycles or a forest.
fn kinematic_order(parents: &[i64]) -> Result<Vec<usize>, ModelError> {
    let n = parents.len();
    for (joint, &p) in parents.iter().enumerate() {
        if p >= n as i64 || p < -1 {
            return Err(ModelError::ParentOutOfRange { joint, parent: p });
        }
    }
    // Walk every joint toward the root; a walk longer than n revisits a joint.
    for start in 0..n {
        let mut cur = start;
        let mut steps = 0;
        while parents[cur] >= 0 {
            cur = parents[cur] as usize;
            steps += 1;
            if steps > n || cur == start {
                return Err(ModelError::KinematicCycle { joint: start });
            }
        }
    }
    let roots = parents.iter().filter(|&&p| p < 0).count();
    if roots != 1 {
        return Err(ModelError::RootCount { roots });
    }
    let mut depth = vec![0usize; n];
    for (j, d) in depth.iter_mut().enumerate() {
        let mut cur = j;
        while parents[cur] >= 0 {
            cur = parents[cur] as usize;
            *d += 1;
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&j| (depth[j], j));
    Ok(order)
}

/// A validated, immutable body model.
#[derive(Debug, Clone, PartialEq)]
pub struct BodyModel {
    template: Vec<Vec3>,
    faces: Arc<[[u32; 3]]>,
    num_shape: usize,
    shape_dirs: Vec<f64>,
    pose_dirs: Option<Vec<f64>>,
    regressor_dense: Vec<f64>,
    regressor_rows: Vec<Vec<(u32, f64)>>,
    skin_weights: Vec<f64>,
    parents: Vec<Option<usize>>,
    order: Vec<usize>,
    gender_tag: String,
}

impl BodyModel {
    pub fn num_vertices(&self) -> usize {
        self.template.len()
    }

    pub fn num_joints(&self) -> usize {
        self.parents.len()
    }

    pub fn num_shape(&self) -> usize {
        self.num_shape
    }

    pub fn template(&self) -> &[Vec3] {
        &self.template
    }

    pub fn faces(&self) -> &Arc<[[u32; 3]]> {
        &self.faces
    }

    /// `V × 3 × K` row-major.
    pub fn shape_dirs(&self) -> &[f64] {
        &self.shape_dirs
    }

    pub fn pose_dirs(&self) -> Option<&[f64]> {
        self.pose_dirs.as_deref()
    }

    pub fn joint_regressor_rows(&self) -> &[Vec<(u32, f64)>] {
        &self.regressor_rows
    }

    /// `V × J` row-major.
    pub fn skin_weights(&self) -> &[f64] {
        &self.skin_weights
    }

    pub fn weight(&self, vertex: usize, joint: usize) -> f64 {
        self.skin_weights[vertex * self.num_joints() + joint]
    }

    pub fn parents(&self) -> &[Option<usize>] {
        &self.parents
    }

    pub fn root(&self) -> usize {
        self.order[0]
    }

    /// Joints ordered so that every parent precedes its children.
    pub fn kinematic_order(&self) -> &[usize] {
        &self.order
    }

    pub fn gender_tag(&self) -> &str {
        &self.gender_tag
    }

    /// Back to plain arrays (inverse of [`RawBodyModel::validate`]).
    pub fn to_raw(&self) -> RawBodyModel {
        RawBodyModel {
            template: self.template.clone(),
            faces: self.faces.to_vec(),
            num_shape: self.num_shape,
            shape_dirs: self.shape_dirs.clone(),
            pose_dirs: self.pose_dirs.clone(),
            joint_regressor: self.regressor_dense.clone(),
            skin_weights: self.skin_weights.clone(),
            parents: self
                .parents
                .iter()
                .map(|p| p.map(|p| p as i64).unwrap_or(-1))
                .collect(),
            gender_tag: self.gender_tag.clone(),
        }
    }
}

/// Shape blend-shape coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeParams {
    pub beta: Vec<f64>,
}

impl ShapeParams {
    pub fn zeros(k: usize) -> Self {
        ShapeParams { beta: vec![0.0; k] }
    }

    /// Checked constructor: finite, `|beta_k| <= clamp`.
    pub fn new(beta: Vec<f64>, clamp: f64) -> Result<Self, ModelError> {
        for (index, &value) in beta.iter().enumerate() {
            if !value.is_finite() || value.abs() > clamp {
                return Err(ModelError::BetaOutOfRange { index, value, clamp });
            }
        }
        Ok(ShapeParams { beta })
    }

    /// Saturating constructor used when sampling.
    pub fn clamped(beta: Vec<f64>, clamp: f64) -> Self {
        ShapeParams {
            beta: beta
                .into_iter()
                .map(|b| if b.is_finite() { b.clamp(-clamp, clamp) } else { 0.0 })
                .collect(),
        }
    }
}

/// Per-joint axis-angle rotations plus a root translation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoseParams {
    pub joint_rotations: Vec<Vec3>,
    pub root_translation: Vec3,
}

impl PoseParams {
    pub fn identity(num_joints: usize) -> Self {
        PoseParams {
            joint_rotations: vec![Vec3::zeros(); num_joints],
            root_translation: Vec3::zeros(),
        }
    }

    pub fn validate(&self, num_joints: usize) -> Result<(), ModelError> {
        if self.joint_rotations.len() != num_joints {
            return Err(ModelError::PoseLength {
                expected: num_joints,
                found: self.joint_rotations.len(),
            });
        }
        let finite = self
            .joint_rotations
            .iter()
            .chain(std::iter::once(&self.root_translation))
            .all(|v| v.iter().all(|c| c.is_finite()));
        if finite {
            Ok(())
        } else {
            Err(ModelError::PoseNonFinite)
        }
    }

    /// Reduces every rotation angle into `[0, π]` without changing the rotation.
    pub fn canonicalize(&mut self) {
        use std::f64::consts::{PI, TAU};
        for r in &mut self.joint_rotations {
            let theta = r.norm();
            if theta <= PI {
                continue;
            }
            let axis = *r / theta;
            let mut a = theta % TAU;
            if a > PI {
                a -= TAU;
            }
            *r = axis * a;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_raw() -> RawBodyModel {
        RawBodyModel {
            template: vec![Vec3::new(0.0, 0.0, 0.0), Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0)],
            faces: vec![[0, 1, 2]],
            num_shape: 1,
            shape_dirs: vec![0.0; 9],
            pose_dirs: None,
            joint_regressor: vec![1.0, 0.0, 0.0, 0.0, 0.5, 0.5],
            skin_weights: vec![1.0, 0.0, 0.0, 1.0, 0.5, 0.5],
            parents: vec![-1, 0],
            gender_tag: "neutral".into(),
        }
    }

    #[test]
    fn valid_model_passes() {
        let m = tiny_raw().validate().unwrap();
        assert_eq!(m.num_joints(), 2);
        assert_eq!(m.root(), 0);
        assert!(tiny_raw().checks().iter().all(|c| c.passed));
    }

    #[test]
    fn denormalized_weights_rejected() {
        let mut raw = tiny_raw();
        raw.skin_weights[0] = 0.9;
        let err = raw.clone().validate().unwrap_err();
        assert!(err.to_string().contains("weights not normalized"), "{err}");
        let failed: Vec<_> = raw.checks().into_iter().filter(|c| !c.passed).collect();
        assert_eq!(failed.len(), 1);
        assert_eq!(failed[0].name, "weights_normalized");
    }

    #[test]
    fn cycle_rejected() {
        let mut raw = tiny_raw();
        raw.parents = vec![1, 0];
        let err = raw.validate().unwrap_err();
        assert!(err.to_string().contains("kinematic cycle"), "{err}");
    }

    #[test]
    fn forest_rejected() {
        let mut raw = tiny_raw();
        raw.parents = vec![-1, -1];
        assert!(matches!(raw.validate(), Err(ModelError::RootCount { roots: 2 })));
    }

    #[test]
    fn bad_face_rejected() {
        let mut raw = tiny_raw();
        raw.faces.push([0, 1, 7]);
        assert!(matches!(raw.validate(), Err(ModelError::FaceIndexOutOfRange { face: 1, index: 7, .. })));
    }

    #[test]
    fn weight_columns_must_match_joints() {
        let mut raw = tiny_raw();
        raw.parents = vec![-1, 0, 1];
        assert!(matches!(raw.validate(), Err(ModelError::DimensionMismatch { .. })));
    }

    #[test]
    fn beta_clamp() {
        assert!(ShapeParams::new(vec![4.9, -5.0], 5.0).is_ok());
        assert!(ShapeParams::new(vec![5.1], 5.0).is_err());
        assert_eq!(ShapeParams::clamped(vec![9.0, -9.0], 5.0).beta, vec![5.0, -5.0]);
    }

    #[test]
    fn canonicalize_keeps_rotation() {
        let mut p = PoseParams::identity(1);
        p.joint_rotations[0] = Vec3::new(0.0, 0.0, 5.0);
        let before = crate::math::rodrigues(&p.joint_rotations[0]);
        p.canonicalize();
        assert!(p.joint_rotations[0].norm() <= std::f64::consts::PI + 1e-12);
        let after = crate::math::rodrigues(&p.joint_rotations[0]);
        assert!((before - after).abs().max() < 1e-12);
    }
}
