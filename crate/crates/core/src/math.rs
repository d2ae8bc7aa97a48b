//! Small geometric helpers shared across modules.

use nalgebra::{Isometry3, Matrix3, Quaternion, Translation3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

pub type Vec3 = Vector3<f64>;

/// A half-line with unit direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub origin: Vec3,
    pub dir: Vec3,
}

impl Ray {
    pub fn new(origin: Vec3, dir: Vec3) -> Self {
        Ray { origin, dir }
    }

    pub fn at(&self, t: f64) -> Vec3 {
        self.origin + self.dir * t
    }
}

/// Rotation matrix for an axis-angle vector (Rodrigues' formula).
pub fn rodrigues(axis_angle: &Vec3) -> Matrix3<f64> {
    let theta = axis_angle.norm();
    if theta < 1e-300 {
        return Matrix3::identity();
    }
    let k = axis_angle / theta;
    let kx = Matrix3::new(0.0, -k.z, k.y, k.z, 0.0, -k.x, -k.y, k.x, 0.0);
    Matrix3::identity() + kx * theta.sin() + kx * kx * (1.0 - theta.cos())
}

/// Axis-angle vector of a rotation matrix, with angle in `[0, π]`.
pub fn axis_angle_of(r: &Matrix3<f64>) -> Vec3 {
    let q = UnitQuaternion::from_matrix(r);
    quaternion_to_axis_angle(&q)
}

pub fn quaternion_to_axis_angle(q: &UnitQuaternion<f64>) -> Vec3 {
    // Pick the hemisphere with w >= 0 so the angle lands in [0, π].
    let q = if q.w < 0.0 {
        UnitQuaternion::new_unchecked(-q.into_inner())
    } else {
        *q
    };
    let v = q.imag();
    let s = v.norm();
    if s < 1e-300 {
        return Vec3::zeros();
    }
    let angle = 2.0 * s.atan2(q.w);
    v * (angle / s)
}

pub fn axis_angle_to_quaternion(aa: &Vec3) -> UnitQuaternion<f64> {
    let theta = aa.norm();
    if theta < 1e-300 {
        return UnitQuaternion::identity();
    }
    let half = 0.5 * theta;
    let v = aa * (half.sin() / theta);
    UnitQuaternion::new_unchecked(Quaternion::new(half.cos(), v.x, v.y, v.z))
}

/// Serializable rigid transform: unit quaternion `[w, x, y, z]` plus translation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RigidTransform {
    pub rotation: [f64; 4],
    pub translation: [f64; 3],
}

impl RigidTransform {
    pub fn identity() -> Self {
        RigidTransform {
            rotation: [1.0, 0.0, 0.0, 0.0],
            translation: [0.0; 3],
        }
    }

    pub fn from_isometry(iso: &Isometry3<f64>) -> Self {
        let q = iso.rotation.into_inner();
        let t = iso.translation.vector;
        RigidTransform {
            rotation: [q.w, q.i, q.j, q.k],
            translation: [t.x, t.y, t.z],
        }
    }

    pub fn to_isometry(&self) -> Isometry3<f64> {
        let [w, x, y, z] = self.rotation;
        let q = UnitQuaternion::from_quaternion(Quaternion::new(w, x, y, z));
        let [tx, ty, tz] = self.translation;
        Isometry3::from_parts(Translation3::new(tx, ty, tz), q)
    }

    pub fn is_finite(&self) -> bool {
        self.rotation.iter().chain(self.translation.iter()).all(|v| v.is_finite())
    }
}

/// Rounds to six significant decimal digits, the float convention of every
/// text format this crate writes.
pub fn round_sig6(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.5e}", x).parse().unwrap_or(x)
}

/// Round-trips a value through `f32`.
pub fn f32_exact(x: f64) -> f64 {
    x as f32 as f64
}
