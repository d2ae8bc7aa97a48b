use nalgebra::{Isometry3, Matrix3, Point3, Rotation3, UnitQuaternion};
use serde::{Deserialize, Serialize};

use super::CameraError;
use crate::math::{Ray, RigidTransform, Vec3};

/// Pinhole camera with Brown–Conrady distortion.
///
/// The camera frame follows the OpenCV convention: x right, y down, z forward.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraModel {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
    #[serde(default)]
    pub k1: f64,
    #[serde(default)]
    pub k2: f64,
    #[serde(default)]
    pub p1: f64,
    #[serde(default)]
    pub p2: f64,
    pub world_from_camera: RigidTransform,
    pub near: f64,
    pub far: f64,
}

const UNDISTORT_ITERS: usize = 20;
const UNDISTORT_TOL: f64 = 1e-10;

impl CameraModel {
    /// Distortion-free camera at the world origin looking down +z.
    pub fn pinhole(fx: f64, fy: f64, cx: f64, cy: f64, width: usize, height: usize) -> Self {
        CameraModel {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
            k1: 0.0,
            k2: 0.0,
            p1: 0.0,
            p2: 0.0,
            world_from_camera: RigidTransform::identity(),
            near: 0.01,
            far: 1000.0,
        }
    }

    pub fn with_pose(mut self, world_from_camera: RigidTransform) -> Self {
        self.world_from_camera = world_from_camera;
        self
    }

    pub fn validate(&self) -> Result<(), CameraError> {
        let bad = |m: &str| Err(CameraError::InvalidCamera(m.to_string()));
        let all_finite = [self.fx, self.fy, self.cx, self.cy, self.k1, self.k2, self.p1, self.p2, self.near, self.far]
            .iter()
            .all(|v| v.is_finite());
        if !all_finite || !self.world_from_camera.is_finite() {
            return bad("non-finite parameter");
        }
        if self.fx <= 0.0 || self.fy <= 0.0 {
            return bad("focal lengths must be positive");
        }
        if self.width == 0 || self.height == 0 {
            return bad("image size must be at least 1x1");
        }
        if !(0.0 < self.near && self.near < self.far) {
            return bad("clip planes must satisfy 0 < near < far");
        }
        let q = self.world_from_camera.rotation;
        let n = q.iter().map(|c| c * c).sum::<f64>().sqrt();
        if (n - 1.0).abs() > 1e-6 {
            return bad("rotation quaternion is not unit length");
        }
        Ok(())
    }

    pub fn world_from_camera(&self) -> Isometry3<f64> {
        self.world_from_camera.to_isometry()
    }

    pub fn center(&self) -> Vec3 {
        Vec3::from(self.world_from_camera.translation)
    }

    pub fn to_camera(&self, p: &Vec3) -> Vec3 {
        self.world_from_camera()
            .inverse_transform_point(&Point3::from(*p))
            .coords
    }

    /// Largest squared normalized radius on which radial distortion is monotone.
    pub fn monotone_radius_sq(&self) -> f64 {
        // d/dr [r (1 + k1 r² + k2 r⁴)] = 1 + 3 k1 s + 5 k2 s² with s = r².
        let (a, b) = (5.0 * self.k2, 3.0 * self.k1);
        let roots: Vec<f64> = if a.abs() < 1e-300 {
            if b < 0.0 {
                vec![-1.0 / b]
            } else {
                vec![]
            }
        } else {
            let disc = b * b - 4.0 * a;
            if disc < 0.0 {
                vec![]
            } else {
                let sq = disc.sqrt();
                vec![(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)]
            }
        };
        roots.into_iter().filter(|s| *s > 0.0).fold(f64::INFINITY, f64::min)
    }

    /// Largest distorted radius the radial model reaches inside its monotone range.
    pub fn max_distorted_radius(&self) -> f64 {
        let s = self.monotone_radius_sq();
        if s.is_infinite() {
            return f64::INFINITY;
        }
        s.sqrt() * (1.0 + self.k1 * s + self.k2 * s * s)
    }

    /// Normalized radius of the farthest image corner.
    pub fn corner_radius(&self) -> f64 {
        let (w, h) = (self.width as f64, self.height as f64);
        [(0.0, 0.0), (w, 0.0), (0.0, h), (w, h)]
            .iter()
            .map(|&(u, v)| (((u - self.cx) / self.fx).powi(2) + ((v - self.cy) / self.fy).powi(2)).sqrt())
            .fold(0.0, f64::max)
    }

    /// Whether every pixel has a viewing ray, with `margin` to spare on the
    /// radial range (tangential terms are assumed small).
    pub fn covers_image(&self, margin: f64) -> bool {
        self.max_distorted_radius() >= (1.0 + margin) * self.corner_radius()
    }

    /// Applies lens distortion to normalized coordinates.
    pub fn distort(&self, x: f64, y: f64) -> (f64, f64) {
        let r2 = x * x + y * y;
        let radial = 1.0 + self.k1 * r2 + self.k2 * r2 * r2;
        let xd = x * radial + 2.0 * self.p1 * x * y + self.p2 * (r2 + 2.0 * x * x);
        let yd = y * radial + self.p1 * (r2 + 2.0 * y * y) + 2.0 * self.p2 * x * y;
        (xd, yd)
    }

    /// Inverts [`distort`](Self::distort): the radial part is solved by
    /// bisection inside the monotone range, then Newton steps on the full
    /// model absorb the tangential terms.
    pub fn undistort(&self, xd: f64, yd: f64) -> Result<(f64, f64), CameraError> {
        let diverged = || CameraError::UndistortionDiverged { x: xd, y: yd };
        if self.k1 == 0.0 && self.k2 == 0.0 && self.p1 == 0.0 && self.p2 == 0.0 {
            return Ok((xd, yd));
        }
        let limit = self.monotone_radius_sq();
        let radial_of = |r: f64| r * (1.0 + self.k1 * r * r + self.k2 * r.powi(4));
        let rd = (xd * xd + yd * yd).sqrt();
        let (mut x, mut y) = if rd == 0.0 {
            (0.0, 0.0)
        } else {
            let mut hi = if limit.is_finite() { limit.sqrt() } else { rd.max(1e-12) };
            while !limit.is_finite() && radial_of(hi) < rd {
                hi *= 2.0;
                if hi > 1e6 {
                    return Err(diverged());
                }
            }
            if !(radial_of(hi) >= rd) {
                return Err(diverged());
            }
            let mut lo = 0.0;
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if radial_of(mid) < rd {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let r = 0.5 * (lo + hi);
            (xd * r / rd, yd * r / rd)
        };
        for _ in 0..UNDISTORT_ITERS {
            let (fx, fy) = self.distort(x, y);
            let (ex, ey) = (fx - xd, fy - yd);
            if ex.abs().max(ey.abs()) < UNDISTORT_TOL * 1e-3 {
                break;
            }
            let r2 = x * x + y * y;
            let radial = 1.0 + self.k1 * r2 + self.k2 * r2 * r2;
            let g = 2.0 * self.k1 + 4.0 * self.k2 * r2;
            let (p1, p2) = (self.p1, self.p2);
            let a = radial + g * x * x + 2.0 * p1 * y + 6.0 * p2 * x;
            let b = g * x * y + 2.0 * p1 * x + 2.0 * p2 * y;
            let d = radial + g * y * y + 6.0 * p1 * y + 2.0 * p2 * x;
            let det = a * d - b * b;
            if det.abs() < 1e-300 {
                break;
            }
            x -= (d * ex - b * ey) / det;
            y -= (a * ey - b * ex) / det;
        }
        let (rx, ry) = self.distort(x, y);
        let residual = (rx - xd).abs().max((ry - yd).abs());
        if !residual.is_finite() || residual > 1e-9 || x * x + y * y >= limit {
            return Err(diverged());
        }
        Ok((x, y))
    }

    /// Pixel coordinates of a camera-frame point, or `None` when it is behind the
    /// near plane or outside the monotone range of the distortion model.
    pub fn project_camera_point(&self, pc: &Vec3) -> Option<(f64, f64)> {
        if !(pc.z > self.near) {
            return None;
        }
        let x = pc.x / pc.z;
        let y = pc.y / pc.z;
        if x * x + y * y >= self.monotone_radius_sq() {
            return None;
        }
        let (xd, yd) = self.distort(x, y);
        Some((self.fx * xd + self.cx, self.fy * yd + self.cy))
    }

    /// Projects a world point to pixel coordinates; may fall outside the image.
    pub fn project(&self, p: &Vec3) -> Option<(f64, f64)> {
        self.project_camera_point(&self.to_camera(p))
    }

    /// World-space viewing ray through a pixel position.
    pub fn pixel_ray(&self, u: f64, v: f64) -> Result<Ray, CameraError> {
        let (x, y) = self.undistort((u - self.cx) / self.fx, (v - self.cy) / self.fy)?;
        let iso = self.world_from_camera();
        let dir = iso.rotation * Vec3::new(x, y, 1.0).normalize();
        Ok(Ray::new(iso.translation.vector, dir))
    }

    pub fn in_image(&self, u: f64, v: f64) -> bool {
        u >= 0.0 && v >= 0.0 && u < self.width as f64 && v < self.height as f64
    }
}

/// Camera pose at `eye` looking at `target`, with image-up along `up`.
pub fn look_at(eye: &Vec3, target: &Vec3, up: &Vec3) -> RigidTransform {
    let z = (target - eye).normalize();
    let x = z.cross(up).normalize();
    let y = z.cross(&x);
    let r = Matrix3::from_columns(&[x, y, z]);
    let q = UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(r));
    RigidTransform::from_isometry(&Isometry3::from_parts((*eye).into(), q))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cam() -> CameraModel {
        CameraModel::pinhole(500.0, 500.0, 320.0, 240.0, 640, 480)
    }

    #[test]
    fn principal_axis_hits_principal_point() {
        let mut c = cam();
        c.k1 = -0.2;
        c.p1 = 0.01;
        assert_eq!(c.project(&Vec3::new(0.0, 0.0, 3.0)), Some((320.0, 240.0)));
        let ray = c.pixel_ray(320.0, 240.0).unwrap();
        assert!((ray.dir - Vec3::z()).norm() < 1e-12);
    }

    #[test]
    fn similar_triangles() {
        let (u, v) = cam().project(&Vec3::new(0.1, 0.0, 1.0)).unwrap();
        assert!((u - 370.0).abs() < 1e-12);
        assert_eq!(v, 240.0);
    }

    #[test]
    fn radial_polynomial() {
        let mut c = cam();
        c.k1 = -0.2;
        let (xd, _) = c.distort(0.1, 0.0);
        assert!((xd - 0.0998).abs() < 1e-15);
        let (u, _) = c.project(&Vec3::new(0.1, 0.0, 1.0)).unwrap();
        assert!((u - (500.0 * 0.0998 + 320.0)).abs() < 1e-9);
    }

    #[test]
    fn behind_near_plane_is_none() {
        assert_eq!(cam().project(&Vec3::new(0.0, 0.0, -1.0)), None);
        assert_eq!(cam().project(&Vec3::new(0.0, 0.0, 0.005)), None);
    }

    #[test]
    fn zero_distortion_is_identity() {
        let c = cam();
        assert_eq!(c.distort(0.3, -0.7), (0.3, -0.7));
    }

    #[test]
    fn ray_round_trip() {
        let mut c = cam();
        c.world_from_camera = look_at(&Vec3::new(1.0, 1.0, 3.0), &Vec3::new(0.0, 0.9, 0.0), &Vec3::y());
        let p = Vec3::new(0.2, 1.3, 0.1);
        let (u, v) = c.project(&p).unwrap();
        let ray = c.pixel_ray(u, v).unwrap();
        let t = (p - ray.origin).dot(&ray.dir);
        assert!((ray.at(t) - p).norm() < 1e-6);
    }

    #[test]
    fn undistort_inverts_distort() {
        let mut c = cam();
        c.k1 = -0.25;
        c.k2 = 0.05;
        c.p1 = 0.001;
        c.p2 = -0.0005;
        for i in 0..50 {
            let a = i as f64 * 0.37;
            let r = 0.49 * (i as f64 / 49.0);
            let (xd, yd) = (r * a.cos(), r * a.sin());
            let (x, y) = c.undistort(xd, yd).unwrap();
            let (rx, ry) = c.distort(x, y);
            assert!((rx - xd).abs() * c.fx < 1e-6 && (ry - yd).abs() * c.fy < 1e-6);
        }
    }

    #[test]
    fn extreme_distortion_reports_divergence() {
        let mut c = cam();
        c.k1 = -5.0;
        assert!(matches!(
            c.pixel_ray(0.0, 0.0),
            Err(CameraError::UndistortionDiverged { .. })
        ));
    }

    #[test]
    fn look_at_points_forward_with_y_down() {
        let pose = look_at(&Vec3::new(0.0, 1.0, 3.0), &Vec3::new(0.0, 1.0, 0.0), &Vec3::y());
        let c = cam().with_pose(pose);
        let (u, v) = c.project(&Vec3::new(0.0, 1.0, 0.0)).unwrap();
        assert!((u - 320.0).abs() < 1e-9 && (v - 240.0).abs() < 1e-9);
        // World +x is image right; world +y is image up.
        assert!(c.project(&Vec3::new(0.1, 1.0, 0.0)).unwrap().0 > 320.0);
        assert!(c.project(&Vec3::new(0.0, 1.1, 0.0)).unwrap().1 < 240.0);
    }

    #[test]
    fn validation() {
        assert!(cam().validate().is_ok());
        let mut c = cam();
        c.fx = 0.0;
        assert!(c.validate().is_err());
        let mut c = cam();
        c.near = 2000.0;
        assert!(c.validate().is_err());
    }
}
