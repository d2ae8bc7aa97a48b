use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{look_at, CameraError, CameraModel};
use crate::math::Vec3;
use crate::raster::RgbImage;

/// How the noise seed is chosen for each rendered frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SeedPolicy {
    /// Derived from the frame seed, so every frame differs.
    #[default]
    PerFrame,
    /// The same seed for every frame.
    Fixed(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub gaussian_sigma: f64,
    #[serde(default)]
    pub seed_policy: SeedPolicy,
}

impl NoiseModel {
    pub fn none() -> Self {
        NoiseModel {
            gaussian_sigma: 0.0,
            seed_policy: SeedPolicy::PerFrame,
        }
    }

    pub fn seed_for(&self, frame_seed: u64) -> u64 {
        match self.seed_policy {
            SeedPolicy::PerFrame => frame_seed,
            SeedPolicy::Fixed(s) => s,
        }
    }
}

/// Adds i.i.d. Gaussian noise per channel and clamps to `[0, 1]`.
pub fn add_sensor_noise(image: &RgbImage, noise: &NoiseModel, seed: u64) -> RgbImage {
    if noise.gaussian_sigma <= 0.0 {
        return image.clone();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, noise.gaussian_sigma).expect("sigma is positive and finite");
    image.map(|px| {
        let mut out = *px;
        for c in &mut out {
            let n: f64 = normal.sample(&mut rng);
            *c = (*c as f64 + n).clamp(0.0, 1.0) as f32;
        }
        out
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraRig {
    pub cameras: Vec<CameraModel>,
    pub noise: Vec<NoiseModel>,
}

impl CameraRig {
    pub fn new(cameras: Vec<CameraModel>, noise: Vec<NoiseModel>) -> Result<Self, CameraError> {
        let rig = CameraRig { cameras, noise };
        rig.validate()?;
        Ok(rig)
    }

    pub fn validate(&self) -> Result<(), CameraError> {
        if self.cameras.is_empty() {
            return Err(CameraError::InvalidRig("rig has no cameras".into()));
        }
        if self.noise.len() != self.cameras.len() {
            return Err(CameraError::InvalidRig(format!(
                "{} noise models for {} cameras",
                self.noise.len(),
                self.cameras.len()
            )));
        }
        for (i, n) in self.noise.iter().enumerate() {
            if !(n.gaussian_sigma >= 0.0 && n.gaussian_sigma.is_finite()) {
                return Err(CameraError::InvalidRig(format!("camera {i}: noise sigma must be >= 0")));
            }
        }
        for (i, c) in self.cameras.iter().enumerate() {
            c.validate()
                .map_err(|e| CameraError::InvalidRig(format!("camera {i}: {e}")))?;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.cameras.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cameras.is_empty()
    }
}

/// Ranges for sampling a rig around a subject.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RigSampling {
    pub num_cameras: usize,
    pub width: usize,
    pub height: usize,
    pub focal_range: [f64; 2],
    pub yaw_range_deg: [f64; 2],
    pub yaw_jitter_deg: f64,
    pub pitch_jitter_deg: f64,
    pub roll_jitter_deg: f64,
    pub k1_range: [f64; 2],
    pub k2_range: [f64; 2],
    pub tangential_max: f64,
    /// Camera distance per pixel of focal length, in meters.
    pub distance_per_focal: [f64; 2],
    pub height_range: [f64; 2],
    pub target: [f64; 3],
    pub noise_sigma_range: [f64; 2],
    pub near: f64,
    pub far: f64,
}

impl Default for RigSampling {
    fn default() -> Self {
        RigSampling {
            num_cameras: 9,
            width: 640,
            height: 480,
            focal_range: [400.0, 900.0],
            yaw_range_deg: [-60.0, 60.0],
            yaw_jitter_deg: 5.0,
            pitch_jitter_deg: 4.0,
            roll_jitter_deg: 3.0,
            k1_range: [-0.3, 0.1],
            k2_range: [0.0, 0.0],
            tangential_max: 0.001,
            distance_per_focal: [0.005, 0.007],
            height_range: [0.8, 1.3],
            target: [0.0, 0.9, 0.0],
            noise_sigma_range: [0.0, 0.02],
            near: 0.1,
            far: 100.0,
        }
    }
}

fn uniform(rng: &mut impl Rng, r: [f64; 2]) -> f64 {
    if r[1] > r[0] {
        rng.random_range(r[0]..r[1])
    } else {
        r[0]
    }
}

fn jitter(rng: &mut impl Rng, half: f64) -> f64 {
    uniform(rng, [-half, half])
}

/// Halves the radial coefficients until every image corner has a preimage
/// inside the monotone range of the distortion model.
fn fit_distortion(cam: &mut CameraModel) {
    for _ in 0..32 {
        if cam.covers_image(COVER_MARGIN) {
            return;
        }
        cam.k1 *= 0.5;
        cam.k2 *= 0.5;
    }
    cam.k1 = 0.0;
    cam.k2 = 0.0;
}

const COVER_MARGIN: f64 = 0.02;

impl RigSampling {
    /// Cameras spread evenly in yaw around the target, facing it from the +z side.
    pub fn sample(&self, rng: &mut impl Rng) -> Result<CameraRig, CameraError> {
        let n = self.num_cameras;
        let target = Vec3::from(self.target);
        let mut cameras = Vec::with_capacity(n);
        let mut noise = Vec::with_capacity(n);
        for i in 0..n {
            let frac = if n > 1 { i as f64 / (n - 1) as f64 } else { 0.5 };
            let yaw = (self.yaw_range_deg[0] + frac * (self.yaw_range_deg[1] - self.yaw_range_deg[0])
                + jitter(rng, self.yaw_jitter_deg))
            .to_radians();
            let f = uniform(rng, self.focal_range);
            let dist = f * uniform(rng, self.distance_per_focal);
            let h = uniform(rng, self.height_range);
            let eye = Vec3::new(target.x + dist * yaw.sin(), h, target.z + dist * yaw.cos());
            let pitch = jitter(rng, self.pitch_jitter_deg).to_radians();
            let aim = target + Vec3::new(0.0, dist * pitch.tan(), 0.0);
            let roll = jitter(rng, self.roll_jitter_deg).to_radians();
            let fwd = (aim - eye).normalize();
            let up = nalgebra::Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(fwd), roll) * Vec3::y();
            let mut cam = CameraModel::pinhole(f, f, self.width as f64 / 2.0, self.height as f64 / 2.0, self.width, self.height)
                .with_pose(look_at(&eye, &aim, &up));
            cam.k1 = uniform(rng, self.k1_range);
            cam.k2 = uniform(rng, self.k2_range);
            cam.p1 = jitter(rng, self.tangential_max);
            cam.p2 = jitter(rng, self.tangential_max);
            cam.near = self.near;
            cam.far = self.far;
            fit_distortion(&mut cam);
            cameras.push(cam);
            noise.push(NoiseModel {
                gaussian_sigma: uniform(rng, self.noise_sigma_range),
                seed_policy: SeedPolicy::PerFrame,
            });
        }
        CameraRig::new(cameras, noise)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::Raster;

    #[test]
    fn sampled_cameras_cover_their_images() {
        use rand::SeedableRng;
        let s = RigSampling {
            k1_range: [-0.6, -0.3],
            focal_range: [300.0, 400.0],
            ..RigSampling::default()
        };
        let rig = s.sample(&mut rand_chacha::ChaCha8Rng::seed_from_u64(1)).unwrap();
        for cam in &rig.cameras {
            assert!(cam.covers_image(COVER_MARGIN));
            for (u, v) in [(0.0, 0.0), (640.0, 480.0), (0.0, 480.0), (640.0, 0.0)] {
                cam.pixel_ray(u, v).unwrap();
            }
        }
    }

    #[test]
    fn zero_sigma_is_identity() {
        let img = Raster::from_fn(7, 5, |x, y| [x as f32 * 0.1, y as f32 * 0.2, 0.5]);
        assert_eq!(add_sensor_noise(&img, &NoiseModel::none(), 3), img);
    }

    #[test]
    fn noise_is_deterministic() {
        let img = Raster::filled(16, 16, [0.5f32; 3]);
        let n = NoiseModel {
            gaussian_sigma: 0.01,
            seed_policy: SeedPolicy::PerFrame,
        };
        assert_eq!(add_sensor_noise(&img, &n, 9), add_sensor_noise(&img, &n, 9));
        assert_ne!(add_sensor_noise(&img, &n, 9), add_sensor_noise(&img, &n, 10));
    }

    #[test]
    fn sampled_rig_sees_target() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rig = RigSampling::default().sample(&mut rng).unwrap();
        assert_eq!(rig.len(), 9);
        for c in &rig.cameras {
            let (u, v) = c.project(&Vec3::new(0.0, 0.9, 0.0)).unwrap();
            assert!(c.in_image(u, v));
        }
    }

    #[test]
    fn empty_rig_rejected() {
        assert!(CameraRig::new(vec![], vec![]).is_err());
    }
}
