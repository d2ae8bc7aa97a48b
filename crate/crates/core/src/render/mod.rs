//! Per-pixel ray-cast rendering into RGB and label buffers.

mod output;

pub use output::{depth_to_bytes, iuv_to_png8, iuv_to_png16, part_palette, part_seg_to_png};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::atlas::{sample_texture, surface_to_iuv, IuvMode, IuvSample, TextureLayout, UvAtlas};
use crate::body::{JointTransforms, PosedMesh};
use crate::camera::CameraModel;
use crate::geometry::{Bvh, SurfaceHit};
use crate::math::{Ray, Vec3};
use crate::raster::{resize_bilinear, sample_bilinear, Mask, Raster, Rgb32, RgbImage};

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("atlas covers {atlas} faces but the mesh has {mesh}")]
    AtlasMismatch { atlas: usize, mesh: usize },
    #[error("texture is {width}x{height}; it must be at least 6x4")]
    TextureTooSmall { width: usize, height: usize },
    #[error("background image is empty")]
    EmptyBackground,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RenderSettings {
    /// Unit vector pointing toward the directional light, in world coordinates.
    pub light_direction: [f64; 3],
    pub ambient: f64,
    /// 2×2 supersampling of the RGB buffer; label buffers stay point-sampled.
    pub supersample: bool,
    pub iuv_mode: IuvMode,
}

impl Default for RenderSettings {
    fn default() -> Self {
        RenderSettings {
            light_direction: [0.267_261_241_912_424_4, 0.534_522_483_824_848_8, 0.801_783_725_737_273_2],
            ambient: 0.3,
            supersample: false,
            iuv_mode: IuvMode::Barycentric,
        }
    }
}

/// A posed mesh with its acceleration structure.
#[derive(Clone, Copy)]
pub struct SceneMesh<'a> {
    pub mesh: &'a PosedMesh,
    pub bvh: &'a Bvh,
}

/// Every per-pixel product of one rendered view.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameBuffers {
    pub rgb: RgbImage,
    /// Camera-frame depth in meters; `+∞` on background.
    pub depth: Raster<f32>,
    pub iuv: Raster<IuvSample>,
    /// Semantic part 1..=14, 0 on background.
    pub part_seg: Raster<u8>,
    pub instance_mask: Mask,
}

impl FrameBuffers {
    pub fn width(&self) -> usize {
        self.rgb.width()
    }

    pub fn height(&self) -> usize {
        self.rgb.height()
    }

    /// Checks that depth, mask, part and chart agree on foreground at every pixel.
    pub fn is_consistent(&self) -> bool {
        (0..self.rgb.len()).all(|i| {
            let fg = self.instance_mask.data()[i];
            self.depth.data()[i].is_finite() == fg
                && (self.part_seg.data()[i] > 0) == fg
                && (self.iuv.data()[i].chart > 0) == fg
        })
    }
}

struct PixelLabel {
    depth: f32,
    iuv: IuvSample,
    part: u8,
}

struct Renderer<'a> {
    scene: Option<SceneMesh<'a>>,
    atlas: &'a UvAtlas,
    texture: &'a RgbImage,
    layout: TextureLayout,
    camera: &'a CameraModel,
    background: RgbImage,
    settings: &'a RenderSettings,
    light: Vec3,
    forward: Vec3,
}

impl Renderer<'_> {
    fn cast(&self, u: f64, v: f64) -> Option<(Ray, SurfaceHit)> {
        let scene = self.scene?;
        // Pixels whose ray cannot be undistorted are treated as background.
        let ray = self.camera.pixel_ray(u, v).ok()?;
        let hit = scene.bvh.ray_cast(scene.mesh, &ray)?;
        Some((ray, hit))
    }

    fn shade(&self, ray: &Ray, hit: &SurfaceHit, iuv: &IuvSample) -> Rgb32 {
        let mesh = self.scene.expect("shading requires a mesh").mesh;
        let f = mesh.faces[hit.face as usize];
        let mut n = f
            .iter()
            .zip(hit.bary)
            .fold(Vec3::zeros(), |acc, (&vi, b)| acc + mesh.normals[vi as usize] * b);
        if n.norm() < 1e-12 {
            let [a, b, c] = mesh.triangle(hit.face as usize);
            n = (b - a).cross(&(c - a));
        }
        n = n.normalize();
        if n.dot(&ray.dir) > 0.0 {
            n = -n;
        }
        let a = self.settings.ambient;
        let s = (a + (1.0 - a) * n.dot(&self.light).max(0.0)) as f32;
        sample_texture(self.texture, &self.layout, iuv).map(|c| c * s)
    }

    fn color_at(&self, u: f64, v: f64) -> Rgb32 {
        match self.cast(u, v) {
            Some((ray, hit)) => {
                let iuv = surface_to_iuv(&hit, self.atlas, IuvMode::Barycentric).expect("atlas covers every face");
                self.shade(&ray, &hit, &iuv)
            }
            None => sample_bilinear(&self.background, u, v),
        }
    }

    fn pixel(&self, x: usize, y: usize) -> (Rgb32, Option<PixelLabel>) {
        let (u, v) = (x as f64 + 0.5, y as f64 + 0.5);
        let label = self.cast(u, v).map(|(ray, hit)| {
            let iuv = surface_to_iuv(&hit, self.atlas, self.settings.iuv_mode).expect("atlas covers every face");
            let shading_iuv = match self.settings.iuv_mode {
                IuvMode::Barycentric => iuv,
                IuvMode::NearestVertex => {
                    surface_to_iuv(&hit, self.atlas, IuvMode::Barycentric).expect("atlas covers every face")
                }
            };
            let rgb = self.shade(&ray, &hit, &shading_iuv);
            let depth = (ray.dir.dot(&self.forward) * hit.t) as f32;
            let part = self.atlas.part_of_chart(iuv.chart).expect("atlas charts are valid");
            (rgb, PixelLabel { depth, iuv, part })
        });
        let center_rgb = match &label {
            Some((rgb, _)) => *rgb,
            None => *self.background.get(x, y),
        };
        let rgb = if self.settings.supersample {
            let mut acc = [0.0f32; 3];
            for (dx, dy) in [(0.25, 0.25), (0.75, 0.25), (0.25, 0.75), (0.75, 0.75)] {
                let c = self.color_at(x as f64 + dx, y as f64 + dy);
                for k in 0..3 {
                    acc[k] += c[k];
                }
            }
            acc.map(|c| c * 0.25)
        } else {
            center_rgb
        };
        (rgb, label.map(|(_, l)| l))
    }
}

/// Renders one view. With `scene == None` the output is the background plate
/// and empty label buffers.
pub fn render_frame(
    scene: Option<SceneMesh<'_>>,
    atlas: &UvAtlas,
    texture: &RgbImage,
    camera: &CameraModel,
    background: &RgbImage,
    settings: &RenderSettings,
) -> Result<FrameBuffers, RenderError> {
    if let Some(s) = scene {
        if atlas.num_faces() != s.mesh.num_faces() {
            return Err(RenderError::AtlasMismatch {
                atlas: atlas.num_faces(),
                mesh: s.mesh.num_faces(),
            });
        }
    }
    if texture.width() < 6 || texture.height() < 4 {
        return Err(RenderError::TextureTooSmall {
            width: texture.width(),
            height: texture.height(),
        });
    }
    if background.is_empty() {
        return Err(RenderError::EmptyBackground);
    }
    let (w, h) = (camera.width, camera.height);
    let iso = camera.world_from_camera();
    let renderer = Renderer {
        scene,
        atlas,
        texture,
        layout: TextureLayout::for_texture(texture.width(), texture.height()),
        camera,
        background: resize_bilinear(background, w, h),
        settings,
        light: Vec3::from(settings.light_direction).normalize(),
        forward: iso.rotation * Vec3::z(),
    };
    let rows: Vec<Vec<(Rgb32, Option<PixelLabel>)>> = (0..h)
        .into_par_iter()
        .map(|y| (0..w).map(|x| renderer.pixel(x, y)).collect())
        .collect();
    let mut rgb = Vec::with_capacity(w * h);
    let mut depth = Vec::with_capacity(w * h);
    let mut iuv = Vec::with_capacity(w * h);
    let mut part = Vec::with_capacity(w * h);
    let mut mask = Vec::with_capacity(w * h);
    for (c, label) in rows.into_iter().flatten() {
        rgb.push(c);
        match label {
            Some(l) => {
                depth.push(l.depth);
                iuv.push(l.iuv);
                part.push(l.part);
                mask.push(true);
            }
            None => {
                depth.push(f32::INFINITY);
                iuv.push(IuvSample::BACKGROUND);
                part.push(0);
                mask.push(false);
            }
        }
    }
    Ok(FrameBuffers {
        rgb: Raster::from_vec(w, h, rgb),
        depth: Raster::from_vec(w, h, depth),
        iuv: Raster::from_vec(w, h, iuv),
        part_seg: Raster::from_vec(w, h, part),
        instance_mask: Raster::from_vec(w, h, mask),
    })
}

/// A projected joint: pixel position and visibility flag
/// (0 outside the image or behind the camera, 1 occluded, 2 visible).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Keypoint {
    pub x: f64,
    pub y: f64,
    pub flag: u8,
}

/// Joints sit inside the body, so surface within this distance of a joint
/// (its own skin) does not occlude it.
pub const KEYPOINT_SKIN_DEPTH: f64 = 0.15;

const KEYPOINT_EPSILON: f64 = 1e-3;

pub fn project_points(points: &[Vec3], camera: &CameraModel, scene: Option<SceneMesh<'_>>) -> Vec<Keypoint> {
    let center = camera.center();
    points
        .iter()
        .map(|p| {
            let Some((x, y)) = camera.project(p).filter(|&(x, y)| camera.in_image(x, y)) else {
                return Keypoint { x: 0.0, y: 0.0, flag: 0 };
            };
            let to_cam = center - p;
            let dist = to_cam.norm();
            let occluded = match scene {
                Some(s) if dist > KEYPOINT_SKIN_DEPTH + KEYPOINT_EPSILON => {
                    let dir = to_cam / dist;
                    let ray = Ray::new(p + dir * KEYPOINT_SKIN_DEPTH, dir);
                    s.bvh.occluded(s.mesh, &ray, dist - KEYPOINT_SKIN_DEPTH - KEYPOINT_EPSILON)
                }
                _ => false,
            };
            Keypoint {
                x,
                y,
                flag: if occluded { 1 } else { 2 },
            }
        })
        .collect()
}

/// Projects every joint of a posed model.
pub fn project_keypoints(
    joint_transforms: &JointTransforms,
    camera: &CameraModel,
    scene: Option<SceneMesh<'_>>,
) -> Vec<Keypoint> {
    project_points(&joint_transforms.joint_positions(), camera, scene)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atlas::chart_table;
    use crate::camera::look_at;

    fn quad_scene(z: f64) -> (PosedMesh, UvAtlas) {
        let mesh = PosedMesh::from_vecs(
            vec![
                Vec3::new(-0.5, -0.5, z),
                Vec3::new(0.5, -0.5, z),
                Vec3::new(0.5, 0.5, z),
                Vec3::new(-0.5, 0.5, z),
            ],
            vec![[0, 2, 1], [0, 3, 2]],
        );
        let atlas = UvAtlas::new(
            &mesh.faces,
            4,
            vec![2, 2],
            vec![[[0.0, 0.0], [1.0, 1.0], [1.0, 0.0]], [[0.0, 0.0], [0.0, 1.0], [1.0, 1.0]]],
            chart_table().chart_to_part,
            16,
        )
        .unwrap();
        (mesh, atlas)
    }

    fn background() -> RgbImage {
        Raster::from_fn(64, 48, |x, y| [x as f32 / 64.0, y as f32 / 48.0, 0.25])
    }

    fn camera() -> CameraModel {
        CameraModel::pinhole(60.0, 60.0, 32.0, 24.0, 64, 48)
    }

    #[test]
    fn empty_scene_is_background() {
        let (_, atlas) = quad_scene(2.0);
        let tex = Raster::filled(60, 40, [1.0f32; 3]);
        let fb = render_frame(None, &atlas, &tex, &camera(), &background(), &RenderSettings::default()).unwrap();
        assert_eq!(fb.rgb, background());
        assert_eq!(fb.instance_mask.count(), 0);
        assert!(fb.is_consistent());
    }

    #[test]
    fn mesh_behind_camera_is_background() {
        let (mesh, atlas) = quad_scene(-2.0);
        let bvh = Bvh::build(&mesh).unwrap();
        let tex = Raster::filled(60, 40, [1.0f32; 3]);
        let scene = SceneMesh { mesh: &mesh, bvh: &bvh };
        let fb = render_frame(Some(scene), &atlas, &tex, &camera(), &background(), &RenderSettings::default()).unwrap();
        assert_eq!(fb.rgb, background());
        assert_eq!(fb.instance_mask.count(), 0);
    }

    #[test]
    fn quad_fills_center_consistently() {
        let (mesh, atlas) = quad_scene(2.0);
        let bvh = Bvh::build(&mesh).unwrap();
        let tex = Raster::filled(60, 40, [1.0f32; 3]);
        let scene = SceneMesh { mesh: &mesh, bvh: &bvh };
        let fb = render_frame(Some(scene), &atlas, &tex, &camera(), &background(), &RenderSettings::default()).unwrap();
        assert!(fb.is_consistent());
        // The quad spans ±15 px around the principal point.
        assert_eq!(fb.instance_mask.count(), 30 * 30);
        assert!((*fb.depth.get(32, 24) - 2.0).abs() < 1e-6);
        assert_eq!(*fb.part_seg.get(32, 24), 1);
        let supersampled = RenderSettings {
            supersample: true,
            ..RenderSettings::default()
        };
        let fb2 = render_frame(Some(scene), &atlas, &tex, &camera(), &background(), &supersampled).unwrap();
        assert_eq!(fb2.instance_mask, fb.instance_mask);
        assert_eq!(fb2.iuv, fb.iuv);
    }

    #[test]
    fn keypoint_flags() {
        let (mesh, _) = quad_scene(2.0);
        let bvh = Bvh::build(&mesh).unwrap();
        let scene = SceneMesh { mesh: &mesh, bvh: &bvh };
        let cam = camera();
        let k = project_points(
            &[Vec3::new(0.0, 0.0, 1.0), Vec3::new(0.0, 0.0, 3.0), Vec3::new(0.0, 0.0, -1.0)],
            &cam,
            Some(scene),
        );
        assert_eq!(k[0], Keypoint { x: 32.0, y: 24.0, flag: 2 });
        assert_eq!(k[1].flag, 1);
        assert_eq!(k[2].flag, 0);
        // Surface closer than the skin depth does not count.
        assert_eq!(project_points(&[Vec3::new(0.0, 0.0, 2.1)], &cam, Some(scene))[0].flag, 2);
        let moved = cam.clone().with_pose(look_at(&Vec3::zeros(), &Vec3::new(0.0, 0.0, -1.0), &Vec3::y()));
        assert_eq!(project_points(&[Vec3::new(0.0, 0.0, 1.0)], &moved, Some(scene))[0].flag, 0);
    }
}
