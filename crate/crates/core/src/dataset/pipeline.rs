//! One frame end to end: pose, render, annotate, occlude, harmonise, degrade.

use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::annotation::extract_annotation;
use super::config::SceneConfig;
use super::scene::{frame_rng, SceneCatalog, SceneSpec};
use super::{DatasetError, DenseAnnotation};
use crate::atlas::{load_atlas, mix_textures, part_layout, TextureLayout, UvAtlas};
use crate::body::{load_body_model, BodyModel, PoseParams, ShapeParams};
use crate::camera::{add_sensor_noise, CameraRig};
use crate::compositor::{
    composite, harmonize, occlude_label_buffers, prepare_occluder, update_labels_for_occlusion, OccluderSprite,
};
use crate::geometry::Bvh;
use crate::math::{axis_angle_to_quaternion, quaternion_to_axis_angle, Vec3};
use crate::mocap::{load_bvh, retarget_clip, sample_pose, RetargetMap};
use crate::raster::{read_rgb_png, rgb_to_png_bytes, Raster, RgbImage};
use crate::render::{iuv_to_png16, part_seg_to_png, project_keypoints, render_frame, FrameBuffers, SceneMesh};

/// A clip retargeted onto the model, one pose per frame.
#[derive(Debug, Clone, PartialEq)]
pub struct ClipPoses {
    pub name: String,
    pub poses: Vec<PoseParams>,
    pub frame_time: f64,
}

/// Everything loaded from disk that frame generation reads.
pub struct Resources {
    pub model: BodyModel,
    pub atlas: UvAtlas,
    pub rig: CameraRig,
    pub backgrounds: Vec<RgbImage>,
    pub textures: Vec<RgbImage>,
    /// Semantic part per texel of the (shared) texture layout.
    pub texture_parts: Raster<u8>,
    pub occluders: Vec<OccluderSprite>,
    pub clips: Vec<ClipPoses>,
    pub keypoint_names: Vec<String>,
}

fn list_pngs(dir: &Path) -> Result<Vec<PathBuf>, DatasetError> {
    let entries = std::fs::read_dir(dir).map_err(|source| {
        if source.kind() == std::io::ErrorKind::NotFound {
            DatasetError::MissingResource(dir.to_path_buf())
        } else {
            DatasetError::Io {
                path: dir.to_path_buf(),
                source,
            }
        }
    })?;
    let mut out: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("png")))
        .collect();
    out.sort();
    Ok(out)
}

fn require_nonempty<T>(items: Vec<T>, what: &str) -> Result<Vec<T>, DatasetError> {
    if items.is_empty() {
        Err(DatasetError::EmptyResources(what.into()))
    } else {
        Ok(items)
    }
}

fn require_exists(path: &Path) -> Result<(), DatasetError> {
    if path.exists() {
        Ok(())
    } else {
        Err(DatasetError::MissingResource(path.to_path_buf()))
    }
}

impl Resources {
    /// Loads and checks every resource the config names. The rig, when
    /// sampled, is drawn from the generator of pseudo-frame `u64::MAX`.
    pub fn load(config: &SceneConfig) -> Result<Resources, DatasetError> {
        config.validate()?;
        require_exists(&config.model)?;
        require_exists(&config.atlas)?;
        for c in &config.clips {
            require_exists(&c.bvh)?;
            require_exists(&c.retarget)?;
        }
        let model = load_body_model(&config.model)?;
        let atlas = load_atlas(&config.atlas, model.faces(), model.num_vertices())?;
        let rig = config.rig.build(&mut frame_rng(config.master_seed, u64::MAX))?;
        let backgrounds = require_nonempty(list_pngs(&config.backgrounds)?, "backgrounds")?
            .iter()
            .map(|p| read_rgb_png(p))
            .collect::<Result<Vec<_>, _>>()?;
        let textures = require_nonempty(list_pngs(&config.textures)?, "textures")?
            .iter()
            .map(|p| read_rgb_png(p))
            .collect::<Result<Vec<_>, _>>()?;
        let dims = textures[0].dims();
        if textures.iter().any(|t| t.dims() != dims) {
            return Err(DatasetError::Config("all textures must share one size".into()));
        }
        let texture_parts = part_layout(&TextureLayout::for_texture(dims.0, dims.1), atlas.chart_to_part());
        let occluders = if config.occluders_active() {
            let dir = config
                .occluders
                .as_ref()
                .ok_or_else(|| DatasetError::Config("occlusion is enabled but no occluder directory is set".into()))?;
            require_nonempty(list_pngs(dir)?, "occluders")?
                .iter()
                .map(|p| OccluderSprite::load(p))
                .collect::<Result<Vec<_>, _>>()?
        } else {
            Vec::new()
        };
        let mut clips = Vec::new();
        for c in &config.clips {
            let clip = load_bvh(&c.bvh)?;
            let map = RetargetMap::load(&c.retarget)?;
            if map.num_joints != model.num_joints() {
                return Err(DatasetError::Config(format!(
                    "retarget map {} targets {} joints, model has {}",
                    c.retarget.display(),
                    map.num_joints,
                    model.num_joints()
                )));
            }
            let poses = require_nonempty(retarget_clip(&clip, &map)?, "clip frames")?;
            clips.push(ClipPoses {
                name: c.bvh.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(),
                poses,
                frame_time: clip.frame_time,
            });
        }
        let keypoint_names = if config.keypoint_names.is_empty() {
            (0..model.num_joints()).map(|j| format!("joint_{j}")).collect()
        } else if config.keypoint_names.len() == model.num_joints() {
            config.keypoint_names.clone()
        } else {
            return Err(DatasetError::Config(format!(
                "{} keypoint names for {} joints",
                config.keypoint_names.len(),
                model.num_joints()
            )));
        };
        Ok(Resources {
            model,
            atlas,
            rig,
            backgrounds,
            textures,
            texture_parts,
            occluders,
            clips,
            keypoint_names,
        })
    }

    pub fn catalog(&self) -> SceneCatalog {
        SceneCatalog {
            num_cameras: self.rig.len(),
            num_backgrounds: self.backgrounds.len(),
            num_textures: self.textures.len(),
            num_occluders: self.occluders.len(),
            clips: self.clips.iter().map(|c| (c.poses.len(), c.frame_time)).collect(),
            num_shape: self.model.num_shape(),
        }
    }

    /// Parent-child joint pairs.
    pub fn skeleton(&self) -> Vec<[usize; 2]> {
        self.model
            .parents()
            .iter()
            .enumerate()
            .filter_map(|(j, p)| p.map(|p| [p, j]))
            .collect()
    }

    /// Clip pose at `t`, wrapping past the last frame when `looping`.
    pub fn clip_pose(&self, clip_id: usize, t: f64, looping: bool) -> Result<PoseParams, DatasetError> {
        let clip = &self.clips[clip_id];
        let n = clip.poses.len();
        let last_t = (n - 1) as f64 * clip.frame_time;
        if looping && n > 1 && t > last_t {
            let pair = [clip.poses[n - 1].clone(), clip.poses[0].clone()];
            return Ok(sample_pose(&pair, t - last_t, clip.frame_time)?);
        }
        Ok(sample_pose(&clip.poses, t, clip.frame_time)?)
    }

    /// The subject's pose: clip rotations, heading turned by `yaw`, root placed
    /// at the ground offset. Only the clip's vertical root motion (relative to
    /// its first frame) is kept so the subject stays where the rig looks.
    pub fn subject_pose(&self, spec: &SceneSpec, looping: bool) -> Result<PoseParams, DatasetError> {
        let mut pose = self.clip_pose(spec.clip_id, spec.clip_time, looping)?;
        let root = self.model.root();
        let turn = axis_angle_to_quaternion(&Vec3::new(0.0, spec.yaw, 0.0));
        pose.joint_rotations[root] =
            quaternion_to_axis_angle(&(turn * axis_angle_to_quaternion(&pose.joint_rotations[root])));
        let first = self.clips[spec.clip_id].poses[0].root_translation;
        let rise = pose.root_translation.y - first.y;
        pose.root_translation = Vec3::new(spec.offset[0], rise, spec.offset[1]);
        Ok(pose)
    }
}

/// Output of one frame. `annotation` is `None` when the instance was skipped,
/// with the reason in `skip_reason`.
#[derive(Debug, Clone)]
pub struct FrameResult {
    pub spec: SceneSpec,
    pub image: RgbImage,
    pub buffers: FrameBuffers,
    pub annotation: Option<DenseAnnotation>,
    pub skip_reason: Option<String>,
    /// Combined occluder alpha in frame coordinates.
    pub occluder_alpha: Raster<f32>,
}

/// COCO ids for a frame (1-based).
pub fn frame_id(frame_index: usize) -> u64 {
    frame_index as u64 + 1
}

pub fn generate_frame(config: &SceneConfig, res: &Resources, spec: &SceneSpec) -> Result<FrameResult, DatasetError> {
    let camera = &res.rig.cameras[spec.camera_id];
    let shape = ShapeParams::clamped(spec.shape.clone(), config.subject.shape_clamp);
    let pose = res.subject_pose(spec, config.loop_clips)?;
    let (mesh, joints) = res.model.posed(&shape, &pose)?;
    let bvh = Bvh::build(&mesh)?;
    let scene = SceneMesh { mesh: &mesh, bvh: &bvh };
    let mut mix_rng = ChaCha8Rng::seed_from_u64(spec.mix_seed);
    let texture = mix_textures(
        &res.textures[spec.texture_a],
        &res.textures[spec.texture_b],
        &res.texture_parts,
        &mut mix_rng,
    )?
    .texture;
    let mut buffers = render_frame(
        Some(scene),
        &res.atlas,
        &texture,
        camera,
        &res.backgrounds[spec.background_id],
        &config.render,
    )?;
    let keypoints = project_keypoints(&joints, camera, Some(scene));
    let (w, h) = (buffers.width(), buffers.height());
    let mut alpha = Raster::filled(w, h, 0.0f32);
    let mut image = buffers.rgb.clone();

    let in_frame = mesh
        .vertices
        .iter()
        .filter(|v| camera.project(v).is_some_and(|(x, y)| camera.in_image(x, y)))
        .count() as f64
        / mesh.vertices.len() as f64;
    let id = frame_id(spec.frame_index);
    let mut skip_reason = None;
    let mut annotation = if buffers.instance_mask.count() == 0 {
        skip_reason = Some("instance not visible".to_string());
        None
    } else if in_frame < config.min_in_frame_fraction {
        skip_reason = Some(format!("instance cropped: {:.1}% of vertices in frame", 100.0 * in_frame));
        None
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.point_seed);
        Some(extract_annotation(&buffers, keypoints, id, id, config.points_per_instance, &mut rng)?)
    };

    if let Some(ann) = &annotation {
        let occ = &config.occlusion;
        let band = occ.band_px.map(|b| (b, occ.sigma_px.unwrap_or(b / 2.0)));
        for draw in &spec.occluders {
            let sprite = &res.occluders[draw.sprite_id];
            let placement = draw.placement.resolve(ann.bbox, sprite.max_dimension());
            let resolved = prepare_occluder(sprite, &placement, band, w, h);
            image = composite(&image, &resolved);
            for (a, &b) in alpha.data_mut().iter_mut().zip(resolved.alpha.data()) {
                *a += b * (1.0 - *a);
            }
        }
        if occ.occlusion_aware_labels && !spec.occluders.is_empty() {
            let updated = update_labels_for_occlusion(ann, &alpha, occ.threshold, true);
            occlude_label_buffers(&mut buffers, &alpha, occ.threshold);
            for p in &updated.points {
                let (px, py) = updated.box_to_pixel(p.x, p.y);
                if *alpha.get(px as usize, py as usize) as f64 > occ.threshold {
                    return Err(DatasetError::Invariant {
                        frame: spec.frame_index,
                        message: format!("dense point on occluded pixel ({px}, {py})"),
                    });
                }
            }
            if updated.area() == 0 {
                skip_reason = Some("instance fully occluded".to_string());
                annotation = None;
            } else if updated.points.is_empty() {
                skip_reason = Some("no dense points left after occlusion".to_string());
                annotation = None;
            } else {
                annotation = Some(updated);
            }
        }
    }

    let fg = &buffers.instance_mask;
    let fg_count = fg.count();
    if config.harmonize_lambda > 0.0 && fg_count > 0 && fg_count < fg.len() {
        image = harmonize(&image, fg, config.harmonize_lambda)?;
    }
    let noise = &res.rig.noise[spec.camera_id];
    image = add_sensor_noise(&image, noise, noise.seed_for(spec.noise_seed));
    Ok(FrameResult {
        spec: spec.clone(),
        image,
        buffers,
        annotation,
        skip_reason,
        occluder_alpha: alpha,
    })
}

pub fn image_file_name(frame_index: usize) -> String {
    format!("images/{frame_index:06}.png")
}

/// Encoded files for one frame, as `(relative path, bytes)`: the RGB image,
/// the 16-bit IUV label and the part-segmentation label.
pub fn frame_files(result: &FrameResult) -> Vec<(String, Vec<u8>)> {
    let i = result.spec.frame_index;
    vec![
        (image_file_name(i), rgb_to_png_bytes(&result.image)),
        (format!("labels/{i:06}_iuv.png"), iuv_to_png16(&result.buffers.iuv)),
        (format!("labels/{i:06}_seg.png"), part_seg_to_png(&result.buffers.part_seg)),
    ]
}
