//! Procedural stand-ins for the image and motion assets a real dataset would use.

use std::f64::consts::TAU;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::atlas::{chart_table, save_atlas, TextureLayout};
use crate::body::save_body_model;
use crate::camera::RigSampling;
use crate::compositor::DEFAULT_HARMONIZE_LAMBDA;
use crate::dataset::{
    ClipSource, DatasetError, OcclusionConfig, RigConfig, SceneConfig, SubjectSampling, DEFAULT_POINTS_PER_INSTANCE,
};
use crate::math::Vec3;
use crate::mocap::{write_bvh, BvhJoint, Channel, JointMapping, MotionClip, RetargetMap};
use crate::raster::{rgb_to_png_bytes, rgba_to_png_bytes, Raster, Rgb32, RgbImage, Rgba32};
use crate::render::RenderSettings;

use super::{TOY_JOINT_NAMES, TOY_PARENTS};

pub const TEXTURE_WIDTH: usize = 384;
pub const TEXTURE_HEIGHT: usize = 256;

fn hsv(h: f64, s: f64, v: f64) -> Rgb32 {
    let h = h.rem_euclid(1.0) * 6.0;
    let c = v * s;
    let x = c * (1.0 - ((h % 2.0) - 1.0).abs());
    let (r, g, b) = match h as usize {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = v - c;
    [(r + m) as f32, (g + m) as f32, (b + m) as f32]
}

/// A clothing-like texture in the chart-packed layout: skin on head and hands,
/// a patterned shirt on torso and arms, trousers on legs, shoes on feet.
pub fn procedural_texture(rng: &mut impl Rng) -> RgbImage {
    let layout = TextureLayout::for_texture(TEXTURE_WIDTH, TEXTURE_HEIGHT);
    let skin = hsv(rng.random_range(0.02..0.10), rng.random_range(0.25..0.6), rng.random_range(0.35..0.95));
    let shirt = hsv(rng.random(), rng.random_range(0.3..0.9), rng.random_range(0.4..0.95));
    let shirt2 = hsv(rng.random(), rng.random_range(0.2..0.8), rng.random_range(0.3..0.9));
    let pants = hsv(rng.random(), rng.random_range(0.2..0.7), rng.random_range(0.15..0.6));
    let shoes = hsv(rng.random(), rng.random_range(0.0..0.5), rng.random_range(0.05..0.4));
    let stripes = rng.random_range(3.0..12.0);
    let striped = rng.random_bool(0.5);
    let table = chart_table();
    Raster::from_fn(TEXTURE_WIDTH, TEXTURE_HEIGHT, |x, y| {
        let Some(chart) = layout.chart_at(x, y) else {
            return [0.0; 3];
        };
        let (x0, y0) = layout.tile_origin(chart);
        let u = (x - x0) as f64 / layout.tile_width as f64;
        let v = (y - y0) as f64 / layout.tile_height as f64;
        let base = match table.chart_to_part[chart as usize - 1] {
            2 | 3 | 14 => skin,
            4 | 5 => shoes,
            6..=9 => pants,
            _ => {
                if striped && ((v * stripes).floor() as i64) % 2 == 0 {
                    shirt2
                } else {
                    shirt
                }
            }
        };
        let grain = 0.92 + 0.08 * ((u * 37.0).sin() * (v * 23.0).cos()) as f32;
        base.map(|c| (c * grain).clamp(0.0, 1.0))
    })
}

/// A street-like plate: sky gradient, ground, and a row of block buildings.
pub fn procedural_background(width: usize, height: usize, rng: &mut impl Rng) -> RgbImage {
    let horizon = rng.random_range(0.45..0.65) * height as f64;
    let sky_top = hsv(rng.random_range(0.55..0.65), rng.random_range(0.3..0.7), rng.random_range(0.6..1.0));
    let sky_low = hsv(rng.random_range(0.5..0.6), rng.random_range(0.1..0.3), rng.random_range(0.8..1.0));
    let ground = hsv(rng.random(), rng.random_range(0.0..0.3), rng.random_range(0.25..0.55));
    let n_buildings = rng.random_range(3..9);
    let buildings: Vec<(f64, f64, f64, Rgb32)> = (0..n_buildings)
        .map(|_| {
            let x0 = rng.random_range(0.0..width as f64);
            let w = rng.random_range(0.08..0.3) * width as f64;
            let top = horizon - rng.random_range(0.1..0.5) * height as f64;
            let c = hsv(rng.random(), rng.random_range(0.05..0.4), rng.random_range(0.3..0.8));
            (x0, w, top, c)
        })
        .collect();
    Raster::from_fn(width, height, |x, y| {
        let (fx, fy) = (x as f64 + 0.5, y as f64 + 0.5);
        if fy >= horizon {
            let t = ((fy - horizon) / (height as f64 - horizon)) as f32;
            let tiles = (((fx / 40.0).floor() + ((fy - horizon) / 20.0).floor()) as i64).rem_euclid(2) as f32;
            return ground.map(|c| (c * (0.8 + 0.3 * t) * (0.95 + 0.05 * tiles)).clamp(0.0, 1.0));
        }
        for &(x0, w, top, c) in &buildings {
            if fx >= x0 && fx < x0 + w && fy >= top {
                let window = ((fx - x0) % 18.0 > 9.0) && ((fy - top) % 24.0 > 12.0);
                return if window { c.map(|v| v * 0.6) } else { c };
            }
        }
        let t = (fy / horizon) as f32;
        [0, 1, 2].map(|k| sky_top[k] + (sky_low[k] - sky_top[k]) * t)
    })
}

/// A random opaque object on a transparent square canvas.
pub fn procedural_occluder(size: usize, rng: &mut impl Rng) -> Raster<Rgba32> {
    let color = hsv(rng.random(), rng.random_range(0.3..1.0), rng.random_range(0.3..1.0));
    let kind = rng.random_range(0..3);
    let half = size as f64 / 2.0;
    let (ax, ay) = (rng.random_range(0.5..0.95), rng.random_range(0.5..0.95));
    let lobes: Vec<(f64, f64)> = (0..4).map(|_| (rng.random_range(0.0..0.25), rng.random_range(0.0..TAU))).collect();
    Raster::from_fn(size, size, |x, y| {
        let u = (x as f64 + 0.5 - half) / half;
        let v = (y as f64 + 0.5 - half) / half;
        let inside = match kind {
            0 => (u / ax).powi(2) + (v / ay).powi(2) <= 1.0,
            1 => u.abs() <= ax && v.abs() <= ay,
            _ => {
                let r = u.hypot(v);
                let th = v.atan2(u);
                let edge = 0.7 + lobes.iter().enumerate().map(|(i, (a, ph))| a * ((i + 2) as f64 * th + ph).sin()).sum::<f64>();
                r <= edge.min(0.98)
            }
        };
        if inside {
            let shade = (0.85 + 0.15 * (u * 3.0).sin() * (v * 2.0).cos()) as f32;
            [color[0] * shade, color[1] * shade, color[2] * shade, 1.0]
        } else {
            [0.0; 4]
        }
    })
}

/// Rest offsets of the toy skeleton, in centimeters.
fn skeleton() -> Vec<BvhJoint> {
    let offsets = [
        (0.0, 90.0, 0.0),
        (0.0, 60.0, 0.0),
        (18.0, 50.0, 0.0),
        (26.0, 0.0, 0.0),
        (24.0, 0.0, 0.0),
        (-18.0, 50.0, 0.0),
        (-26.0, 0.0, 0.0),
        (-24.0, 0.0, 0.0),
        (12.0, 0.0, 0.0),
        (0.0, -40.0, 0.0),
        (0.0, -40.0, 0.0),
        (-12.0, 0.0, 0.0),
        (0.0, -40.0, 0.0),
        (0.0, -40.0, 0.0),
    ];
    let end_sites: [Option<(f64, f64, f64)>; 14] = [
        None,
        Some((0.0, 34.0, 0.0)),
        None,
        None,
        Some((12.0, 0.0, 0.0)),
        None,
        None,
        Some((-12.0, 0.0, 0.0)),
        None,
        None,
        Some((0.0, -7.0, 0.0)),
        None,
        None,
        Some((0.0, -7.0, 0.0)),
    ];
    let rot = vec![Channel::Zrotation, Channel::Xrotation, Channel::Yrotation];
    (0..14)
        .map(|j| {
            let (x, y, z) = offsets[j];
            let mut channels = rot.clone();
            if j == 0 {
                channels = [vec![Channel::Xposition, Channel::Yposition, Channel::Zposition], rot.clone()].concat();
            }
            BvhJoint {
                name: TOY_JOINT_NAMES[j].to_string(),
                parent: (TOY_PARENTS[j] >= 0).then_some(TOY_PARENTS[j] as usize),
                offset: Vec3::new(x, y, z),
                channels,
                end_site: end_sites[j].map(|(a, b, c)| Vec3::new(a, b, c)),
            }
        })
        .collect()
}

/// Writes joint (z, x, y) Euler degrees into a frame row.
fn set_rot(row: &mut [f64], joint: usize, zxy: (f64, f64, f64)) {
    let start = if joint == 0 { 3 } else { 6 + 3 * (joint - 1) };
    row[start] = zxy.0;
    row[start + 1] = zxy.1;
    row[start + 2] = zxy.2;
}

fn clip_from(frames: usize, frame_time: f64, pose: impl Fn(f64, &mut [f64])) -> MotionClip {
    let joints = skeleton();
    let n: usize = joints.iter().map(|j| j.channels.len()).sum();
    let rows = (0..frames)
        .map(|f| {
            let mut row = vec![0.0; n];
            pose(f as f64 / frames as f64, &mut row);
            row.iter().map(|v| crate::math::round_sig6(*v)).collect()
        })
        .collect();
    MotionClip {
        joints,
        frame_time,
        frames: rows,
    }
}

/// One looping walk cycle, 48 frames at 30 fps.
pub fn walk_clip() -> MotionClip {
    clip_from(48, 1.0 / 30.0, |phase, row| {
        let s = (TAU * phase).sin();
        let c = (TAU * phase).cos();
        row[0] = 0.0;
        row[1] = 90.0 + 1.5 * (2.0 * TAU * phase).cos();
        row[2] = 0.0;
        set_rot(row, 0, (0.0, 2.0, 6.0 * s));
        set_rot(row, 1, (0.0, -4.0, -6.0 * s));
        set_rot(row, 2, (-72.0, 0.0, 22.0 * s));
        set_rot(row, 3, (0.0, 0.0, -18.0 - 10.0 * s.max(0.0)));
        set_rot(row, 5, (72.0, 0.0, 22.0 * s));
        set_rot(row, 6, (0.0, 0.0, 18.0 + 10.0 * (-s).max(0.0)));
        set_rot(row, 8, (0.0, -26.0 * s, 0.0));
        set_rot(row, 9, (0.0, 35.0 * (0.5 + 0.5 * c).powi(2), 0.0));
        set_rot(row, 10, (0.0, -8.0 * s, 0.0));
        set_rot(row, 11, (0.0, 26.0 * s, 0.0));
        set_rot(row, 12, (0.0, 35.0 * (0.5 - 0.5 * c).powi(2), 0.0));
        set_rot(row, 13, (0.0, 8.0 * s, 0.0));
    })
}

/// Standing with the right arm waving overhead, 40 frames at 30 fps.
pub fn wave_clip() -> MotionClip {
    clip_from(40, 1.0 / 30.0, |phase, row| {
        let s = (TAU * phase).sin();
        row[1] = 90.0;
        set_rot(row, 0, (2.0 * s, 0.0, 0.0));
        set_rot(row, 1, (-5.0 * s, 5.0, 0.0));
        set_rot(row, 2, (-75.0, 0.0, 8.0));
        set_rot(row, 3, (0.0, 0.0, -10.0));
        set_rot(row, 5, (-50.0 + 10.0 * s, 0.0, -10.0));
        set_rot(row, 6, (-55.0 - 25.0 * s, 0.0, 0.0));
        set_rot(row, 7, (0.0, 0.0, 10.0 * s));
        set_rot(row, 8, (3.0, -5.0, 0.0));
        set_rot(row, 9, (0.0, 8.0, 0.0));
        set_rot(row, 11, (-3.0, 0.0, 0.0));
        set_rot(row, 12, (0.0, 4.0, 0.0));
    })
}

/// Name-for-name mapping of the toy skeleton onto the toy model.
pub fn toy_retarget_map() -> RetargetMap {
    RetargetMap {
        num_joints: TOY_JOINT_NAMES.len(),
        joints: TOY_JOINT_NAMES
            .iter()
            .enumerate()
            .map(|(i, name)| JointMapping {
                source: name.to_string(),
                target: i,
                axis_permutation: [0, 1, 2],
                axis_signs: [1.0; 3],
            })
            .collect(),
        translation_source: Some("pelvis".into()),
        translation_scale: 0.01,
    }
}

/// Sizes for [`write_toy_resources`].
#[derive(Debug, Clone, PartialEq)]
pub struct ToyResourceOptions {
    pub seed: u64,
    pub width: usize,
    pub height: usize,
    pub num_frames: usize,
    pub num_backgrounds: usize,
    pub num_textures: usize,
    pub num_occluders: usize,
    /// Mesh resolution passed to [`super::build_toy_biped`].
    pub n_segments: usize,
}

impl Default for ToyResourceOptions {
    fn default() -> Self {
        ToyResourceOptions {
            seed: 7,
            width: 320,
            height: 240,
            num_frames: 50,
            num_backgrounds: 6,
            num_textures: 4,
            num_occluders: 6,
            n_segments: 8,
        }
    }
}

/// Rig ranges that frame a standing toy biped in a `width × height` image.
pub fn toy_rig(width: usize, height: usize) -> RigSampling {
    let s = height as f64 / 480.0;
    RigSampling {
        num_cameras: 9,
        width,
        height,
        focal_range: [400.0 * s, 900.0 * s],
        distance_per_focal: [0.005 / s, 0.007 / s],
        ..RigSampling::default()
    }
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), DatasetError> {
    std::fs::write(path, bytes).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn mkdir(path: &Path) -> Result<(), DatasetError> {
    std::fs::create_dir_all(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes a complete toy resource tree under `dir` and returns the path of
/// its `config.json`:
///
/// ```text
/// model/ atlas/ backgrounds/*.png textures/*.png occluders/*.png
/// clips/walk.bvh clips/wave.bvh clips/retarget.json config.json
/// ```
pub fn write_toy_resources(dir: &Path, opts: &ToyResourceOptions) -> Result<PathBuf, DatasetError> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let toy = super::build_toy_biped(opts.n_segments, 0.1);
    save_body_model(&toy.model, &dir.join("model"))?;
    save_atlas(&toy.atlas, &dir.join("atlas"))?;
    for (sub, n) in [("backgrounds", opts.num_backgrounds), ("textures", opts.num_textures), ("occluders", opts.num_occluders)] {
        mkdir(&dir.join(sub))?;
        for i in 0..n {
            let path = dir.join(sub).join(format!("{sub}_{i:03}.png"));
            let bytes = match sub {
                "backgrounds" => rgb_to_png_bytes(&procedural_background(opts.width, opts.height, &mut rng)),
                "textures" => rgb_to_png_bytes(&procedural_texture(&mut rng)),
                _ => rgba_to_png_bytes(&procedural_occluder(96, &mut rng)),
            };
            write(&path, &bytes)?;
        }
    }
    mkdir(&dir.join("clips"))?;
    write(&dir.join("clips/walk.bvh"), write_bvh(&walk_clip()).as_bytes())?;
    write(&dir.join("clips/wave.bvh"), write_bvh(&wave_clip()).as_bytes())?;
    let map = serde_json::to_string_pretty(&toy_retarget_map()).expect("retarget map serializes");
    write(&dir.join("clips/retarget.json"), map.as_bytes())?;
    let config = SceneConfig {
        master_seed: opts.seed,
        num_frames: opts.num_frames,
        model: "model".into(),
        atlas: "atlas".into(),
        backgrounds: "backgrounds".into(),
        textures: "textures".into(),
        occluders: Some("occluders".into()),
        clips: ["walk", "wave"]
            .iter()
            .map(|c| ClipSource {
                bvh: format!("clips/{c}.bvh").into(),
                retarget: "clips/retarget.json".into(),
            })
            .collect(),
        loop_clips: true,
        rig: RigConfig::Sampled(toy_rig(opts.width, opts.height)),
        subject: SubjectSampling::default(),
        occlusion: OcclusionConfig::default(),
        harmonize_lambda: DEFAULT_HARMONIZE_LAMBDA,
        render: RenderSettings::default(),
        points_per_instance: DEFAULT_POINTS_PER_INSTANCE,
        min_in_frame_fraction: 0.05,
        keypoint_names: TOY_JOINT_NAMES.iter().map(|s| s.to_string()).collect(),
    };
    let path = dir.join("config.json");
    write(&path, serde_json::to_string_pretty(&config).expect("config serializes").as_bytes())?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mocap::{parse_bvh, retarget};

    #[test]
    fn clips_round_trip_through_text() {
        for clip in [walk_clip(), wave_clip()] {
            let parsed = parse_bvh(&write_bvh(&clip)).unwrap();
            assert_eq!(parsed, clip.rounded());
            let pose = retarget(&parsed, 3, &toy_retarget_map()).unwrap();
            assert_eq!(pose.joint_rotations.len(), 14);
        }
    }

    #[test]
    fn occluder_has_opaque_and_clear_texels() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..6 {
            let s = procedural_occluder(64, &mut rng);
            let opaque = s.data().iter().filter(|p| p[3] == 1.0).count();
            assert!(opaque > 200 && opaque < 64 * 64);
        }
    }
}
