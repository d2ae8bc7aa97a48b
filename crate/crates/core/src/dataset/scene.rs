use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::SceneConfig;
use super::DatasetError;
use crate::compositor::{draw_placement, PlacementDraw};

/// Counts of loaded resources that scene sampling draws from.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneCatalog {
    pub num_cameras: usize,
    pub num_backgrounds: usize,
    pub num_textures: usize,
    pub num_occluders: usize,
    /// `(frame count, frame time)` per clip.
    pub clips: Vec<(usize, f64)>,
    pub num_shape: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OccluderDraw {
    pub sprite_id: usize,
    pub placement: PlacementDraw,
}

/// Everything random about one frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub frame_index: usize,
    pub camera_id: usize,
    pub background_id: usize,
    pub clip_id: usize,
    pub clip_time: f64,
    pub yaw: f64,
    pub offset: [f64; 2],
    pub shape: Vec<f64>,
    pub texture_a: usize,
    pub texture_b: usize,
    pub mix_seed: u64,
    pub point_seed: u64,
    pub noise_seed: u64,
    pub occluders: Vec<OccluderDraw>,
}

/// `SHA-256(master_seed ‖ frame_index)`, both little-endian `u64`.
pub fn frame_seed_bytes(master_seed: u64, frame_index: u64) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(master_seed.to_le_bytes());
    h.update(frame_index.to_le_bytes());
    h.finalize().into()
}

/// The frame's private generator; independent of any other frame.
pub fn frame_rng(master_seed: u64, frame_index: u64) -> ChaCha8Rng {
    ChaCha8Rng::from_seed(frame_seed_bytes(master_seed, frame_index))
}

fn uniform(rng: &mut impl Rng, r: [f64; 2]) -> f64 {
    if r[1] > r[0] {
        rng.random_range(r[0]..r[1])
    } else {
        r[0]
    }
}

/// Draws a frame's recipe from its own generator. Draw order is fixed, and
/// occluders come last so toggling them leaves every other choice unchanged.
pub fn sample_scene(config: &SceneConfig, catalog: &SceneCatalog, frame_index: usize) -> Result<SceneSpec, DatasetError> {
    for (what, n) in [
        ("cameras", catalog.num_cameras),
        ("backgrounds", catalog.num_backgrounds),
        ("textures", catalog.num_textures),
        ("clips", catalog.clips.len()),
    ] {
        if n == 0 {
            return Err(DatasetError::EmptyResources(what.into()));
        }
    }
    let mut rng = frame_rng(config.master_seed, frame_index as u64);
    let camera_id = rng.random_range(0..catalog.num_cameras);
    let background_id = rng.random_range(0..catalog.num_backgrounds);
    let clip_id = rng.random_range(0..catalog.clips.len());
    let (frames, dt) = catalog.clips[clip_id];
    let span = if config.loop_clips { frames } else { frames.saturating_sub(1) };
    let clip_time = uniform(&mut rng, [0.0, span as f64 * dt]);
    let subject = &config.subject;
    let yaw = uniform(&mut rng, subject.yaw_range_deg).to_radians();
    let offset = [uniform(&mut rng, subject.offset_x), uniform(&mut rng, subject.offset_z)];
    let shape = match Normal::new(0.0, subject.shape_sigma) {
        Ok(n) if subject.shape_sigma > 0.0 => (0..catalog.num_shape)
            .map(|_| n.sample(&mut rng).clamp(-subject.shape_clamp, subject.shape_clamp))
            .collect(),
        _ => vec![0.0; catalog.num_shape],
    };
    let texture_a = rng.random_range(0..catalog.num_textures);
    let texture_b = rng.random_range(0..catalog.num_textures);
    let mix_seed = rng.random();
    let point_seed = rng.random();
    let noise_seed = rng.random();
    let mut occluders = Vec::new();
    let occ = &config.occlusion;
    if config.occluders_active() && catalog.num_occluders > 0 && rng.random_bool(occ.probability) {
        let count = rng.random_range(1..=occ.max_per_frame);
        for _ in 0..count {
            occluders.push(OccluderDraw {
                sprite_id: rng.random_range(0..catalog.num_occluders),
                placement: draw_placement(&mut rng, &occ.placement),
            });
        }
    }
    Ok(SceneSpec {
        frame_index,
        camera_id,
        background_id,
        clip_id,
        clip_time,
        yaw,
        offset,
        shape,
        texture_a,
        texture_b,
        mix_seed,
        point_seed,
        noise_seed,
        occluders,
    })
}
