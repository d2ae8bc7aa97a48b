//! 2D occluder compositing over rendered frames, label updates under
//! occlusion, and a statistical color-harmonisation stand-in.

mod feather;
mod harmonize;

pub use feather::{default_band, feather_alpha};
pub use harmonize::{harmonize, DEFAULT_HARMONIZE_LAMBDA};

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::atlas::IuvSample;
use crate::dataset::{rle_decode, rle_encode, DenseAnnotation, RleMask};
use crate::raster::{read_rgba_png, Mask, Raster, RasterError, RgbImage, Rgba32};
use crate::render::FrameBuffers;

#[derive(Debug, Error)]
pub enum CompositorError {
    #[error("occluder {0:?} has no opaque pixels")]
    EmptySprite(String),
    #[error("occluder {0:?} has alpha outside [0, 1]")]
    AlphaOutOfRange(String),
    #[error("harmonisation needs a non-empty foreground mask")]
    EmptyForeground,
    #[error("harmonisation needs background pixels outside the mask")]
    NoBackground,
    #[error("mask is {mask:?} but image is {image:?}")]
    SizeMismatch { mask: (usize, usize), image: (usize, usize) },
    #[error(transparent)]
    Raster(#[from] RasterError),
}

/// A segmented object cut-out; alpha is its segmentation.
#[derive(Debug, Clone, PartialEq)]
pub struct OccluderSprite {
    pub image: Raster<Rgba32>,
    pub source_id: String,
}

impl OccluderSprite {
    pub fn new(image: Raster<Rgba32>, source_id: impl Into<String>) -> Result<Self, CompositorError> {
        let source_id = source_id.into();
        if image.data().iter().any(|p| !(0.0..=1.0).contains(&p[3])) {
            return Err(CompositorError::AlphaOutOfRange(source_id));
        }
        if !image.data().iter().any(|p| p[3] >= 0.5) {
            return Err(CompositorError::EmptySprite(source_id));
        }
        Ok(OccluderSprite { image, source_id })
    }

    pub fn load(path: &Path) -> Result<Self, CompositorError> {
        let image = read_rgba_png(path)?;
        let id = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        OccluderSprite::new(image, id)
    }

    pub fn max_dimension(&self) -> usize {
        self.image.width().max(self.image.height())
    }

    /// Binary segmentation (`alpha >= 0.5`).
    pub fn mask(&self) -> Mask {
        self.image.map(|p| p[3] >= 0.5)
    }

    /// Colors with transparent texels filled from their opaque neighbours,
    /// so a feathered edge blends toward the object color rather than black.
    pub fn bled_rgb(&self, steps: usize) -> RgbImage {
        let (w, h) = self.image.dims();
        let mut filled = self.mask();
        let mut rgb = self.image.map(|p| [p[0], p[1], p[2]]);
        for _ in 0..steps {
            let mut next_rgb = rgb.clone();
            let mut next_filled = filled.clone();
            let mut changed = false;
            for y in 0..h {
                for x in 0..w {
                    if *filled.get(x, y) {
                        continue;
                    }
                    let mut acc = [0.0f32; 3];
                    let mut n = 0.0f32;
                    for (dx, dy) in [(-1i64, 0i64), (1, 0), (0, -1), (0, 1)] {
                        let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                        if filled.contains(nx, ny) && *filled.get(nx as usize, ny as usize) {
                            let c = rgb.get(nx as usize, ny as usize);
                            (0..3).for_each(|k| acc[k] += c[k]);
                            n += 1.0;
                        }
                    }
                    if n > 0.0 {
                        next_rgb.set(x, y, acc.map(|a| a / n));
                        next_filled.set(x, y, true);
                        changed = true;
                    }
                }
            }
            rgb = next_rgb;
            filled = next_filled;
            if !changed {
                break;
            }
        }
        rgb
    }
}

/// Where a sprite lands in the frame: uniform scale, centre in pixels, and a
/// rotation in radians.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub scale: f64,
    pub center: [f64; 2],
    pub rotation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlacementRanges {
    /// Sprite's larger side as a fraction of the person box diagonal.
    pub size_fraction: [f64; 2],
    /// Total growth of the box within which the centre is drawn.
    pub center_dilation: f64,
    pub max_rotation_deg: f64,
}

impl Default for PlacementRanges {
    fn default() -> Self {
        PlacementRanges {
            size_fraction: [0.2, 0.7],
            center_dilation: 0.1,
            max_rotation_deg: 15.0,
        }
    }
}

/// Placement randomness drawn before the person box is known.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlacementDraw {
    pub size_fraction: f64,
    /// Centre relative to the box, `0..1` spanning it.
    pub center_fraction: [f64; 2],
    pub rotation: f64,
}

fn uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

pub fn draw_placement(rng: &mut impl Rng, ranges: &PlacementRanges) -> PlacementDraw {
    let size_fraction = uniform(rng, ranges.size_fraction[0], ranges.size_fraction[1]);
    let d = ranges.center_dilation / 2.0;
    let cx = uniform(rng, -d, 1.0 + d);
    let cy = uniform(rng, -d, 1.0 + d);
    let r = ranges.max_rotation_deg.to_radians();
    PlacementDraw {
        size_fraction,
        center_fraction: [cx, cy],
        rotation: uniform(rng, -r, r),
    }
}

impl PlacementDraw {
    /// Scales against `bbox = [x, y, w, h]` and a sprite of the given larger side.
    pub fn resolve(&self, bbox: [f64; 4], sprite_max_dim: usize) -> Placement {
        let diag = bbox[2].hypot(bbox[3]);
        Placement {
            scale: self.size_fraction * diag / sprite_max_dim as f64,
            center: [
                bbox[0] + self.center_fraction[0] * bbox[2],
                bbox[1] + self.center_fraction[1] * bbox[3],
            ],
            rotation: self.rotation,
        }
    }
}

/// Random placement over a person box: larger side uniform in 20–70% of the
/// box diagonal, centre uniform in the box grown by 10%, rotation within ±15°.
pub fn sample_placement(
    rng: &mut impl Rng,
    bbox: [f64; 4],
    sprite: &OccluderSprite,
    ranges: &PlacementRanges,
) -> Placement {
    draw_placement(rng, ranges).resolve(bbox, sprite.max_dimension())
}

/// Sprite color and alpha resampled into frame coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedOccluder {
    pub rgb: RgbImage,
    pub alpha: Raster<f32>,
}

/// Bilinear resampling of a sprite into a `width × height` frame. Texels
/// outside the sprite count as fully transparent.
pub fn resolve_sprite(
    sprite_rgb: &RgbImage,
    alpha: &Raster<f32>,
    placement: &Placement,
    width: usize,
    height: usize,
) -> ResolvedOccluder {
    let (sw, sh) = alpha.dims();
    let mut rgb = Raster::filled(width, height, [0.0f32; 3]);
    let mut out_alpha = Raster::filled(width, height, 0.0f32);
    let (sin, cos) = placement.rotation.sin_cos();
    let s = placement.scale;
    let half = [sw as f64 / 2.0, sh as f64 / 2.0];
    // Screen-space bounding box of the rotated sprite.
    let ext_x = s * (half[0] * cos.abs() + half[1] * sin.abs()) + 1.0;
    let ext_y = s * (half[0] * sin.abs() + half[1] * cos.abs()) + 1.0;
    let [cx, cy] = placement.center;
    let x0 = (cx - ext_x).floor().max(0.0) as usize;
    let y0 = (cy - ext_y).floor().max(0.0) as usize;
    let x1 = ((cx + ext_x).ceil().max(0.0) as usize).min(width);
    let y1 = ((cy + ext_y).ceil().max(0.0) as usize).min(height);
    for y in y0..y1 {
        for x in x0..x1 {
            let (dx, dy) = (x as f64 + 0.5 - cx, y as f64 + 0.5 - cy);
            // Inverse map: frame pixel to sprite texel.
            let qx = (cos * dx - sin * dy) / s + half[0] - 0.5;
            let qy = (sin * dx + cos * dy) / s + half[1] - 0.5;
            if qx <= -1.0 || qy <= -1.0 || qx >= sw as f64 || qy >= sh as f64 {
                continue;
            }
            let (ix, iy) = (qx.floor() as i64, qy.floor() as i64);
            let (fx, fy) = ((qx - ix as f64) as f32, (qy - iy as f64) as f32);
            let mut a = 0.0f32;
            let mut c = [0.0f32; 3];
            for (ox, oy, wgt) in [(0, 0, (1.0 - fx) * (1.0 - fy)), (1, 0, fx * (1.0 - fy)), (0, 1, (1.0 - fx) * fy), (1, 1, fx * fy)]
            {
                let (tx, ty) = (ix + ox, iy + oy);
                if tx < 0 || ty < 0 || tx >= sw as i64 || ty >= sh as i64 || wgt == 0.0 {
                    continue;
                }
                let ta = *alpha.get(tx as usize, ty as usize) * wgt;
                let tc = sprite_rgb.get(tx as usize, ty as usize);
                a += ta;
                (0..3).for_each(|k| c[k] += tc[k] * ta);
            }
            if a > 0.0 {
                out_alpha.set(x, y, a.min(1.0));
                rgb.set(x, y, c.map(|v| (v / a).clamp(0.0, 1.0)));
            }
        }
    }
    ResolvedOccluder { rgb, alpha: out_alpha }
}

/// `α·sprite + (1−α)·base` per channel; pixels with `α = 0` are left untouched.
pub fn composite(base: &RgbImage, occluder: &ResolvedOccluder) -> RgbImage {
    let mut out = base.clone();
    for (i, px) in out.data_mut().iter_mut().enumerate() {
        let a = occluder.alpha.data()[i];
        if a > 0.0 {
            let s = occluder.rgb.data()[i];
            for k in 0..3 {
                px[k] = a * s[k] + (1.0 - a) * px[k];
            }
        }
    }
    out
}

/// Resamples the sprite by `placement` and blends it over `base`.
pub fn alpha_blend(base: &RgbImage, sprite_rgb: &RgbImage, alpha: &Raster<f32>, placement: &Placement) -> RgbImage {
    composite(base, &resolve_sprite(sprite_rgb, alpha, placement, base.width(), base.height()))
}

/// Feathers a sprite with the configured (or default) band and resolves it.
pub fn prepare_occluder(
    sprite: &OccluderSprite,
    placement: &Placement,
    band: Option<(f64, f64)>,
    width: usize,
    height: usize,
) -> ResolvedOccluder {
    let (band_px, sigma_px) = band.unwrap_or_else(|| default_band(sprite.max_dimension()));
    let alpha = feather_alpha(&sprite.mask(), band_px, sigma_px);
    let steps = (band_px + 3.0 * sigma_px).ceil() as usize + 2;
    resolve_sprite(&sprite.bled_rgb(steps), &alpha, placement, width, height)
}

/// Drops labels under occluder pixels with `α > threshold`: dense points on
/// such pixels are removed and mask pixels cleared. The box is kept. With
/// `enabled == false` the annotation is returned unchanged.
pub fn update_labels_for_occlusion(
    annotation: &DenseAnnotation,
    alpha: &Raster<f32>,
    threshold: f64,
    enabled: bool,
) -> DenseAnnotation {
    if !enabled {
        return annotation.clone();
    }
    let covered = |px: i64, py: i64| alpha.contains(px, py) && *alpha.get(px as usize, py as usize) as f64 > threshold;
    let mut out = annotation.clone();
    out.points.retain(|p| {
        let (px, py) = annotation.box_to_pixel(p.x, p.y);
        !covered(px, py)
    });
    let clear = |rle: &RleMask, pixel: &dyn Fn(usize, usize) -> (i64, i64)| -> RleMask {
        let mut m = rle_decode(rle).expect("annotation masks are well formed");
        let (w, h) = m.dims();
        for y in 0..h {
            for x in 0..w {
                if *m.get(x, y) {
                    let (px, py) = pixel(x, y);
                    if covered(px, py) {
                        m.set(x, y, false);
                    }
                }
            }
        }
        rle_encode(&m)
    };
    out.fg_rle = clear(&annotation.fg_rle, &|x, y| (x as i64, y as i64));
    out.part_rles = annotation
        .part_rles
        .iter()
        .map(|r| clear(r, &|i, j| annotation.cell_to_pixel(i, j)))
        .collect();
    out
}

/// Clears label buffers under occluder pixels with `α > threshold`.
pub fn occlude_label_buffers(buffers: &mut FrameBuffers, alpha: &Raster<f32>, threshold: f64) {
    for (i, &a) in alpha.data().iter().enumerate() {
        if a as f64 > threshold {
            buffers.iuv.data_mut()[i] = IuvSample::BACKGROUND;
            buffers.part_seg.data_mut()[i] = 0;
            buffers.instance_mask.data_mut()[i] = false;
            buffers.depth.data_mut()[i] = f32::INFINITY;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn disk_sprite(size: usize) -> OccluderSprite {
        let c = size as f64 / 2.0;
        let img = Raster::from_fn(size, size, |x, y| {
            let inside = (x as f64 + 0.5 - c).hypot(y as f64 + 0.5 - c) < c * 0.8;
            if inside {
                [0.9, 0.1, 0.1, 1.0]
            } else {
                [0.0; 4]
            }
        });
        OccluderSprite::new(img, "disk").unwrap()
    }

    #[test]
    fn placement_is_deterministic() {
        let s = disk_sprite(32);
        let r = PlacementRanges::default();
        let a = sample_placement(&mut ChaCha8Rng::seed_from_u64(3), [10.0, 20.0, 60.0, 80.0], &s, &r);
        let b = sample_placement(&mut ChaCha8Rng::seed_from_u64(3), [10.0, 20.0, 60.0, 80.0], &s, &r);
        assert_eq!(a, b);
    }

    #[test]
    fn blend_limits() {
        let base = Raster::filled(4, 4, [0.2f32; 3]);
        let sprite = Raster::filled(4, 4, [0.8f32; 3]);
        let identity = Placement {
            scale: 1.0,
            center: [2.0, 2.0],
            rotation: 0.0,
        };
        let out = alpha_blend(&base, &sprite, &Raster::filled(4, 4, 1.0), &identity);
        assert!(out.data().iter().all(|p| *p == [0.8f32; 3]));
        let out = alpha_blend(&base, &sprite, &Raster::filled(4, 4, 0.0), &identity);
        assert_eq!(out, base);
        let out = alpha_blend(&base, &sprite, &Raster::filled(4, 4, 0.5), &identity);
        assert!(out.data().iter().all(|p| *p == [0.5f32; 3]));
    }

    #[test]
    fn empty_sprite_rejected() {
        let img = Raster::filled(4, 4, [0.0f32; 4]);
        assert!(matches!(OccluderSprite::new(img, "x"), Err(CompositorError::EmptySprite(_))));
    }

    #[test]
    fn bleeding_keeps_opaque_colors() {
        let s = disk_sprite(24);
        let bled = s.bled_rgb(48);
        for (i, p) in s.image.data().iter().enumerate() {
            if p[3] >= 0.5 {
                assert_eq!(bled.data()[i], [p[0], p[1], p[2]]);
            } else {
                assert!(bled.data()[i][0] > 0.5);
            }
        }
    }
}
