use rand::Rng;

use super::{AtlasError, IuvSample, NUM_CHARTS, NUM_PARTS};
use crate::raster::{Raster, Rgb32, RgbImage};

/// Chart tiles packed into one texture image: 6 columns by 4 rows.
///
/// Chart `I` occupies column `(I-1) % 6`, row `(I-1) / 6`; inside a tile, `u`
/// runs left to right and `v` bottom to top.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TextureLayout {
    pub tile_width: usize,
    pub tile_height: usize,
}

pub const LAYOUT_COLS: usize = 6;
pub const LAYOUT_ROWS: usize = 4;

impl TextureLayout {
    pub fn for_texture(width: usize, height: usize) -> TextureLayout {
        TextureLayout {
            tile_width: (width / LAYOUT_COLS).max(1),
            tile_height: (height / LAYOUT_ROWS).max(1),
        }
    }

    pub fn width(&self) -> usize {
        self.tile_width * LAYOUT_COLS
    }

    pub fn height(&self) -> usize {
        self.tile_height * LAYOUT_ROWS
    }

    /// Pixel rectangle `(x0, y0)` of a chart's tile.
    pub fn tile_origin(&self, chart: u8) -> (usize, usize) {
        let i = chart as usize - 1;
        ((i % LAYOUT_COLS) * self.tile_width, (i / LAYOUT_COLS) * self.tile_height)
    }

    /// Chart owning texel `(x, y)`.
    pub fn chart_at(&self, x: usize, y: usize) -> Option<u8> {
        let (c, r) = (x / self.tile_width, y / self.tile_height);
        (c < LAYOUT_COLS && r < LAYOUT_ROWS).then(|| (r * LAYOUT_COLS + c + 1) as u8)
    }
}

/// Bilinear texture lookup restricted to the sample's chart tile.
pub fn sample_texture(texture: &RgbImage, layout: &TextureLayout, iuv: &IuvSample) -> Rgb32 {
    if iuv.chart == 0 || iuv.chart as usize > NUM_CHARTS {
        return [0.0; 3];
    }
    let (x0, y0) = layout.tile_origin(iuv.chart);
    let (tw, th) = (layout.tile_width as f64, layout.tile_height as f64);
    let fx = (iuv.u.clamp(0.0, 1.0) * tw - 0.5).clamp(0.0, tw - 1.0);
    let fy = ((1.0 - iuv.v.clamp(0.0, 1.0)) * th - 0.5).clamp(0.0, th - 1.0);
    let (ix, iy) = (fx.floor() as usize, fy.floor() as usize);
    let (ax, ay) = ((fx - ix as f64) as f32, (fy - iy as f64) as f32);
    let ix1 = (ix + 1).min(layout.tile_width - 1);
    let iy1 = (iy + 1).min(layout.tile_height - 1);
    let px = |x: usize, y: usize| *texture.get(x0 + x, y0 + y);
    let (p00, p10, p01, p11) = (px(ix, iy), px(ix1, iy), px(ix, iy1), px(ix1, iy1));
    let mut out = [0.0; 3];
    for c in 0..3 {
        let top = p00[c] + (p10[c] - p00[c]) * ax;
        let bottom = p01[c] + (p11[c] - p01[c]) * ax;
        out[c] = top + (bottom - top) * ay;
    }
    out
}

/// Semantic part id per texel (0 outside any tile).
pub fn part_layout(layout: &TextureLayout, chart_to_part: &[u8; NUM_CHARTS]) -> Raster<u8> {
    Raster::from_fn(layout.width(), layout.height(), |x, y| {
        layout.chart_at(x, y).map_or(0, |c| chart_to_part[c as usize - 1])
    })
}

/// Output of [`mix_textures`] with the coin drawn for each part.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedTexture {
    pub texture: RgbImage,
    /// `choices[p - 1]` is true when part `p` was taken from the second texture.
    pub choices: [bool; NUM_PARTS],
}

const FEATHER: usize = 2;

/// Stitches two textures part by part: each semantic part comes wholly from `a`
/// or `b` by a fair coin, with a 2-texel feather across part boundaries.
pub fn mix_textures(
    a: &RgbImage,
    b: &RgbImage,
    parts: &Raster<u8>,
    rng: &mut impl Rng,
) -> Result<MixedTexture, AtlasError> {
    if a.dims() != b.dims() {
        return Err(AtlasError::TextureSize {
            a: a.dims(),
            b: b.dims(),
        });
    }
    if parts.dims() != a.dims() {
        return Err(AtlasError::TextureSize {
            a: a.dims(),
            b: parts.dims(),
        });
    }
    let mut choices = [false; NUM_PARTS];
    for c in &mut choices {
        *c = rng.random_bool(0.5);
    }
    let pick = parts.map(|&p| {
        if (1..=NUM_PARTS as u8).contains(&p) && choices[p as usize - 1] {
            1.0f32
        } else {
            0.0
        }
    });
    let weight = box_blur(&pick, FEATHER);
    let (w, h) = a.dims();
    let texture = Raster::from_fn(w, h, |x, y| {
        let t = *weight.get(x, y);
        let (pa, pb) = (a.get(x, y), b.get(x, y));
        if t == 0.0 {
            *pa
        } else if t == 1.0 {
            *pb
        } else {
            [0, 1, 2].map(|c| pa[c] + t * (pb[c] - pa[c]))
        }
    });
    Ok(MixedTexture { texture, choices })
}

/// Mean over a `(2r+1)²` window with edge clamping.
fn box_blur(img: &Raster<f32>, r: usize) -> Raster<f32> {
    let (w, h) = img.dims();
    let n = (2 * r + 1) as f32;
    let clamp = |i: isize, n: usize| i.clamp(0, n as isize - 1) as usize;
    let horizontal = Raster::from_fn(w, h, |x, y| {
        (-(r as isize)..=r as isize)
            .map(|d| *img.get(clamp(x as isize + d, w), y))
            .sum::<f32>()
            / n
    });
    Raster::from_fn(w, h, |x, y| {
        let s = (-(r as isize)..=r as isize)
            .map(|d| *horizontal.get(x, clamp(y as isize + d, h)))
            .sum::<f32>()
            / n;
        // Snap window sums of identical values back to exact 0 or 1.
        if s < 1e-6 {
            0.0
        } else if s > 1.0 - 1e-6 {
            1.0
        } else {
            s
        }
    })
}
