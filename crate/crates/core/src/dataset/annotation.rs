use rand::Rng;
use serde::{Deserialize, Serialize};

use super::rle::{rle_encode, RleMask};
use super::DatasetError;
use crate::atlas::NUM_PARTS;
use crate::raster::Raster;
use crate::render::{FrameBuffers, Keypoint};

/// Side of the normalized box frame used for dense points and part masks.
pub const BOX_FRAME: usize = 256;
pub const DEFAULT_POINTS_PER_INSTANCE: usize = 196;

/// A sampled correspondence, `x`/`y` in the 256-normalized box frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensePoint {
    pub x: f64,
    pub y: f64,
    pub chart: u8,
    pub u: f64,
    pub v: f64,
}

/// Ground truth (or a prediction, when `score` is set) for one person instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseAnnotation {
    pub id: u64,
    pub image_id: u64,
    /// `[x, y, w, h]` in pixels, tight on the instance mask.
    pub bbox: [f64; 4],
    /// Full-image instance mask.
    pub fg_rle: RleMask,
    /// One 256×256 mask per semantic part, resampled into the box.
    pub part_rles: Vec<RleMask>,
    pub points: Vec<DensePoint>,
    pub keypoints: Vec<Keypoint>,
    pub score: Option<f64>,
}

impl DenseAnnotation {
    /// Pixel column and row under a box-frame coordinate pair.
    pub fn box_to_pixel(&self, x: f64, y: f64) -> (i64, i64) {
        let [bx, by, bw, bh] = self.bbox;
        (
            (bx + x * bw / BOX_FRAME as f64).floor() as i64,
            (by + y * bh / BOX_FRAME as f64).floor() as i64,
        )
    }

    /// Pixel sampled by cell `(i, j)` of the 256×256 part masks.
    pub fn cell_to_pixel(&self, i: usize, j: usize) -> (i64, i64) {
        self.box_to_pixel(i as f64 + 0.5, j as f64 + 0.5)
    }

    pub fn area(&self) -> u64 {
        self.fg_rle.area()
    }

    /// Copy with every float rounded to 6 significant digits, matching the
    /// JSON text written by [`super::write_coco`].
    pub fn rounded(&self) -> DenseAnnotation {
        let r = crate::math::round_sig6;
        DenseAnnotation {
            bbox: self.bbox.map(r),
            points: self
                .points
                .iter()
                .map(|p| DensePoint {
                    x: r(p.x),
                    y: r(p.y),
                    chart: p.chart,
                    u: r(p.u),
                    v: r(p.v),
                })
                .collect(),
            keypoints: self
                .keypoints
                .iter()
                .map(|k| Keypoint {
                    x: r(k.x),
                    y: r(k.y),
                    flag: k.flag,
                })
                .collect(),
            score: self.score.map(r),
            ..self.clone()
        }
    }
}

/// Builds the annotation of the single rendered instance.
///
/// Dense points are a uniform sample without replacement of the foreground
/// pixels (all of them when fewer than `n_points`), listed in raster order.
pub fn extract_annotation(
    buffers: &FrameBuffers,
    keypoints: Vec<Keypoint>,
    id: u64,
    image_id: u64,
    n_points: usize,
    rng: &mut impl Rng,
) -> Result<DenseAnnotation, DatasetError> {
    let mask = &buffers.instance_mask;
    let (x0, y0, x1, y1) = mask.bounds().ok_or(DatasetError::EmptyInstance)?;
    let (w, _) = mask.dims();
    let bbox = [x0 as f64, y0 as f64, (x1 - x0) as f64, (y1 - y0) as f64];
    let fg: Vec<usize> = mask
        .data()
        .iter()
        .enumerate()
        .filter_map(|(i, &b)| b.then_some(i))
        .collect();
    let chosen: Vec<usize> = if fg.len() <= n_points {
        fg
    } else {
        let mut idx = rand::seq::index::sample(rng, fg.len(), n_points).into_vec();
        idx.sort_unstable();
        idx.into_iter().map(|i| fg[i]).collect()
    };
    let scale_x = BOX_FRAME as f64 / bbox[2];
    let scale_y = BOX_FRAME as f64 / bbox[3];
    let points = chosen
        .into_iter()
        .map(|i| {
            let (px, py) = (i % w, i / w);
            let s = buffers.iuv.get(px, py);
            DensePoint {
                x: (px as f64 + 0.5 - bbox[0]) * scale_x,
                y: (py as f64 + 0.5 - bbox[1]) * scale_y,
                chart: s.chart,
                u: s.u,
                v: s.v,
            }
        })
        .collect();
    let mut ann = DenseAnnotation {
        id,
        image_id,
        bbox,
        fg_rle: rle_encode(mask),
        part_rles: Vec::new(),
        points,
        keypoints,
        score: None,
    };
    let cells = Raster::from_fn(BOX_FRAME, BOX_FRAME, |i, j| {
        let (px, py) = ann.cell_to_pixel(i, j);
        *buffers.part_seg.get(px as usize, py as usize)
    });
    ann.part_rles = (1..=NUM_PARTS as u8)
        .map(|p| rle_encode(&cells.map(|&c| c == p)))
        .collect();
    Ok(ann)
}
