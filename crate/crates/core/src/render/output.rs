//! Encodings of the label buffers.
//!
//! * IUV, 8-bit: RGB PNG with R = chart index `I`, G = `round(255·U)`, B = `round(255·V)`.
//! * IUV, 16-bit: RGB PNG with R = `I`, G = `round(65535·U)`, B = `round(65535·V)`.
//! * Part segmentation: indexed (palette) PNG whose index is the part id 0..=14.
//! * Depth: raw little-endian `f32`, row-major, `+∞` on background.

use crate::atlas::IuvSample;
use crate::raster::{rgb16_to_png_bytes, rgb8_to_png_bytes, Raster};

pub fn iuv_to_png8(iuv: &Raster<IuvSample>) -> Vec<u8> {
    let q = |x: f64| (x.clamp(0.0, 1.0) * 255.0).round() as u8;
    let px: Vec<[u8; 3]> = iuv.data().iter().map(|s| [s.chart, q(s.u), q(s.v)]).collect();
    rgb8_to_png_bytes(iuv.width(), iuv.height(), &px)
}

pub fn iuv_to_png16(iuv: &Raster<IuvSample>) -> Vec<u8> {
    let q = |x: f64| (x.clamp(0.0, 1.0) * 65535.0).round() as u16;
    let px: Vec<[u16; 3]> = iuv.data().iter().map(|s| [s.chart as u16, q(s.u), q(s.v)]).collect();
    rgb16_to_png_bytes(iuv.width(), iuv.height(), &px)
}

/// Display colors for parts 0..=14 (0 is black background).
pub fn part_palette() -> [[u8; 3]; 15] {
    [
        [0, 0, 0],
        [230, 25, 75],
        [60, 180, 75],
        [255, 225, 25],
        [0, 130, 200],
        [245, 130, 48],
        [145, 30, 180],
        [70, 240, 240],
        [240, 50, 230],
        [210, 245, 60],
        [250, 190, 212],
        [0, 128, 128],
        [220, 190, 255],
        [170, 110, 40],
        [255, 250, 200],
    ]
}

pub fn part_seg_to_png(parts: &Raster<u8>) -> Vec<u8> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, parts.width() as u32, parts.height() as u32);
        enc.set_color(png::ColorType::Indexed);
        enc.set_depth(png::BitDepth::Eight);
        enc.set_palette(part_palette().concat());
        let mut writer = enc.write_header().expect("in-memory PNG header");
        writer.write_image_data(parts.data()).expect("in-memory PNG data");
    }
    out
}

pub fn depth_to_bytes(depth: &Raster<f32>) -> Vec<u8> {
    depth.data().iter().flat_map(|d| d.to_le_bytes()).collect()
}
