//! Row-major 2D grids and PNG conversion.

use std::io::Cursor;
use std::path::Path;

use image::{ImageBuffer, ImageFormat, Luma, Rgb, Rgba};
use thiserror::Error;

pub type Rgb32 = [f32; 3];
pub type Rgba32 = [f32; 4];
pub type RgbImage = Raster<Rgb32>;
pub type Mask = Raster<bool>;

#[derive(Debug, Error)]
pub enum RasterError {
    #[error("image I/O failed for {path}: {source}")]
    Image {
        path: String,
        #[source]
        source: image::ImageError,
    },
    #[error("I/O failed for {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// A `width × height` grid stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster<T> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

impl<T: Clone> Raster<T> {
    pub fn filled(width: usize, height: usize, value: T) -> Self {
        Raster {
            width,
            height,
            data: vec![value; width * height],
        }
    }
}

impl<T> Raster<T> {
    pub fn from_vec(width: usize, height: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), width * height, "raster data length mismatch");
        Raster { width, height, data }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Raster { width, height, data }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn get(&self, x: usize, y: usize) -> &T {
        &self.data[y * self.width + x]
    }

    pub fn get_mut(&mut self, x: usize, y: usize) -> &mut T {
        &mut self.data[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, value: T) {
        self.data[y * self.width + x] = value;
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Raster<U> {
        Raster {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn contains(&self, x: i64, y: i64) -> bool {
        x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height
    }
}

impl Raster<bool> {
    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    /// Tight bounds `(x0, y0, x1, y1)` with exclusive upper corners.
    pub fn bounds(&self) -> Option<(usize, usize, usize, usize)> {
        let mut b: Option<(usize, usize, usize, usize)> = None;
        for y in 0..self.height {
            for x in 0..self.width {
                if *self.get(x, y) {
                    b = Some(match b {
                        None => (x, y, x + 1, y + 1),
                        Some((x0, y0, x1, y1)) => (x0.min(x), y0.min(y), x1.max(x + 1), y1.max(y + 1)),
                    });
                }
            }
        }
        b
    }
}

fn to_u8(v: f32) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

pub fn rgb_to_png_bytes(img: &RgbImage) -> Vec<u8> {
    let buf: ImageBuffer<Rgb<u8>, Vec<u8>> =
        ImageBuffer::from_fn(img.width as u32, img.height as u32, |x, y| {
            let p = img.get(x as usize, y as usize);
            Rgb([to_u8(p[0]), to_u8(p[1]), to_u8(p[2])])
        });
    encode_png(&buf)
}

pub fn gray_to_png_bytes(img: &Raster<u8>) -> Vec<u8> {
    let buf: ImageBuffer<Luma<u8>, Vec<u8>> =
        ImageBuffer::from_fn(img.width as u32, img.height as u32, |x, y| {
            Luma([*img.get(x as usize, y as usize)])
        });
    encode_png(&buf)
}

pub fn rgb8_to_png_bytes(width: usize, height: usize, pixels: &[[u8; 3]]) -> Vec<u8> {
    let buf: ImageBuffer<Rgb<u8>, Vec<u8>> =
        ImageBuffer::from_fn(width as u32, height as u32, |x, y| Rgb(pixels[y as usize * width + x as usize]));
    encode_png(&buf)
}

pub fn rgb16_to_png_bytes(width: usize, height: usize, pixels: &[[u16; 3]]) -> Vec<u8> {
    let buf: ImageBuffer<Rgb<u16>, Vec<u16>> =
        ImageBuffer::from_fn(width as u32, height as u32, |x, y| Rgb(pixels[y as usize * width + x as usize]));
    encode_png(&buf)
}

fn encode_png<P>(buf: &ImageBuffer<P, Vec<P::Subpixel>>) -> Vec<u8>
where
    P: image::Pixel + image::PixelWithColorType,
    [P::Subpixel]: image::EncodableLayout,
{
    let mut out = Cursor::new(Vec::new());
    buf.write_to(&mut out, ImageFormat::Png)
        .expect("in-memory PNG encoding cannot fail");
    out.into_inner()
}

pub fn quantize_rgb(img: &RgbImage) -> RgbImage {
    img.map(|p| p.map(|c| to_u8(c) as f32 / 255.0))
}

pub fn read_rgb_png(path: &Path) -> Result<RgbImage, RasterError> {
    let img = image::open(path).map_err(|source| RasterError::Image {
        path: path.display().to_string(),
        source,
    })?;
    let rgb = img.to_rgb8();
    let (w, h) = rgb.dimensions();
    Ok(Raster::from_fn(w as usize, h as usize, |x, y| {
        let p = rgb.get_pixel(x as u32, y as u32).0;
        [p[0] as f32 / 255.0, p[1] as f32 / 255.0, p[2] as f32 / 255.0]
    }))
}

pub fn read_rgba_png(path: &Path) -> Result<Raster<Rgba32>, RasterError> {
    let img = image::open(path).map_err(|source| RasterError::Image {
        path: path.display().to_string(),
        source,
    })?;
    let rgba = img.to_rgba8();
    let (w, h) = rgba.dimensions();
    Ok(Raster::from_fn(w as usize, h as usize, |x, y| {
        let p = rgba.get_pixel(x as u32, y as u32).0;
        p.map(|c| c as f32 / 255.0)
    }))
}

pub fn rgba_to_png_bytes(img: &Raster<Rgba32>) -> Vec<u8> {
    let buf: ImageBuffer<Rgba<u8>, Vec<u8>> =
        ImageBuffer::from_fn(img.width as u32, img.height as u32, |x, y| {
            Rgba(img.get(x as usize, y as usize).map(to_u8))
        });
    encode_png(&buf)
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), RasterError> {
    std::fs::write(path, bytes).map_err(|source| RasterError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Bilinear sample at continuous pixel coordinates (pixel centers at `i + 0.5`), clamped at borders.
pub fn sample_bilinear(img: &RgbImage, x: f64, y: f64) -> Rgb32 {
    let fx = (x - 0.5).clamp(0.0, (img.width - 1) as f64);
    let fy = (y - 0.5).clamp(0.0, (img.height - 1) as f64);
    let x0 = fx.floor() as usize;
    let y0 = fy.floor() as usize;
    let x1 = (x0 + 1).min(img.width - 1);
    let y1 = (y0 + 1).min(img.height - 1);
    let tx = (fx - x0 as f64) as f32;
    let ty = (fy - y0 as f64) as f32;
    let (a, b, c, d) = (img.get(x0, y0), img.get(x1, y0), img.get(x0, y1), img.get(x1, y1));
    let mut out = [0.0f32; 3];
    for k in 0..3 {
        let top = a[k] + (b[k] - a[k]) * tx;
        let bot = c[k] + (d[k] - c[k]) * tx;
        out[k] = top + (bot - top) * ty;
    }
    out
}

/// Bilinear resample to a new size.
pub fn resize_bilinear(img: &RgbImage, width: usize, height: usize) -> RgbImage {
    if img.dims() == (width, height) {
        return img.clone();
    }
    let sx = img.width as f64 / width as f64;
    let sy = img.height as f64 / height as f64;
    Raster::from_fn(width, height, |x, y| {
        sample_bilinear(img, (x as f64 + 0.5) * sx, (y as f64 + 0.5) * sy)
    })
}
