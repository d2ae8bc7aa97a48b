use super::CompositorError;
use crate::raster::{Mask, RgbImage};

pub const DEFAULT_HARMONIZE_LAMBDA: f64 = 0.5;

/// Channel spread below which statistics are treated as degenerate.
const MIN_STD: f64 = 1e-6;

fn to_ycbcr(p: &[f32; 3]) -> [f64; 3] {
    let (r, g, b) = (p[0] as f64, p[1] as f64, p[2] as f64);
    let y = 0.299 * r + 0.587 * g + 0.114 * b;
    [y, 0.5 + (b - y) / 1.772, 0.5 + (r - y) / 1.402]
}

fn to_rgb(c: [f64; 3]) -> [f32; 3] {
    let (y, cb, cr) = (c[0], c[1] - 0.5, c[2] - 0.5);
    let r = y + 1.402 * cr;
    let b = y + 1.772 * cb;
    let g = (y - 0.299 * r - 0.114 * b) / 0.587;
    [r, g, b].map(|v| v.clamp(0.0, 1.0) as f32)
}

fn stats(values: impl Iterator<Item = [f64; 3]>) -> ([f64; 3], [f64; 3]) {
    let (mut n, mut sum, mut sq) = (0.0, [0.0; 3], [0.0; 3]);
    for v in values {
        n += 1.0;
        for k in 0..3 {
            sum[k] += v[k];
            sq[k] += v[k] * v[k];
        }
    }
    let mean = sum.map(|s| s / n);
    let std = [0, 1, 2].map(|k| (sq[k] / n - mean[k] * mean[k]).max(0.0).sqrt());
    (mean, std)
}

/// Deterministic stand-in for learned scene harmonisation: in YCbCr, moves
/// the foreground's per-channel mean and spread toward the background's by
/// `lambda ∈ [0, 1]`, then clamps to `[0, 1]`.
///
/// When either side of a channel has (near) zero spread, only the mean is
/// transferred for that channel. Background pixels are returned unchanged.
pub fn harmonize(image: &RgbImage, foreground: &Mask, lambda: f64) -> Result<RgbImage, CompositorError> {
    if foreground.dims() != image.dims() {
        return Err(CompositorError::SizeMismatch {
            mask: foreground.dims(),
            image: image.dims(),
        });
    }
    let n_fg = foreground.count();
    if n_fg == 0 {
        return Err(CompositorError::EmptyForeground);
    }
    if n_fg == foreground.len() {
        return Err(CompositorError::NoBackground);
    }
    if lambda == 0.0 {
        return Ok(image.clone());
    }
    let ycc: Vec<[f64; 3]> = image.data().iter().map(to_ycbcr).collect();
    let fg = foreground.data();
    let (mf, sf) = stats(ycc.iter().zip(fg).filter(|(_, &m)| m).map(|(c, _)| *c));
    let (mb, sb) = stats(ycc.iter().zip(fg).filter(|(_, &m)| !m).map(|(c, _)| *c));
    let gain = [0, 1, 2].map(|k| if sf[k] < MIN_STD || sb[k] < MIN_STD { 1.0 } else { sb[k] / sf[k] });
    let mut out = image.clone();
    for (i, px) in out.data_mut().iter_mut().enumerate() {
        if !fg[i] {
            continue;
        }
        let c = ycc[i];
        let t = [0, 1, 2].map(|k| {
            let target = (c[k] - mf[k]) * gain[k] + mb[k];
            c[k] + lambda * (target - c[k])
        });
        *px = to_rgb(t);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::Raster;

    #[test]
    fn ycbcr_round_trip() {
        for p in [[0.1f32, 0.5, 0.9], [1.0, 0.0, 0.3], [0.25, 0.25, 0.25]] {
            let q = to_rgb(to_ycbcr(&p));
            for k in 0..3 {
                assert!((p[k] - q[k]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn zero_strength_is_identity() {
        let img = Raster::from_fn(6, 4, |x, y| [x as f32 / 6.0, y as f32 / 4.0, 0.5]);
        let mask = Raster::from_fn(6, 4, |x, _| x < 3);
        assert_eq!(harmonize(&img, &mask, 0.0).unwrap(), img);
    }

    #[test]
    fn degenerate_masks() {
        let img = Raster::filled(4, 4, [0.5f32; 3]);
        assert!(matches!(
            harmonize(&img, &Raster::filled(4, 4, false), 0.5),
            Err(CompositorError::EmptyForeground)
        ));
        assert!(matches!(
            harmonize(&img, &Raster::filled(4, 4, true), 0.5),
            Err(CompositorError::NoBackground)
        ));
    }
}
