use crate::raster::{Mask, Raster};

const FAR: f64 = 1e20;

/// Lower envelope of parabolas (Felzenszwalb–Huttenlocher).
fn edt_1d(f: &[f64], v: &mut [usize], z: &mut [f64], out: &mut [f64]) {
    let n = f.len();
    let mut k = 0;
    v[0] = 0;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in 1..n {
        let mut s;
        loop {
            let p = v[k];
            s = ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2.0 * (q - p) as f64);
            if s <= z[k] {
                k -= 1;
            } else {
                break;
            }
        }
        k += 1;
        v[k] = q;
        z[k] = s;
        z[k + 1] = f64::INFINITY;
    }
    k = 0;
    for (q, o) in out.iter_mut().enumerate() {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let p = v[k];
        *o = (q as f64 - p as f64).powi(2) + f[p];
    }
}

/// Squared Euclidean distance from every pixel centre to the nearest pixel
/// whose mask value equals `target` (`FAR` if there is none).
pub(crate) fn squared_distance_to(mask: &Mask, target: bool) -> Raster<f64> {
    let (w, h) = mask.dims();
    let mut grid = mask.map(|&b| if b == target { 0.0 } else { FAR });
    let n = w.max(h);
    let (mut f, mut out) = (vec![0.0; n], vec![0.0; n]);
    let (mut v, mut z) = (vec![0usize; n], vec![0.0; n + 1]);
    for x in 0..w {
        for y in 0..h {
            f[y] = *grid.get(x, y);
        }
        edt_1d(&f[..h], &mut v, &mut z, &mut out[..h]);
        for y in 0..h {
            grid.set(x, y, out[y].min(FAR));
        }
    }
    for y in 0..h {
        for x in 0..w {
            f[x] = *grid.get(x, y);
        }
        edt_1d(&f[..w], &mut v, &mut z, &mut out[..w]);
        for x in 0..w {
            grid.set(x, y, out[x].min(FAR));
        }
    }
    grid
}

fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Pixel-integrated Gaussian weights on `[-r, r]`, `r = ceil(4σ)`, normalized.
pub(crate) fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let r = (4.0 * sigma).ceil().max(1.0) as i64;
    let mut w: Vec<f64> = (-r..=r)
        .map(|k| normal_cdf((k as f64 + 0.5) / sigma) - normal_cdf((k as f64 - 0.5) / sigma))
        .collect();
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= s);
    w
}

fn blur(img: &Raster<f64>, kernel: &[f64]) -> Raster<f64> {
    let (w, h) = img.dims();
    let r = (kernel.len() / 2) as isize;
    let clamp = |i: isize, n: usize| i.clamp(0, n as isize - 1) as usize;
    let horizontal = Raster::from_fn(w, h, |x, y| {
        kernel
            .iter()
            .enumerate()
            .map(|(k, wk)| wk * img.get(clamp(x as isize + k as isize - r, w), y))
            .sum::<f64>()
    });
    Raster::from_fn(w, h, |x, y| {
        kernel
            .iter()
            .enumerate()
            .map(|(k, wk)| wk * horizontal.get(x, clamp(y as isize + k as isize - r, h)))
            .sum::<f64>()
    })
}

/// Soft alpha from a binary mask: a Gaussian blur (truncated at 4σ) applied
/// only to pixels within `band_px` of the mask boundary. Pixels deeper inside
/// stay exactly 1 and pixels further outside stay exactly 0.
///
/// The kernel integrates the Gaussian over each pixel, so a straight edge
/// reproduces the continuous Gaussian-blurred step at pixel centres.
///
/// # Panics
/// If `band_px < 1` or `sigma_px <= 0`.
pub fn feather_alpha(mask: &Mask, band_px: f64, sigma_px: f64) -> Raster<f32> {
    assert!(band_px >= 1.0, "feather band must be at least one pixel");
    assert!(sigma_px > 0.0, "feather sigma must be positive");
    let (w, h) = mask.dims();
    if mask.count() == 0 {
        return Raster::filled(w, h, 0.0);
    }
    let to_outside = squared_distance_to(mask, false);
    let to_inside = squared_distance_to(mask, true);
    let blurred = blur(&mask.map(|&b| if b { 1.0 } else { 0.0 }), &gaussian_kernel(sigma_px));
    let band_sq = band_px * band_px;
    Raster::from_fn(w, h, |x, y| {
        let inside = *mask.get(x, y);
        let d = if inside { to_outside.get(x, y) } else { to_inside.get(x, y) };
        if *d > band_sq {
            if inside {
                1.0
            } else {
                0.0
            }
        } else {
            blurred.get(x, y).clamp(0.0, 1.0) as f32
        }
    })
}

/// Band width used when none is configured: 3% of the sprite's larger side, at
/// least 2 px. The blur sigma is half the band.
pub fn default_band(sprite_max_dim: usize) -> (f64, f64) {
    let band = (0.03 * sprite_max_dim as f64).max(2.0);
    (band, band / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_sq(mask: &Mask, target: bool) -> Raster<f64> {
        let (w, h) = mask.dims();
        Raster::from_fn(w, h, |x, y| {
            let mut best = FAR;
            for yy in 0..h {
                for xx in 0..w {
                    if *mask.get(xx, yy) == target {
                        let d = (x as f64 - xx as f64).powi(2) + (y as f64 - yy as f64).powi(2);
                        best = best.min(d);
                    }
                }
            }
            best
        })
    }

    #[test]
    fn distance_transform_matches_brute_force() {
        let mask = Raster::from_fn(13, 9, |x, y| (x * 7 + y * 3) % 5 == 0 || (x > 8 && y < 3));
        for target in [true, false] {
            assert_eq!(squared_distance_to(&mask, target), brute_sq(&mask, target));
        }
    }

    #[test]
    fn kernel_is_normalized_and_symmetric() {
        let k = gaussian_kernel(1.5);
        assert_eq!(k.len(), 13);
        assert!((k.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for i in 0..k.len() {
            assert!((k[i] - k[k.len() - 1 - i]).abs() < 1e-15);
        }
    }

    #[test]
    fn empty_and_full_masks() {
        let empty = Raster::filled(8, 8, false);
        assert!(feather_alpha(&empty, 3.0, 1.5).data().iter().all(|&a| a == 0.0));
        let full = Raster::filled(8, 8, true);
        assert!(feather_alpha(&full, 3.0, 1.5).data().iter().all(|&a| a == 1.0));
    }
}
