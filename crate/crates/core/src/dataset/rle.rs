//! COCO run-length encoding of binary masks.
//!
//! Runs are counted in column-major order and always start with a run of
//! zeros (possibly of length 0). The compressed string form is the one used by
//! `pycocotools`: each count is delta-coded against the count two places back
//! (from the third onwards) and written as little-endian 5-bit groups offset by
//! ASCII 48, with bit 5 as the continuation flag.

use serde::{Deserialize, Serialize};

use super::DatasetError;
use crate::raster::{Mask, Raster};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RleMask {
    pub height: usize,
    pub width: usize,
    pub counts: Vec<u32>,
}

pub fn rle_encode(mask: &Mask) -> RleMask {
    let (w, h) = mask.dims();
    let mut counts = Vec::new();
    let mut current = false;
    let mut run = 0u32;
    for x in 0..w {
        for y in 0..h {
            let b = *mask.get(x, y);
            if b != current {
                counts.push(run);
                run = 0;
                current = b;
            }
            run += 1;
        }
    }
    counts.push(run);
    RleMask {
        height: h,
        width: w,
        counts,
    }
}

pub fn rle_decode(rle: &RleMask) -> Result<Mask, DatasetError> {
    let (w, h) = (rle.width, rle.height);
    let total = w * h;
    let sum: u64 = rle.counts.iter().map(|&c| c as u64).sum();
    if sum != total as u64 {
        return Err(DatasetError::RleLength {
            sum,
            expected: total as u64,
        });
    }
    let mut mask = Raster::filled(w, h, false);
    let mut pos = 0usize;
    for (i, &c) in rle.counts.iter().enumerate() {
        if i % 2 == 1 {
            for k in pos..pos + c as usize {
                mask.set(k / h, k % h, true);
            }
        }
        pos += c as usize;
    }
    Ok(mask)
}

impl RleMask {
    pub fn empty(width: usize, height: usize) -> RleMask {
        RleMask {
            height,
            width,
            counts: vec![(width * height) as u32],
        }
    }

    /// Number of set pixels.
    pub fn area(&self) -> u64 {
        self.counts.iter().skip(1).step_by(2).map(|&c| c as u64).sum()
    }

    pub fn to_coco_string(&self) -> String {
        let mut out = String::new();
        for i in 0..self.counts.len() {
            let mut x = self.counts[i] as i64;
            if i > 2 {
                x -= self.counts[i - 2] as i64;
            }
            loop {
                let mut c = (x & 0x1f) as u8;
                x >>= 5;
                let more = if c & 0x10 != 0 { x != -1 } else { x != 0 };
                if more {
                    c |= 0x20;
                }
                out.push((c + 48) as char);
                if !more {
                    break;
                }
            }
        }
        out
    }

    pub fn from_coco_string(width: usize, height: usize, s: &str) -> Result<RleMask, DatasetError> {
        let bytes = s.as_bytes();
        let mut counts: Vec<u32> = Vec::new();
        let mut p = 0;
        while p < bytes.len() {
            let mut x: i64 = 0;
            let mut k = 0;
            loop {
                let Some(&b) = bytes.get(p) else {
                    return Err(DatasetError::RleString("truncated count".into()));
                };
                if !(48..48 + 64).contains(&b) || k >= 13 {
                    return Err(DatasetError::RleString(format!("invalid byte {b} at {p}")));
                }
                let c = (b - 48) as i64;
                x |= (c & 0x1f) << (5 * k);
                p += 1;
                k += 1;
                if c & 0x20 == 0 {
                    if c & 0x10 != 0 {
                        x |= -1i64 << (5 * k);
                    }
                    break;
                }
            }
            if counts.len() > 2 {
                x += counts[counts.len() - 2] as i64;
            }
            let c = u32::try_from(x).map_err(|_| DatasetError::RleString(format!("count {x} out of range")))?;
            counts.push(c);
        }
        let rle = RleMask { height, width, counts };
        let sum: u64 = rle.counts.iter().map(|&c| c as u64).sum();
        if sum != (width * height) as u64 {
            return Err(DatasetError::RleLength {
                sum,
                expected: (width * height) as u64,
            });
        }
        Ok(rle)
    }
}
