use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Bvh, SurfaceHit};
use crate::body::PosedMesh;
use crate::camera::{CameraError, CameraModel};
use crate::math::Ray;

/// One bit per mesh vertex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VisibilityMask {
    bits: Vec<u64>,
    len: usize,
}

impl VisibilityMask {
    pub fn new(len: usize) -> Self {
        VisibilityMask {
            bits: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn from_bools(values: &[bool]) -> Self {
        let mut m = VisibilityMask::new(values.len());
        for (i, &v) in values.iter().enumerate() {
            m.set(i, v);
        }
        m
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "vertex {i} out of range");
        self.bits[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "vertex {i} out of range");
        if value {
            self.bits[i / 64] |= 1 << (i % 64);
        } else {
            self.bits[i / 64] &= !(1 << (i % 64));
        }
    }

    pub fn count(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(|i| self.get(i))
    }

    pub fn visible_indices(&self) -> Vec<usize> {
        (0..self.len).filter(|&i| self.get(i)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VisibilityOptions {
    /// Outward offset along the vertex normal before casting toward the camera.
    pub normal_offset: f64,
}

impl Default for VisibilityOptions {
    fn default() -> Self {
        VisibilityOptions { normal_offset: 1e-5 }
    }
}

/// Per-vertex visibility with the default self-occlusion offset.
pub fn vertex_visibility(mesh: &PosedMesh, bvh: &Bvh, camera: &CameraModel) -> VisibilityMask {
    vertex_visibility_with(mesh, bvh, camera, &VisibilityOptions::default())
}

/// A vertex is visible when it projects inside the image in front of the near
/// plane and the segment from the (normal-offset) vertex to the camera center
/// crosses no surface.
pub fn vertex_visibility_with(
    mesh: &PosedMesh,
    bvh: &Bvh,
    camera: &CameraModel,
    options: &VisibilityOptions,
) -> VisibilityMask {
    let center = camera.center();
    let visible: Vec<bool> = mesh
        .vertices
        .par_iter()
        .zip(mesh.normals.par_iter())
        .map(|(p, n)| {
            let Some((u, v)) = camera.project(p) else {
                return false;
            };
            if !camera.in_image(u, v) {
                return false;
            }
            let origin = p + n * options.normal_offset;
            let to_cam = center - origin;
            let dist = to_cam.norm();
            if dist == 0.0 {
                return true;
            }
            !bvh.occluded(mesh, &Ray::new(origin, to_cam / dist), dist)
        })
        .collect();
    VisibilityMask::from_bools(&visible)
}

/// Surface hit seen through pixel position `(u, v)`; `None` is background.
pub fn pixel_to_surface(
    camera: &CameraModel,
    bvh: &Bvh,
    mesh: &PosedMesh,
    u: f64,
    v: f64,
) -> Result<Option<SurfaceHit>, CameraError> {
    let ray = camera.pixel_ray(u, v)?;
    Ok(bvh.ray_cast(mesh, &ray))
}
