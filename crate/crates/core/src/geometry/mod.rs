//! Ray casting, per-vertex visibility and mesh geodesics.

mod bvh;
mod geodesic;
mod visibility;

pub use bvh::{
    intersect_triangle, ray_cast, ray_cast_brute_force, Aabb, Bvh, BvhNode, BvhStats, NodeKind, SurfaceHit, TIE_EPS,
};
pub use geodesic::{geodesic_distances, EdgeGraph};
pub use visibility::{pixel_to_surface, vertex_visibility, vertex_visibility_with, VisibilityMask, VisibilityOptions};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("cannot build a BVH over an empty mesh")]
    EmptyMesh,
    #[error("source vertex {index} out of range for {vertices} vertices")]
    InvalidSource { index: usize, vertices: usize },
}
