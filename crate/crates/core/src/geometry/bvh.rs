use serde::Serialize;

use super::GeometryError;
use crate::body::PosedMesh;
use crate::math::{Ray, Vec3};

const AABB_PAD: f64 = 1e-9;
const MAX_LEAF: usize = 4;
const DET_EPS: f64 = 1e-14;
const BARY_EPS: f64 = 1e-10;
const T_MIN: f64 = 1e-12;
/// Hits closer than this in `t` count as ties and go to the lower face index.
pub const TIE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    fn empty() -> Self {
        Aabb {
            min: Vec3::repeat(f64::INFINITY),
            max: Vec3::repeat(f64::NEG_INFINITY),
        }
    }

    fn grow(&mut self, p: &Vec3) {
        self.min = self.min.inf(p);
        self.max = self.max.sup(p);
    }

    fn padded(mut self) -> Self {
        self.min.add_scalar_mut(-AABB_PAD);
        self.max.add_scalar_mut(AABB_PAD);
        self
    }

    pub fn contains(&self, other: &Aabb, slack: f64) -> bool {
        (0..3).all(|i| other.min[i] >= self.min[i] - slack && other.max[i] <= self.max[i] + slack)
    }

    /// Entry distance of the ray into the box if it enters before `t_max`.
    fn hit(&self, origin: &Vec3, inv_dir: &Vec3, t_max: f64) -> Option<f64> {
        let mut t0 = 0.0f64;
        let mut t1 = t_max;
        for i in 0..3 {
            let a = (self.min[i] - origin[i]) * inv_dir[i];
            let b = (self.max[i] - origin[i]) * inv_dir[i];
            // NaN (0 * inf) arises only when the origin lies on a slab plane;
            // f64::min/max drop it, which keeps that slab unbounded.
            t0 = t0.max(a.min(b));
            t1 = t1.min(a.max(b));
        }
        (t0 <= t1).then_some(t0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NodeKind {
    Leaf { start: u32, count: u32 },
    Interior { left: u32, right: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BvhNode {
    pub bounds: Aabb,
    pub kind: NodeKind,
}

/// Bounding volume hierarchy over the triangles of one posed mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct Bvh {
    nodes: Vec<BvhNode>,
    order: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BvhStats {
    pub triangles: usize,
    pub nodes: usize,
    pub leaves: usize,
    pub depth: usize,
    pub max_leaf_size: usize,
}

/// A ray/triangle intersection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceHit {
    pub face: u32,
    pub t: f64,
    pub bary: [f64; 3],
}

impl SurfaceHit {
    /// Barycentric blend of the face corners.
    pub fn point(&self, mesh: &PosedMesh) -> Vec3 {
        let [a, b, c] = mesh.triangle(self.face as usize);
        a * self.bary[0] + b * self.bary[1] + c * self.bary[2]
    }
}

/// Two-sided Möller–Trumbore test. Returns `(t, u, v)`.
pub fn intersect_triangle(ray: &Ray, tri: &[Vec3; 3]) -> Option<(f64, f64, f64)> {
    let e1 = tri[1] - tri[0];
    let e2 = tri[2] - tri[0];
    let p = ray.dir.cross(&e2);
    let det = e1.dot(&p);
    if det.abs() < DET_EPS {
        return None;
    }
    let inv = 1.0 / det;
    let s = ray.origin - tri[0];
    let u = s.dot(&p) * inv;
    if !(-BARY_EPS..=1.0 + BARY_EPS).contains(&u) {
        return None;
    }
    let q = s.cross(&e1);
    let v = ray.dir.dot(&q) * inv;
    if v < -BARY_EPS || u + v > 1.0 + BARY_EPS {
        return None;
    }
    let t = e2.dot(&q) * inv;
    (t > T_MIN).then_some((t, u, v))
}

pub(crate) fn hit_from(face: usize, t: f64, u: f64, v: f64) -> SurfaceHit {
    let (u, v) = (u.clamp(0.0, 1.0), v.clamp(0.0, 1.0));
    let s = u + v;
    let (u, v) = if s > 1.0 { (u / s, v / s) } else { (u, v) };
    SurfaceHit {
        face: face as u32,
        t,
        bary: [1.0 - u - v, u, v],
    }
}

/// True when `candidate` should replace `best` under the nearest-hit rule.
pub(crate) fn closer(t: f64, face: u32, best: Option<&SurfaceHit>) -> bool {
    match best {
        None => true,
        Some(b) => t < b.t - TIE_EPS || ((t - b.t).abs() <= TIE_EPS && face < b.face),
    }
}

struct Builder<'a> {
    centroids: Vec<Vec3>,
    tri_bounds: Vec<Aabb>,
    nodes: Vec<BvhNode>,
    order: &'a mut [u32],
}

impl Builder<'_> {
    fn build(&mut self, start: usize, end: usize) -> u32 {
        let mut bounds = Aabb::empty();
        let mut cbounds = Aabb::empty();
        for &f in &self.order[start..end] {
            let b = &self.tri_bounds[f as usize];
            bounds.grow(&b.min);
            bounds.grow(&b.max);
            cbounds.grow(&self.centroids[f as usize]);
        }
        let index = self.nodes.len() as u32;
        self.nodes.push(BvhNode {
            bounds: bounds.padded(),
            kind: NodeKind::Leaf {
                start: start as u32,
                count: (end - start) as u32,
            },
        });
        if end - start <= MAX_LEAF {
            return index;
        }
        let extent = cbounds.max - cbounds.min;
        let axis = extent.imax();
        let c = &self.centroids;
        self.order[start..end].sort_by(|&a, &b| {
            c[a as usize][axis]
                .total_cmp(&c[b as usize][axis])
                .then(a.cmp(&b))
        });
        let mid = (start + end) / 2;
        let left = self.build(start, mid);
        let right = self.build(mid, end);
        self.nodes[index as usize].kind = NodeKind::Interior { left, right };
        index
    }
}

impl Bvh {
    /// Median-split build over triangle centroids along the longest centroid axis.
    pub fn build(mesh: &PosedMesh) -> Result<Bvh, GeometryError> {
        let n = mesh.num_faces();
        if n == 0 {
            return Err(GeometryError::EmptyMesh);
        }
        let mut order: Vec<u32> = (0..n as u32).collect();
        let mut tri_bounds = Vec::with_capacity(n);
        let mut centroids = Vec::with_capacity(n);
        for f in 0..n {
            let tri = mesh.triangle(f);
            let mut b = Aabb::empty();
            tri.iter().for_each(|p| b.grow(p));
            tri_bounds.push(b);
            centroids.push((tri[0] + tri[1] + tri[2]) / 3.0);
        }
        let mut builder = Builder {
            centroids,
            tri_bounds,
            nodes: Vec::with_capacity(2 * n / MAX_LEAF + 1),
            order: &mut order,
        };
        builder.build(0, n);
        let nodes = builder.nodes;
        Ok(Bvh { nodes, order })
    }

    pub fn nodes(&self) -> &[BvhNode] {
        &self.nodes
    }

    /// Triangle indices in leaf order.
    pub fn triangle_order(&self) -> &[u32] {
        &self.order
    }

    pub fn stats(&self) -> BvhStats {
        fn walk(nodes: &[BvhNode], i: usize, depth: usize, s: &mut BvhStats) {
            s.depth = s.depth.max(depth);
            match nodes[i].kind {
                NodeKind::Leaf { count, .. } => {
                    s.leaves += 1;
                    s.max_leaf_size = s.max_leaf_size.max(count as usize);
                }
                NodeKind::Interior { left, right } => {
                    walk(nodes, left as usize, depth + 1, s);
                    walk(nodes, right as usize, depth + 1, s);
                }
            }
        }
        let mut s = BvhStats {
            triangles: self.order.len(),
            nodes: self.nodes.len(),
            leaves: 0,
            depth: 0,
            max_leaf_size: 0,
        };
        walk(&self.nodes, 0, 1, &mut s);
        s
    }

    fn traverse(&self, mesh: &PosedMesh, ray: &Ray, t_max: f64, any: bool) -> Option<SurfaceHit> {
        let inv = Vec3::new(1.0 / ray.dir.x, 1.0 / ray.dir.y, 1.0 / ray.dir.z);
        let mut best: Option<SurfaceHit> = None;
        let mut stack: Vec<u32> = Vec::with_capacity(64);
        stack.push(0);
        while let Some(i) = stack.pop() {
            let node = &self.nodes[i as usize];
            let limit = best.map_or(t_max, |b| b.t + TIE_EPS);
            if node.bounds.hit(&ray.origin, &inv, limit).is_none() {
                continue;
            }
            match node.kind {
                NodeKind::Leaf { start, count } => {
                    for &f in &self.order[start as usize..(start + count) as usize] {
                        if let Some((t, u, v)) = intersect_triangle(ray, &mesh.triangle(f as usize)) {
                            if t < t_max && closer(t, f, best.as_ref()) {
                                best = Some(hit_from(f as usize, t, u, v));
                                if any {
                                    return best;
                                }
                            }
                        }
                    }
                }
                NodeKind::Interior { left, right } => {
                    // Visit the nearer child first.
                    let tl = self.nodes[left as usize].bounds.hit(&ray.origin, &inv, limit);
                    let tr = self.nodes[right as usize].bounds.hit(&ray.origin, &inv, limit);
                    match (tl, tr) {
                        (Some(a), Some(b)) if a <= b => {
                            stack.push(right);
                            stack.push(left);
                        }
                        (Some(_), Some(_)) => {
                            stack.push(left);
                            stack.push(right);
                        }
                        (Some(_), None) => stack.push(left),
                        (None, Some(_)) => stack.push(right),
                        (None, None) => {}
                    }
                }
            }
        }
        best
    }

    /// Nearest intersection along the ray.
    pub fn ray_cast(&self, mesh: &PosedMesh, ray: &Ray) -> Option<SurfaceHit> {
        self.traverse(mesh, ray, f64::INFINITY, false)
    }

    /// Whether any surface lies on the ray strictly before `t_max`.
    pub fn occluded(&self, mesh: &PosedMesh, ray: &Ray, t_max: f64) -> bool {
        self.traverse(mesh, ray, t_max, true).is_some()
    }
}

/// Nearest hit over every triangle, without acceleration.
pub fn ray_cast_brute_force(mesh: &PosedMesh, ray: &Ray) -> Option<SurfaceHit> {
    let mut best: Option<SurfaceHit> = None;
    for f in 0..mesh.num_faces() {
        if let Some((t, u, v)) = intersect_triangle(ray, &mesh.triangle(f)) {
            if closer(t, f as u32, best.as_ref()) {
                best = Some(hit_from(f, t, u, v));
            }
        }
    }
    best
}

/// Free-function form of [`Bvh::ray_cast`].
pub fn ray_cast(bvh: &Bvh, mesh: &PosedMesh, ray: &Ray) -> Option<SurfaceHit> {
    bvh.ray_cast(mesh, ray)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tri_mesh() -> PosedMesh {
        PosedMesh::from_vecs(
            vec![Vec3::new(0.0, 0.0, 1.0), Vec3::new(1.0, 0.0, 1.0), Vec3::new(0.0, 1.0, 1.0)],
            vec![[0, 1, 2]],
        )
    }

    #[test]
    fn single_triangle_single_leaf() {
        let bvh = Bvh::build(&tri_mesh()).unwrap();
        assert_eq!(bvh.nodes().len(), 1);
        assert!(matches!(bvh.nodes()[0].kind, NodeKind::Leaf { start: 0, count: 1 }));
    }

    #[test]
    fn centroid_hit_is_symmetric() {
        let mesh = tri_mesh();
        let bvh = Bvh::build(&mesh).unwrap();
        let c = Vec3::new(1.0 / 3.0, 1.0 / 3.0, 1.0);
        let hit = bvh.ray_cast(&mesh, &Ray::new(Vec3::new(c.x, c.y, 0.0), Vec3::z())).unwrap();
        assert_eq!(hit.face, 0);
        assert!((hit.t - 1.0).abs() < 1e-12);
        for b in hit.bary {
            assert!((b - 1.0 / 3.0).abs() < 1e-9);
        }
    }

    #[test]
    fn miss_returns_none() {
        let mesh = tri_mesh();
        let bvh = Bvh::build(&mesh).unwrap();
        assert!(bvh.ray_cast(&mesh, &Ray::new(Vec3::new(5.0, 5.0, 0.0), Vec3::z())).is_none());
        assert!(bvh.ray_cast(&mesh, &Ray::new(Vec3::new(0.2, 0.2, 0.0), -Vec3::z())).is_none());
    }

    #[test]
    fn empty_mesh_rejected() {
        let mesh = PosedMesh::from_vecs(vec![], vec![]);
        assert!(matches!(Bvh::build(&mesh), Err(GeometryError::EmptyMesh)));
    }

    #[test]
    fn coplanar_tie_goes_to_lower_face() {
        let v = vec![Vec3::new(-1.0, -1.0, 1.0), Vec3::new(1.0, -1.0, 1.0), Vec3::new(0.0, 1.0, 1.0)];
        let mesh = PosedMesh::from_vecs([v.clone(), v].concat(), vec![[3, 4, 5], [0, 1, 2]]);
        let bvh = Bvh::build(&mesh).unwrap();
        let hit = bvh.ray_cast(&mesh, &Ray::new(Vec3::zeros(), Vec3::z())).unwrap();
        assert_eq!(hit.face, 0);
    }
}
