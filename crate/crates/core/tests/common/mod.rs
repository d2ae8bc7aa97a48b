//! Independent reference implementations used by the integration tests.
#![allow(dead_code)]

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use corrgen::body::PosedMesh;
use corrgen::camera::{look_at, CameraModel};
use corrgen::math::Vec3;
use rand::Rng;

// ---------------------------------------------------------------- meshes

pub fn icosahedron() -> (Vec<Vec3>, Vec<[u32; 3]>) {
    let p = (1.0 + 5f64.sqrt()) / 2.0;
    let v = [
        [-1.0, p, 0.0],
        [1.0, p, 0.0],
        [-1.0, -p, 0.0],
        [1.0, -p, 0.0],
        [0.0, -1.0, p],
        [0.0, 1.0, p],
        [0.0, -1.0, -p],
        [0.0, 1.0, -p],
        [p, 0.0, -1.0],
        [p, 0.0, 1.0],
        [-p, 0.0, -1.0],
        [-p, 0.0, 1.0],
    ];
    let f = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    (v.iter().map(|a| Vec3::new(a[0], a[1], a[2]).normalize()).collect(), f)
}

/// Unit sphere from `levels` midpoint subdivisions of the icosahedron
/// (20·4^levels faces; 3 levels give 1280).
pub fn icosphere(levels: usize) -> (Vec<Vec3>, Vec<[u32; 3]>) {
    let (mut v, mut f) = icosahedron();
    for _ in 0..levels {
        let mut mid: HashMap<(u32, u32), u32> = HashMap::new();
        let mut nf = Vec::with_capacity(f.len() * 4);
        let mut midpoint = |a: u32, b: u32, v: &mut Vec<Vec3>| -> u32 {
            *mid.entry((a.min(b), a.max(b))).or_insert_with(|| {
                v.push(((v[a as usize] + v[b as usize]) / 2.0).normalize());
                (v.len() - 1) as u32
            })
        };
        for t in &f {
            let ab = midpoint(t[0], t[1], &mut v);
            let bc = midpoint(t[1], t[2], &mut v);
            let ca = midpoint(t[2], t[0], &mut v);
            nf.extend([[t[0], ab, ca], [t[1], bc, ab], [t[2], ca, bc], [ab, bc, ca]]);
        }
        f = nf;
    }
    (v, f)
}

/// 10×10 jittered grid with a random diagonal per cell and a random height field.
pub fn random_triangulation(rng: &mut impl Rng) -> (Vec<Vec3>, Vec<[u32; 3]>) {
    let n = 10;
    let mut v = Vec::new();
    for j in 0..n {
        for i in 0..n {
            v.push(Vec3::new(
                i as f64 + rng.random_range(-0.3..0.3),
                j as f64 + rng.random_range(-0.3..0.3),
                rng.random_range(-0.5..0.5),
            ));
        }
    }
    let id = |i: usize, j: usize| (j * n + i) as u32;
    let mut f = Vec::new();
    for j in 0..n - 1 {
        for i in 0..n - 1 {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            if rng.random_bool(0.5) {
                f.extend([[a, b, c], [a, c, d]]);
            } else {
                f.extend([[a, b, d], [b, c, d]]);
            }
        }
    }
    (v, f)
}

/// Random mesh for ray casting: a triangle soup or a jittered icosphere.
pub fn random_mesh(rng: &mut impl Rng, k: usize) -> PosedMesh {
    if k % 2 == 0 {
        let n = rng.random_range(20..200);
        let mut v = Vec::new();
        let mut f = Vec::new();
        for t in 0..n {
            let c = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            for _ in 0..3 {
                v.push(c + Vec3::new(rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3)));
            }
            f.push([3 * t as u32, 3 * t as u32 + 1, 3 * t as u32 + 2]);
        }
        PosedMesh::from_vecs(v, f)
    } else {
        let (v, f) = icosphere(rng.random_range(1..4));
        let v = v
            .into_iter()
            .map(|p| p * rng.random_range(0.8..1.2) + Vec3::new(0.1, -0.2, 0.05))
            .collect();
        PosedMesh::from_vecs(v, f)
    }
}

// ---------------------------------------------------------------- ray casting

/// Plain Möller–Trumbore over every triangle; nearest `t`, ties (within
/// 1e-12) to the lower face index.
pub fn brute_force_hit(mesh: &PosedMesh, origin: &Vec3, dir: &Vec3) -> Option<(u32, f64)> {
    let mut best: Option<(u32, f64)> = None;
    for (fi, f) in mesh.faces.iter().enumerate() {
        let [a, b, c] = f.map(|i| mesh.vertices[i as usize]);
        let e1 = b - a;
        let e2 = c - a;
        let p = dir.cross(&e2);
        let det = e1.dot(&p);
        if det.abs() < 1e-14 {
            continue;
        }
        let s = origin - a;
        let u = s.dot(&p) / det;
        let q = s.cross(&e1);
        let v = dir.dot(&q) / det;
        if u < -1e-10 || u > 1.0 + 1e-10 || v < -1e-10 || u + v > 1.0 + 1e-10 {
            continue;
        }
        let t = e2.dot(&q) / det;
        if t <= 1e-12 {
            continue;
        }
        let better = match best {
            None => true,
            Some((bf, bt)) => t < bt - 1e-12 || ((t - bt).abs() <= 1e-12 && (fi as u32) < bf),
        };
        if better {
            best = Some((fi as u32, t));
        }
    }
    best
}

// ---------------------------------------------------------------- geodesics

/// All-pairs shortest paths with edge lengths quantized to 2⁻³² m, the
/// resolution geodesic distances are defined at.
pub fn floyd_warshall(v: &[Vec3], f: &[[u32; 3]]) -> Vec<Vec<f64>> {
    let n = v.len();
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    let q = 4294967296.0;
    for t in f {
        for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
            let (a, b) = (a as usize, b as usize);
            let l = ((v[a] - v[b]).norm() * q).round() / q;
            d[a][b] = d[a][b].min(l);
            d[b][a] = d[b][a].min(l);
        }
    }
    for k in 0..n {
        for i in 0..n {
            let dik = d[i][k];
            if dik.is_infinite() {
                continue;
            }
            for j in 0..n {
                let c = dik + d[k][j];
                if c < d[i][j] {
                    d[i][j] = c;
                }
            }
        }
    }
    d
}

// ---------------------------------------------------------------- visibility

/// Camera looking at `target` from a random direction at a random distance.
pub fn random_camera(rng: &mut impl Rng, target: Vec3, dist: [f64; 2], fov_scale: f64) -> CameraModel {
    let dir = loop {
        let d = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let n = d.norm();
        if n > 0.1 && n <= 1.0 {
            break d / n;
        }
    };
    let eye = target + dir * rng.random_range(dist[0]..dist[1]);
    let up = if dir.y.abs() > 0.95 { Vec3::new(1.0, 0.0, 0.0) } else { Vec3::new(0.0, 1.0, 0.0) };
    let (w, h) = (160usize, 120usize);
    let fx = fov_scale * w as f64;
    CameraModel::pinhole(fx, fx, w as f64 / 2.0, h as f64 / 2.0, w, h).with_pose(look_at(&eye, &target, &up))
}

pub struct ZBufferVisibility {
    pub visible: Vec<bool>,
    /// Vertex lies within `band` hi-res pixels of the silhouette.
    pub in_band: Vec<bool>,
}

/// Front-face buffer of the mesh rasterized at `factor`× resolution with
/// pixel-center sampling (`u32::MAX` where empty). Distortion-free cameras only.
pub struct FrontFaces {
    pub width: usize,
    pub height: usize,
    pub face: Vec<u32>,
}

pub fn rasterize_front(mesh: &PosedMesh, cam: &CameraModel, factor: usize) -> FrontFaces {
    assert!(cam.k1 == 0.0 && cam.k2 == 0.0 && cam.p1 == 0.0 && cam.p2 == 0.0);
    let (w, h) = (cam.width * factor, cam.height * factor);
    let s = factor as f64;
    let pc: Vec<Vec3> = mesh.vertices.iter().map(|p| cam.to_camera(p)).collect();
    let screen: Vec<[f64; 2]> = pc
        .iter()
        .map(|p| [s * (cam.fx * p.x / p.z + cam.cx), s * (cam.fy * p.y / p.z + cam.cy)])
        .collect();
    let mut zbuf = vec![f64::INFINITY; w * h];
    let mut front = vec![u32::MAX; w * h];
    for (fi, f) in mesh.faces.iter().enumerate() {
        let [a, b, c] = f.map(|i| i as usize);
        if pc[a].z <= cam.near || pc[b].z <= cam.near || pc[c].z <= cam.near {
            continue;
        }
        let (pa, pb, pcc) = (screen[a], screen[b], screen[c]);
        let area = (pb[0] - pa[0]) * (pcc[1] - pa[1]) - (pb[1] - pa[1]) * (pcc[0] - pa[0]);
        if area.abs() < 1e-18 {
            continue;
        }
        let x0 = pa[0].min(pb[0]).min(pcc[0]).floor().max(0.0) as usize;
        let x1 = (pa[0].max(pb[0]).max(pcc[0]).ceil() as i64).min(w as i64 - 1);
        let y0 = pa[1].min(pb[1]).min(pcc[1]).floor().max(0.0) as usize;
        let y1 = (pa[1].max(pb[1]).max(pcc[1]).ceil() as i64).min(h as i64 - 1);
        if x1 < 0 || y1 < 0 {
            continue;
        }
        for y in y0..=y1 as usize {
            for x in x0..=x1 as usize {
                let p = [x as f64 + 0.5, y as f64 + 0.5];
                let edge = |u: [f64; 2], v: [f64; 2]| (v[0] - u[0]) * (p[1] - u[1]) - (v[1] - u[1]) * (p[0] - u[0]);
                let l0 = edge(pb, pcc) / area;
                let l1 = edge(pcc, pa) / area;
                let l2 = edge(pa, pb) / area;
                if l0 < 0.0 || l1 < 0.0 || l2 < 0.0 {
                    continue;
                }
                let z = 1.0 / (l0 / pc[a].z + l1 / pc[b].z + l2 / pc[c].z);
                let k = y * w + x;
                if z < zbuf[k] {
                    zbuf[k] = z;
                    front[k] = fi as u32;
                }
            }
        }
    }
    FrontFaces { width: w, height: h, face: front }
}

/// Rasterizes the mesh at `factor`× resolution with a per-pixel front face,
/// then calls a vertex visible when the front face's plane, evaluated at the
/// vertex's exact image position, is not nearer than the vertex by more than
/// `depth_tol`. Distortion-free cameras only.
pub fn zbuffer_visibility(mesh: &PosedMesh, cam: &CameraModel, factor: usize, band: i64, depth_tol: f64) -> ZBufferVisibility {
    let FrontFaces { width: w, height: h, face: front } = rasterize_front(mesh, cam, factor);
    let s = factor as f64;
    let pc: Vec<Vec3> = mesh.vertices.iter().map(|p| cam.to_camera(p)).collect();
    let mut visible = vec![false; mesh.vertices.len()];
    let mut in_band = vec![false; mesh.vertices.len()];
    for (vi, p) in pc.iter().enumerate() {
        if p.z <= cam.near {
            continue;
        }
        let (u, v) = (cam.fx * p.x / p.z + cam.cx, cam.fy * p.y / p.z + cam.cy);
        if !(u >= 0.0 && v >= 0.0 && u < cam.width as f64 && v < cam.height as f64) {
            continue;
        }
        let (hx, hy) = ((u * s).floor() as i64, (v * s).floor() as i64);
        let mut near_edge = false;
        for dy in -band..=band {
            for dx in -band..=band {
                let (x, y) = (hx + dx, hy + dy);
                if x < 0 || y < 0 || x >= w as i64 || y >= h as i64 || front[y as usize * w + x as usize] == u32::MAX {
                    near_edge = true;
                }
            }
        }
        in_band[vi] = near_edge;
        let fi = front[hy as usize * w + hx as usize];
        if fi == u32::MAX {
            continue;
        }
        let [a, b, c] = mesh.faces[fi as usize].map(|i| pc[i as usize]);
        let n = (b - a).cross(&(c - a));
        let d = Vec3::new((u - cam.cx) / cam.fx, (v - cam.cy) / cam.fy, 1.0);
        let denom = n.dot(&d);
        let depth = if denom.abs() < 1e-300 { f64::INFINITY } else { n.dot(&a) / denom };
        visible[vi] = p.z <= depth + depth_tol;
    }
    ZBufferVisibility { visible, in_band }
}

// ---------------------------------------------------------------- AP

/// Exhaustive matching: among all injective assignments with quality `>= t`,
/// the one whose per-detection outcome (in score order) is lexicographically
/// best, preferring a match, then higher quality, then lower ground-truth
/// index.
pub fn exhaustive_match(q: &[Vec<Option<f64>>], num_gt: usize, t: f64) -> Vec<bool> {
    fn rec(
        d: usize,
        q: &[Vec<Option<f64>>],
        t: f64,
        used: &mut Vec<bool>,
        cur: &mut Vec<Option<usize>>,
        best: &mut Option<Vec<Option<usize>>>,
    ) {
        if d == q.len() {
            let key = |a: &[Option<usize>]| -> Vec<(u8, f64, i64)> {
                a.iter()
                    .enumerate()
                    .map(|(i, m)| match m {
                        Some(g) => (1, q[i][*g].unwrap(), -(*g as i64)),
                        None => (0, 0.0, 0),
                    })
                    .collect()
            };
            let better = match best {
                None => true,
                Some(b) => key(cur).partial_cmp(&key(b)) == Some(std::cmp::Ordering::Greater),
            };
            if better {
                *best = Some(cur.clone());
            }
            return;
        }
        cur.push(None);
        rec(d + 1, q, t, used, cur, best);
        cur.pop();
        for g in 0..used.len() {
            if used[g] || q[d][g].is_none_or(|x| x < t) {
                continue;
            }
            used[g] = true;
            cur.push(Some(g));
            rec(d + 1, q, t, used, cur, best);
            cur.pop();
            used[g] = false;
        }
    }
    let mut best = None;
    rec(0, q, t, &mut vec![false; num_gt], &mut Vec::new(), &mut best);
    best.unwrap().iter().map(|m| m.is_some()).collect()
}

/// Interpolated AP from its definition: at each recall level r in
/// {0, .01, …, 1}, the best precision over ranks whose recall is at least r.
/// Integer arithmetic throughout the comparisons.
pub fn definitional_ap(scored: &[(f64, bool)], num_gt: usize) -> (f64, f64) {
    if num_gt == 0 {
        return (0.0, 0.0);
    }
    let mut order: Vec<usize> = (0..scored.len()).collect();
    order.sort_by(|&a, &b| scored[b].0.partial_cmp(&scored[a].0).unwrap());
    let mut ranks = Vec::new();
    let mut tp = 0usize;
    for (k, &i) in order.iter().enumerate() {
        if scored[i].1 {
            tp += 1;
        }
        ranks.push((tp, k + 1));
    }
    let mut sum = 0.0;
    for r in 0..=100usize {
        let mut best = 0.0f64;
        for &(tp, n) in &ranks {
            if tp * 100 >= r * num_gt {
                best = best.max(tp as f64 / n as f64);
            }
        }
        sum += best;
    }
    let max_recall = ranks.last().map(|&(tp, _)| tp as f64 / num_gt as f64).unwrap_or(0.0);
    (sum / 101.0, max_recall)
}

// ---------------------------------------------------------------- toy data

/// Writes the toy resources (50 frames, seed 7) once per directory.
pub fn toy_config(dir: &Path) -> PathBuf {
    corrgen::toy::write_toy_resources(dir, &corrgen::toy::ToyResourceOptions::default()).expect("toy resources")
}
