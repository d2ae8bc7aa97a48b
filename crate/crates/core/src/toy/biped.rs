//! A small articulated biped built from extruded boxes.
//!
//! The torso is a box; head, arms and legs are chains of square extrusions
//! whose cross-sections are then rounded into capsule-like tubes. Every coarse
//! quad becomes an `s × s` grid of quads (`s = max(1, n_segments / 2)`), giving
//! about 2.9k triangles at `n_segments = 8`. The person faces `+z`, its left is
//! `+x`, and `y` is up.

use std::collections::HashMap;

use crate::atlas::{chart_table, UvAtlas, DEFAULT_GRID_RESOLUTION};
use crate::body::{BodyModel, RawBodyModel};
use crate::math::{f32_exact, Vec3};

pub const TOY_NUM_SHAPE: usize = 8;

pub const TOY_JOINT_NAMES: [&str; 14] = [
    "pelvis",
    "neck",
    "left_shoulder",
    "left_elbow",
    "left_wrist",
    "right_shoulder",
    "right_elbow",
    "right_wrist",
    "left_hip",
    "left_knee",
    "left_ankle",
    "right_hip",
    "right_knee",
    "right_ankle",
];

pub const TOY_PARENTS: [i64; 14] = [-1, 0, 0, 2, 3, 0, 5, 6, 0, 8, 9, 0, 11, 12];

const XS: [f64; 4] = [-0.18, -0.06, 0.06, 0.18];
const YS: [f64; 4] = [0.9, 1.1, 1.3, 1.5];
const ZS: [f64; 2] = [-0.1, 0.1];
const BLEND_FRACTION: f64 = 0.3;

#[derive(Clone, Copy)]
enum Split {
    /// Front/back by the normal's z component.
    Z,
    /// Left/right by the normal's x component.
    X,
}

struct SegmentDef {
    joint: usize,
    length: f64,
    half: f64,
    /// Charts for normals scoring positive and negative.
    charts: (u8, u8),
}

struct ChainDef {
    kind: ChainKind,
    split: Split,
    segments: Vec<SegmentDef>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum ChainKind {
    Head,
    Arm,
    Leg,
}

#[derive(Clone, Copy, PartialEq)]
enum QuadKind {
    Torso,
    Side { chain: usize, seg: usize },
    Cap { chain: usize },
}

struct Quad {
    v: [u32; 4],
    kind: QuadKind,
}

struct Chain {
    def: ChainDef,
    origin: Vec3,
    axis: Vec3,
    u: Vec3,
    v: Vec3,
}

#[derive(Clone, Copy, Default)]
struct VertexTag {
    on_torso: bool,
    chain: Option<usize>,
    sigma: f64,
    cap_interior: bool,
}

fn lerp(a: &Vec3, b: &Vec3, t: f64) -> Vec3 {
    a + (b - a) * t
}

fn quad_normal(p: &[Vec3], q: &[u32; 4]) -> Vec3 {
    let [a, b, c, _] = q.map(|i| p[i as usize]);
    (b - a).cross(&(c - a)).normalize()
}

fn chain_defs(k: f64) -> Vec<ChainDef> {
    let seg = |joint, length, half, charts| SegmentDef {
        joint,
        length,
        half,
        charts,
    };
    vec![
        ChainDef {
            kind: ChainKind::Head,
            split: Split::X,
            segments: vec![
                seg(1, 0.06, 0.045, (24, 23)),
                seg(1, 0.04, 0.09, (24, 23)),
                seg(1, 0.18, 0.09, (24, 23)),
            ],
        },
        ChainDef {
            kind: ChainKind::Arm,
            split: Split::Z,
            segments: vec![
                seg(2, 0.26, 0.07 * k, (15, 17)),
                seg(3, 0.24, 0.055 * k, (19, 21)),
                seg(4, 0.12, 0.05 * k, (4, 4)),
            ],
        },
        ChainDef {
            kind: ChainKind::Arm,
            split: Split::Z,
            segments: vec![
                seg(5, 0.26, 0.07 * k, (16, 18)),
                seg(6, 0.24, 0.055 * k, (20, 22)),
                seg(7, 0.12, 0.05 * k, (3, 3)),
            ],
        },
        ChainDef {
            kind: ChainKind::Leg,
            split: Split::Z,
            segments: vec![
                seg(8, 0.40, 0.065 * k, (10, 8)),
                seg(9, 0.40, 0.05 * k, (14, 12)),
                seg(10, 0.07, 0.05 * k, (5, 5)),
            ],
        },
        ChainDef {
            kind: ChainKind::Leg,
            split: Split::Z,
            segments: vec![
                seg(11, 0.40, 0.065 * k, (9, 7)),
                seg(12, 0.40, 0.05 * k, (13, 11)),
                seg(13, 0.07, 0.05 * k, (6, 6)),
            ],
        },
    ]
}

struct Coarse {
    pos: Vec<Vec3>,
    quads: Vec<Quad>,
    chains: Vec<Chain>,
}

fn build_coarse(k: f64) -> Coarse {
    let mut pos = Vec::new();
    let mut ids: HashMap<(usize, usize, usize), u32> = HashMap::new();
    let mut vid = |i: usize, j: usize, l: usize, pos: &mut Vec<Vec3>| -> u32 {
        *ids.entry((i, j, l)).or_insert_with(|| {
            pos.push(Vec3::new(XS[i], YS[j], ZS[l]));
            (pos.len() - 1) as u32
        })
    };
    let mut torso: Vec<[u32; 4]> = Vec::new();
    for i in 0..3 {
        for j in 0..3 {
            torso.push([(i, j, 1), (i + 1, j, 1), (i + 1, j + 1, 1), (i, j + 1, 1)].map(|(a, b, c)| vid(a, b, c, &mut pos)));
            torso.push([(i, j, 0), (i, j + 1, 0), (i + 1, j + 1, 0), (i + 1, j, 0)].map(|(a, b, c)| vid(a, b, c, &mut pos)));
        }
    }
    for j in 0..3 {
        torso.push([(3, j, 0), (3, j + 1, 0), (3, j + 1, 1), (3, j, 1)].map(|(a, b, c)| vid(a, b, c, &mut pos)));
        torso.push([(0, j, 0), (0, j, 1), (0, j + 1, 1), (0, j + 1, 0)].map(|(a, b, c)| vid(a, b, c, &mut pos)));
    }
    for i in 0..3 {
        torso.push([(i, 3, 0), (i, 3, 1), (i + 1, 3, 1), (i + 1, 3, 0)].map(|(a, b, c)| vid(a, b, c, &mut pos)));
        torso.push([(i, 0, 0), (i + 1, 0, 0), (i + 1, 0, 1), (i, 0, 1)].map(|(a, b, c)| vid(a, b, c, &mut pos)));
    }
    // Attachment quads, in chain order: head (top middle), left arm (+x side,
    // top row), right arm, left leg (bottom, +x), right leg.
    let find = |pos: &Vec<Vec3>, torso: &Vec<[u32; 4]>, pred: &dyn Fn(&Vec3, &Vec3) -> bool| -> usize {
        torso
            .iter()
            .position(|q| {
                let c = q.iter().fold(Vec3::zeros(), |acc, &i| acc + pos[i as usize]) / 4.0;
                pred(&c, &quad_normal(pos, q))
            })
            .expect("attachment quad exists")
    };
    let attach_preds: [&dyn Fn(&Vec3, &Vec3) -> bool; 5] = [
        &|c, n| n.y > 0.5 && c.x.abs() < 1e-9,
        &|c, n| n.x > 0.5 && c.y > 1.3,
        &|c, n| n.x < -0.5 && c.y > 1.3,
        &|c, n| n.y < -0.5 && c.x > 0.1,
        &|c, n| n.y < -0.5 && c.x < -0.1,
    ];
    let attach: Vec<usize> = attach_preds.iter().map(|p| find(&pos, &torso, *p)).collect();
    let mut quads: Vec<Quad> = torso
        .iter()
        .enumerate()
        .filter(|(i, _)| !attach.contains(i))
        .map(|(_, q)| Quad {
            v: *q,
            kind: QuadKind::Torso,
        })
        .collect();
    let mut chains = Vec::new();
    for (ci, def) in chain_defs(k).into_iter().enumerate() {
        let base = torso[attach[ci]];
        let corners = base.map(|i| pos[i as usize]);
        let center = corners.iter().sum::<Vec3>() / 4.0;
        let axis = quad_normal(&pos, &base);
        let u = (corners[1] - corners[0]).normalize();
        let v = axis.cross(&u);
        let signs = [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)];
        let mut ring = base;
        let mut reach = 0.0;
        for (si, seg) in def.segments.iter().enumerate() {
            reach += seg.length;
            let c = center + axis * reach;
            let next = signs.map(|(su, sv)| {
                pos.push(c + u * (su * seg.half) + v * (sv * seg.half));
                (pos.len() - 1) as u32
            });
            for i in 0..4 {
                let j = (i + 1) % 4;
                quads.push(Quad {
                    v: [ring[i], ring[j], next[j], next[i]],
                    kind: QuadKind::Side { chain: ci, seg: si },
                });
            }
            ring = next;
        }
        quads.push(Quad {
            v: ring,
            kind: QuadKind::Cap { chain: ci },
        });
        chains.push(Chain {
            def,
            origin: center,
            axis,
            u,
            v,
        });
    }
    Coarse { pos, quads, chains }
}

/// Subdivided mesh with per-corner UVs and per-face charts.
struct Fine {
    pos: Vec<Vec3>,
    tags: Vec<VertexTag>,
    faces: Vec<[u32; 3]>,
    face_charts: Vec<u8>,
    corner_uv: Vec<[[f64; 2]; 3]>,
}

fn chart_of(coarse: &Coarse, q: &Quad) -> u8 {
    let n = quad_normal(&coarse.pos, &q.v);
    let (chain, seg) = match q.kind {
        QuadKind::Torso => {
            let score = n.z + 0.1 * n.x + 0.01 * n.y;
            return if score > 0.0 { 2 } else { 1 };
        }
        QuadKind::Side { chain, seg } => (chain, seg),
        QuadKind::Cap { chain } => (chain, coarse.chains[chain].def.segments.len() - 1),
    };
    let def = &coarse.chains[chain].def;
    let score = match def.split {
        Split::Z => n.z + 0.1 * n.x + 0.01 * n.y,
        Split::X => n.x + 0.1 * n.z + 0.01 * n.y,
    };
    let (pos_chart, neg_chart) = def.segments[seg].charts;
    if score > 0.0 {
        pos_chart
    } else {
        neg_chart
    }
}

fn subdivide(coarse: &Coarse, s: usize) -> Fine {
    let mut pos = coarse.pos.clone();
    let mut tags = vec![VertexTag::default(); pos.len()];
    let mut edge_points: HashMap<(u32, u32, usize), u32> = HashMap::new();
    let mut faces = Vec::new();
    let mut face_charts = Vec::new();
    let mut corner_uv = Vec::new();

    // UV tiles: each coarse quad gets its own cell in its chart's square.
    let charts: Vec<u8> = coarse.quads.iter().map(|q| chart_of(coarse, q)).collect();
    let mut per_chart: HashMap<u8, usize> = HashMap::new();
    for &c in &charts {
        *per_chart.entry(c).or_default() += 1;
    }
    let mut slot: HashMap<u8, usize> = HashMap::new();

    for (qi, quad) in coarse.quads.iter().enumerate() {
        let chart = charts[qi];
        let n_in_chart = per_chart[&chart];
        let g = (n_in_chart as f64).sqrt().ceil() as usize;
        let idx = {
            let e = slot.entry(chart).or_default();
            *e += 1;
            *e - 1
        };
        let cell = 1.0 / g as f64;
        let margin = 0.04 * cell;
        let (u0, v0) = ((idx % g) as f64 * cell + margin, (idx / g) as f64 * cell + margin);
        let span = cell - 2.0 * margin;

        let c = quad.v.map(|i| coarse.pos[i as usize]);
        let mut grid = vec![0u32; (s + 1) * (s + 1)];
        for j in 0..=s {
            for i in 0..=s {
                let id = match (i, j) {
                    (0, 0) => quad.v[0],
                    (i, 0) if i == s => quad.v[1],
                    (i, j) if i == s && j == s => quad.v[2],
                    (0, j) if j == s => quad.v[3],
                    _ => {
                        let edge = if j == 0 {
                            Some((quad.v[0], quad.v[1], i))
                        } else if i == s {
                            Some((quad.v[1], quad.v[2], j))
                        } else if j == s {
                            Some((quad.v[3], quad.v[2], i))
                        } else if i == 0 {
                            Some((quad.v[0], quad.v[3], j))
                        } else {
                            None
                        };
                        let p = lerp(&lerp(&c[0], &c[1], i as f64 / s as f64), &lerp(&c[3], &c[2], i as f64 / s as f64), j as f64 / s as f64);
                        match edge {
                            Some((a, b, t)) => {
                                let key = if a < b { (a, b, t) } else { (b, a, s - t) };
                                *edge_points.entry(key).or_insert_with(|| {
                                    pos.push(p);
                                    tags.push(VertexTag::default());
                                    (pos.len() - 1) as u32
                                })
                            }
                            None => {
                                pos.push(p);
                                tags.push(VertexTag::default());
                                (pos.len() - 1) as u32
                            }
                        }
                    }
                };
                grid[j * (s + 1) + i] = id;
                let tag = &mut tags[id as usize];
                match quad.kind {
                    QuadKind::Torso => tag.on_torso = true,
                    QuadKind::Side { chain, seg } => {
                        tag.chain = Some(chain);
                        tag.sigma = seg as f64 + j as f64 / s as f64;
                    }
                    QuadKind::Cap { chain } => {
                        tag.chain = Some(chain);
                        let interior = i > 0 && i < s && j > 0 && j < s;
                        if interior {
                            tag.cap_interior = true;
                            tag.sigma = coarse.chains[chain].def.segments.len() as f64;
                        }
                    }
                }
            }
        }
        let uv_of = |i: usize, j: usize| {
            [
                f32_exact(u0 + span * i as f64 / s as f64),
                f32_exact(v0 + span * j as f64 / s as f64),
            ]
        };
        for j in 0..s {
            for i in 0..s {
                let a = (i, j);
                let b = (i + 1, j);
                let cc = (i + 1, j + 1);
                let d = (i, j + 1);
                let id = |(x, y): (usize, usize)| grid[y * (s + 1) + x];
                for tri in [[a, b, cc], [a, cc, d]] {
                    faces.push(tri.map(id));
                    face_charts.push(chart);
                    corner_uv.push(tri.map(|(x, y)| uv_of(x, y)));
                }
            }
        }
    }
    Fine {
        pos,
        tags,
        faces,
        face_charts,
        corner_uv,
    }
}

fn round_limbs(fine: &mut Fine, coarse: &Coarse) {
    for (p, tag) in fine.pos.iter_mut().zip(&fine.tags) {
        let Some(ci) = tag.chain else { continue };
        if tag.on_torso || tag.sigma == 0.0 {
            continue;
        }
        let chain = &coarse.chains[ci];
        let q = *p - chain.origin;
        let (mut s, mut a, mut b) = (q.dot(&chain.axis), q.dot(&chain.u), q.dot(&chain.v));
        let rho = a.abs().max(b.abs());
        let len = a.hypot(b);
        if len > 0.0 {
            a *= rho / len;
            b *= rho / len;
        }
        if tag.cap_interior {
            let h = chain.def.segments.last().expect("chain has segments").half;
            s += 0.5 * h * (1.0 - (rho / h).powi(2)).max(0.0).sqrt();
        }
        *p = chain.origin + chain.axis * s + chain.u * a + chain.v * b;
    }
}

fn skin_weights(fine: &Fine, coarse: &Coarse, nj: usize) -> Vec<f64> {
    let mut w = vec![0.0; fine.pos.len() * nj];
    for (vi, tag) in fine.tags.iter().enumerate() {
        let row = &mut w[vi * nj..(vi + 1) * nj];
        let Some(ci) = tag.chain else {
            row[0] = 1.0;
            continue;
        };
        let segs = &coarse.chains[ci].def.segments;
        let k = (tag.sigma.floor() as usize).min(segs.len() - 1);
        let f = tag.sigma - k as f64;
        let joint = segs[k].joint;
        let joint_ring = k == 0 || segs[k - 1].joint != joint;
        let parent = if k == 0 { 0 } else { segs[k - 1].joint };
        if joint_ring && f < BLEND_FRACTION && tag.sigma < segs.len() as f64 {
            let wp = f32_exact(0.5 * (1.0 - f / BLEND_FRACTION));
            row[parent] = wp;
            row[joint] = f32_exact(1.0 - wp);
        } else {
            row[joint] = 1.0;
        }
    }
    w
}

fn joint_regressor(fine: &Fine, coarse: &Coarse, nj: usize) -> Vec<f64> {
    let nv = fine.pos.len();
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); nj];
    for (vi, tag) in fine.tags.iter().enumerate() {
        if tag.on_torso && fine.pos[vi].y == YS[0] {
            members[0].push(vi);
        }
        if let Some(ci) = tag.chain {
            let segs = &coarse.chains[ci].def.segments;
            let k = tag.sigma as usize;
            if tag.sigma.fract() == 0.0 && !tag.cap_interior && k < segs.len() {
                let joint = segs[k].joint;
                if k == 0 || segs[k - 1].joint != joint {
                    members[joint].push(vi);
                }
            }
        }
    }
    let mut r = vec![0.0; nj * nv];
    for (j, m) in members.iter().enumerate() {
        assert!(!m.is_empty(), "joint {j} has no ring vertices");
        let w = f32_exact(1.0 / m.len() as f64);
        for &v in m {
            r[j * nv + v] = w;
        }
    }
    r
}

fn shape_dirs(fine: &Fine, coarse: &Coarse) -> Vec<f64> {
    let k = TOY_NUM_SHAPE;
    let mut dirs = vec![0.0; fine.pos.len() * 3 * k];
    for (vi, (p, tag)) in fine.pos.iter().zip(&fine.tags).enumerate() {
        let mut d = [Vec3::zeros(); TOY_NUM_SHAPE];
        d[0] = Vec3::new(0.0, 0.05 * (p.y - YS[0]), 0.0);
        d[7] = Vec3::new(0.0, 0.0, 0.05 * (p.y - YS[0]));
        let limb = tag.chain.filter(|_| !tag.on_torso && tag.sigma > 0.0);
        match limb {
            None => {
                d[1] = Vec3::new(0.1 * p.x, 0.0, 0.1 * p.z);
                let lift = ((p.y - 1.1) / 0.4).clamp(0.0, 1.0);
                d[4] = Vec3::new(0.03 * (p.x / 0.18) * lift, 0.0, 0.0);
                if p.z > 0.0 {
                    let bump = 1.0 - ((p.x / 0.18).powi(2) + ((p.y - 1.15) / 0.3).powi(2));
                    d[6] = Vec3::new(0.0, 0.0, 0.04 * bump.max(0.0));
                }
            }
            Some(ci) => {
                let chain = &coarse.chains[ci];
                let q = p - chain.origin;
                let s = q.dot(&chain.axis);
                let radial = q - chain.axis * s;
                d[1] = radial * 0.1;
                match chain.def.kind {
                    ChainKind::Arm => {
                        d[2] = chain.axis * (0.1 * s);
                        d[4] = chain.axis * 0.03;
                    }
                    ChainKind::Leg => d[3] = chain.axis * (0.1 * s),
                    ChainKind::Head => {
                        if tag.sigma >= 1.0 {
                            d[5] = (q - chain.axis * 0.2) * 0.1;
                        }
                    }
                }
            }
        }
        for (c, dir) in d.iter().enumerate() {
            for axis in 0..3 {
                dirs[(vi * 3 + axis) * k + c] = f32_exact(dir[axis]);
            }
        }
    }
    dirs
}

/// The toy model together with its atlas.
pub struct ToyBiped {
    pub model: BodyModel,
    pub atlas: UvAtlas,
}

/// Builds the toy biped and its IUV atlas.
///
/// # Panics
/// When `n_segments < 2` or `radius` is not in `(0, 0.2]`.
pub fn build_toy_biped(n_segments: usize, radius: f64) -> ToyBiped {
    assert!(n_segments >= 2, "n_segments must be at least 2");
    assert!(radius > 0.0 && radius <= 0.2, "radius must be in (0, 0.2]");
    let coarse = build_coarse(radius / 0.1);
    let s = (n_segments / 2).max(1);
    let mut fine = subdivide(&coarse, s);
    round_limbs(&mut fine, &coarse);
    let nj = TOY_PARENTS.len();
    let raw = RawBodyModel {
        template: fine.pos.iter().map(|p| p.map(f32_exact)).collect(),
        faces: fine.faces.clone(),
        num_shape: TOY_NUM_SHAPE,
        shape_dirs: shape_dirs(&fine, &coarse),
        pose_dirs: None,
        joint_regressor: joint_regressor(&fine, &coarse, nj),
        skin_weights: skin_weights(&fine, &coarse, nj),
        parents: TOY_PARENTS.to_vec(),
        gender_tag: "neutral".into(),
    };
    let model = raw.validate().expect("toy biped satisfies model invariants");
    let atlas = UvAtlas::new(
        &fine.faces,
        fine.pos.len(),
        fine.face_charts,
        fine.corner_uv,
        chart_table().chart_to_part,
        DEFAULT_GRID_RESOLUTION,
    )
    .expect("toy atlas is valid");
    ToyBiped { model, atlas }
}

/// The toy body model alone.
pub fn make_toy_biped(n_segments: usize, radius: f64) -> BodyModel {
    build_toy_biped(n_segments, radius).model
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn euler_characteristic(model: &BodyModel) -> i64 {
        let mut edges = HashSet::new();
        for f in model.faces().iter() {
            for (a, b) in [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])] {
                edges.insert((a.min(b), a.max(b)));
            }
        }
        model.num_vertices() as i64 - edges.len() as i64 + model.faces().len() as i64
    }

    #[test]
    fn default_biped_is_closed_surface() {
        let m = make_toy_biped(8, 0.1);
        assert_eq!(m.num_joints(), 14);
        assert_eq!(m.num_shape(), 8);
        assert_eq!(euler_characteristic(&m), 2);
        let mut edge_use: HashMap<(u32, u32), usize> = HashMap::new();
        for f in m.faces().iter() {
            for (a, b) in [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])] {
                let n = edge_use.entry((a, b)).or_default();
                *n += 1;
                assert_eq!(*n, 1, "directed edge used twice");
            }
        }
        // Every directed edge has its reverse: closed and consistently oriented.
        for &(a, b) in edge_use.keys() {
            assert!(edge_use.contains_key(&(b, a)));
        }
        assert!((1500..4000).contains(&m.faces().len()));
    }

    #[test]
    fn minimal_biped_valid() {
        let m = make_toy_biped(2, 0.1);
        assert!(m.to_raw().checks().iter().all(|c| c.passed));
        assert_eq!(euler_characteristic(&m), 2);
    }

    #[test]
    fn deterministic() {
        assert_eq!(make_toy_biped(8, 0.1), make_toy_biped(8, 0.1));
    }

    #[test]
    fn outward_normals() {
        // The normal at the top of the head points up; at the chest it points forward.
        let m = make_toy_biped(8, 0.1);
        let mesh = crate::body::PosedMesh::new(m.template().to_vec(), m.faces().clone());
        let top = (0..m.num_vertices())
            .max_by(|&a, &b| mesh.vertices[a].y.total_cmp(&mesh.vertices[b].y))
            .unwrap();
        assert!(mesh.normals[top].y > 0.9);
        let chest = (0..m.num_vertices())
            .max_by(|&a, &b| mesh.vertices[a].z.total_cmp(&mesh.vertices[b].z))
            .unwrap();
        assert!(mesh.normals[chest].z > 0.5);
    }

    #[test]
    fn joints_at_expected_places() {
        let m = make_toy_biped(8, 0.1);
        let (_, jt) = m
            .posed(&crate::body::ShapeParams::zeros(8), &crate::body::PoseParams::identity(14))
            .unwrap();
        let j = jt.joint_positions();
        assert!((j[0] - Vec3::new(0.0, 0.9, 0.0)).norm() < 1e-6);
        assert!((j[1] - Vec3::new(0.0, 1.5, 0.0)).norm() < 1e-6);
        assert!((j[2] - Vec3::new(0.18, 1.4, 0.0)).norm() < 1e-6);
        assert!((j[3] - Vec3::new(0.44, 1.4, 0.0)).norm() < 1e-5);
        assert!((j[9] - Vec3::new(0.12, 0.5, 0.0)).norm() < 1e-5);
        assert!(j[13].x < 0.0);
    }

    #[test]
    fn atlas_uses_all_charts() {
        let t = build_toy_biped(8, 0.1);
        for c in 1..=24u8 {
            assert!(!t.atlas.chart_is_empty(c), "chart {c} empty");
        }
        for v in 0..t.model.num_vertices() {
            let s = t.atlas.vertex_iuv(v).unwrap();
            assert_eq!(t.atlas.iuv_to_vertex(&s).unwrap(), v as u32);
        }
    }
}
