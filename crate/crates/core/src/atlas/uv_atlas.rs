use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{AtlasError, IuvSample, NUM_CHARTS};
use crate::binio;
use crate::geometry::SurfaceHit;

pub const ATLAS_MANIFEST: &str = "atlas.json";
pub const DEFAULT_GRID_RESOLUTION: usize = 256;
const FORMAT_TAG: &str = "corrgen-uv-atlas";

/// How a ray hit is turned into an IUV label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum IuvMode {
    /// Barycentric blend of the hit face's corner UVs.
    #[default]
    Barycentric,
    /// Exact IUV of the face corner with the largest barycentric weight.
    NearestVertex,
}

/// Uniform grid of `(uv, vertex)` entries for one chart.
#[derive(Debug, Clone, PartialEq)]
struct ChartGrid {
    entries: Vec<([f64; 2], u32)>,
    cell_start: Vec<u32>,
    cell_items: Vec<u32>,
}

impl ChartGrid {
    fn new(mut entries: Vec<([f64; 2], u32)>, res: usize) -> Self {
        entries.sort_by(|a, b| {
            a.1.cmp(&b.1)
                .then(a.0[0].total_cmp(&b.0[0]))
                .then(a.0[1].total_cmp(&b.0[1]))
        });
        entries.dedup();
        let mut counts = vec![0u32; res * res + 1];
        let cells: Vec<usize> = entries.iter().map(|(uv, _)| cell_of(uv, res)).collect();
        for &c in &cells {
            counts[c + 1] += 1;
        }
        for i in 0..res * res {
            counts[i + 1] += counts[i];
        }
        let mut fill = counts.clone();
        let mut items = vec![0u32; entries.len()];
        for (i, &c) in cells.iter().enumerate() {
            items[fill[c] as usize] = i as u32;
            fill[c] += 1;
        }
        ChartGrid {
            entries,
            cell_start: counts,
            cell_items: items,
        }
    }

    fn cell(&self, cx: usize, cy: usize, res: usize) -> &[u32] {
        let c = cy * res + cx;
        &self.cell_items[self.cell_start[c] as usize..self.cell_start[c + 1] as usize]
    }

    /// Exact nearest entry by UV distance, ties to the lowest vertex index.
    fn nearest(&self, uv: [f64; 2], res: usize) -> Option<u32> {
        if self.entries.is_empty() {
            return None;
        }
        let cell_size = 1.0 / res as f64;
        let qx = ((uv[0].clamp(0.0, 1.0) * res as f64) as usize).min(res - 1);
        let qy = ((uv[1].clamp(0.0, 1.0) * res as f64) as usize).min(res - 1);
        let mut best: Option<(f64, u32)> = None;
        for ring in 0..=res {
            let lo_x = qx.saturating_sub(ring);
            let hi_x = (qx + ring).min(res - 1);
            let lo_y = qy.saturating_sub(ring);
            let hi_y = (qy + ring).min(res - 1);
            for cy in lo_y..=hi_y {
                for cx in lo_x..=hi_x {
                    let on_ring = cx.abs_diff(qx) == ring || cy.abs_diff(qy) == ring;
                    if !on_ring {
                        continue;
                    }
                    for &i in self.cell(cx, cy, res) {
                        let (p, v) = self.entries[i as usize];
                        let d = (p[0] - uv[0]).powi(2) + (p[1] - uv[1]).powi(2);
                        let better = match best {
                            None => true,
                            Some((bd, bv)) => d < bd || (d == bd && v < bv),
                        };
                        if better {
                            best = Some((d, v));
                        }
                    }
                }
            }
            // Everything outside ring `ring` is at least `ring` cells away.
            if let Some((bd, _)) = best {
                let reach = ring as f64 * cell_size;
                if bd.sqrt() < reach {
                    break;
                }
            }
        }
        best.map(|(_, v)| v)
    }
}

fn cell_of(uv: &[f64; 2], res: usize) -> usize {
    let cx = ((uv[0] * res as f64) as usize).min(res - 1);
    let cy = ((uv[1] * res as f64) as usize).min(res - 1);
    cy * res + cx
}

/// Per-face chart assignment with per-corner UVs and inverse lookup grids.
#[derive(Debug, Clone, PartialEq)]
pub struct UvAtlas {
    faces: Vec<[u32; 3]>,
    face_charts: Vec<u8>,
    corner_uv: Vec<[[f64; 2]; 3]>,
    chart_to_part: [u8; NUM_CHARTS],
    vertex_iuv: Vec<Option<IuvSample>>,
    grids: Vec<ChartGrid>,
    grid_resolution: usize,
}

impl UvAtlas {
    pub fn new(
        faces: &[[u32; 3]],
        num_vertices: usize,
        face_charts: Vec<u8>,
        corner_uv: Vec<[[f64; 2]; 3]>,
        chart_to_part: [u8; NUM_CHARTS],
        grid_resolution: usize,
    ) -> Result<UvAtlas, AtlasError> {
        let nf = faces.len();
        for (what, found) in [("face charts", face_charts.len()), ("corner uvs", corner_uv.len())] {
            if found != nf {
                return Err(AtlasError::DimensionMismatch {
                    what,
                    expected: nf,
                    found,
                });
            }
        }
        for &p in &chart_to_part {
            if !(1..=super::NUM_PARTS as u8).contains(&p) {
                return Err(AtlasError::PartOutOfRange(p));
            }
        }
        let res = grid_resolution.max(1);
        let mut vertex_iuv: Vec<Option<IuvSample>> = vec![None; num_vertices];
        let mut per_chart: Vec<Vec<([f64; 2], u32)>> = vec![Vec::new(); NUM_CHARTS];
        for (f, face) in faces.iter().enumerate() {
            let chart = face_charts[f];
            if chart == 0 {
                return Err(AtlasError::MissingFace(f as u32));
            }
            if chart as usize > NUM_CHARTS {
                return Err(AtlasError::ChartOutOfRange(chart));
            }
            for (c, &vi) in face.iter().enumerate() {
                let uv = corner_uv[f][c];
                if !uv.iter().all(|x| (0.0..=1.0).contains(x)) {
                    return Err(AtlasError::UvOutOfRange { face: f, corner: c, uv });
                }
                let slot = vertex_iuv.get_mut(vi as usize).ok_or(AtlasError::MissingFace(f as u32))?;
                if slot.is_none() {
                    *slot = Some(IuvSample {
                        chart,
                        u: uv[0],
                        v: uv[1],
                    });
                }
                per_chart[chart as usize - 1].push((uv, vi));
            }
        }
        let grids = per_chart.into_iter().map(|e| ChartGrid::new(e, res)).collect();
        Ok(UvAtlas {
            faces: faces.to_vec(),
            face_charts,
            corner_uv,
            chart_to_part,
            vertex_iuv,
            grids,
            grid_resolution: res,
        })
    }

    /// Builds from per-corner charts, rejecting faces whose corners disagree.
    pub fn from_corner_charts(
        faces: &[[u32; 3]],
        num_vertices: usize,
        corner_charts: &[[u8; 3]],
        corner_uv: Vec<[[f64; 2]; 3]>,
        chart_to_part: [u8; NUM_CHARTS],
        grid_resolution: usize,
    ) -> Result<UvAtlas, AtlasError> {
        let mut face_charts = Vec::with_capacity(corner_charts.len());
        for (face, c) in corner_charts.iter().enumerate() {
            if c[0] != c[1] || c[1] != c[2] {
                return Err(AtlasError::SeamStraddle { face, charts: *c });
            }
            face_charts.push(c[0]);
        }
        UvAtlas::new(faces, num_vertices, face_charts, corner_uv, chart_to_part, grid_resolution)
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn num_vertices(&self) -> usize {
        self.vertex_iuv.len()
    }

    pub fn faces(&self) -> &[[u32; 3]] {
        &self.faces
    }

    pub fn face_charts(&self) -> &[u8] {
        &self.face_charts
    }

    pub fn corner_uvs(&self) -> &[[[f64; 2]; 3]] {
        &self.corner_uv
    }

    pub fn chart_to_part(&self) -> &[u8; NUM_CHARTS] {
        &self.chart_to_part
    }

    pub fn grid_resolution(&self) -> usize {
        self.grid_resolution
    }

    pub fn face_chart(&self, face: u32) -> Result<u8, AtlasError> {
        self.face_charts.get(face as usize).copied().ok_or(AtlasError::MissingFace(face))
    }

    pub fn part_of_chart(&self, chart: u8) -> Result<u8, AtlasError> {
        if !(1..=NUM_CHARTS as u8).contains(&chart) {
            return Err(AtlasError::ChartOutOfRange(chart));
        }
        Ok(self.chart_to_part[chart as usize - 1])
    }

    pub fn part_of_face(&self, face: u32) -> Result<u8, AtlasError> {
        self.part_of_chart(self.face_chart(face)?)
    }

    /// Canonical IUV of a vertex: its corner in the lowest-index incident face.
    pub fn vertex_iuv(&self, vertex: usize) -> Option<IuvSample> {
        self.vertex_iuv.get(vertex).copied().flatten()
    }

    pub fn chart_is_empty(&self, chart: u8) -> bool {
        (1..=NUM_CHARTS as u8).contains(&chart) && self.grids[chart as usize - 1].entries.is_empty()
    }

    /// Nearest vertex stored in the sample's chart, by UV distance.
    pub fn iuv_to_vertex(&self, sample: &IuvSample) -> Result<u32, AtlasError> {
        if !(1..=NUM_CHARTS as u8).contains(&sample.chart) {
            return Err(AtlasError::ChartOutOfRange(sample.chart));
        }
        self.grids[sample.chart as usize - 1]
            .nearest([sample.u, sample.v], self.grid_resolution)
            .ok_or(AtlasError::EmptyChart(sample.chart))
    }

    /// Largest UV distance between two corners of one face.
    pub fn max_face_uv_extent(&self) -> f64 {
        self.corner_uv
            .iter()
            .map(|c| {
                let d = |a: [f64; 2], b: [f64; 2]| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
                d(c[0], c[1]).max(d(c[1], c[2])).max(d(c[0], c[2]))
            })
            .fold(0.0, f64::max)
    }
}

/// Converts a ray hit to an IUV label.
pub fn surface_to_iuv(hit: &SurfaceHit, atlas: &UvAtlas, mode: IuvMode) -> Result<IuvSample, AtlasError> {
    let f = hit.face as usize;
    let chart = atlas.face_chart(hit.face)?;
    let uv = &atlas.corner_uv[f];
    match mode {
        IuvMode::Barycentric => {
            let b = hit.bary;
            let u = b[0] * uv[0][0] + b[1] * uv[1][0] + b[2] * uv[2][0];
            let v = b[0] * uv[0][1] + b[1] * uv[1][1] + b[2] * uv[2][1];
            Ok(IuvSample {
                chart,
                u: u.clamp(0.0, 1.0),
                v: v.clamp(0.0, 1.0),
            })
        }
        IuvMode::NearestVertex => {
            let face = atlas.faces[f];
            let mut best = 0;
            for c in 1..3 {
                let (w, bw) = (hit.bary[c], hit.bary[best]);
                if w > bw || (w == bw && face[c] < face[best]) {
                    best = c;
                }
            }
            Ok(IuvSample {
                chart,
                u: uv[best][0],
                v: uv[best][1],
            })
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct AtlasManifest {
    format: String,
    version: u32,
    num_faces: usize,
    num_vertices: usize,
    grid_resolution: usize,
    chart_to_part: Vec<u8>,
    corner_charts: String,
    corner_uv: String,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> AtlasError + '_ {
    move |source| AtlasError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes `atlas.json`, `charts.u8` (F×3 corner charts) and `uv.f32` (F×3×2).
pub fn save_atlas(atlas: &UvAtlas, dir: &Path) -> Result<(), AtlasError> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let charts: Vec<u8> = atlas.face_charts.iter().flat_map(|&c| [c; 3]).collect();
    let charts_path = dir.join("charts.u8");
    std::fs::write(&charts_path, charts).map_err(io_err(&charts_path))?;
    let uv_path = dir.join("uv.f32");
    binio::write_f32(&uv_path, atlas.corner_uv.iter().flatten().flatten().copied()).map_err(io_err(&uv_path))?;
    let manifest = AtlasManifest {
        format: FORMAT_TAG.into(),
        version: 1,
        num_faces: atlas.num_faces(),
        num_vertices: atlas.num_vertices(),
        grid_resolution: atlas.grid_resolution,
        chart_to_part: atlas.chart_to_part.to_vec(),
        corner_charts: "charts.u8".into(),
        corner_uv: "uv.f32".into(),
    };
    let path = dir.join(ATLAS_MANIFEST);
    std::fs::write(&path, serde_json::to_string_pretty(&manifest).expect("manifest serializes")).map_err(io_err(&path))
}

/// Loads an atlas directory for the given mesh topology.
pub fn load_atlas(dir: &Path, faces: &[[u32; 3]], num_vertices: usize) -> Result<UvAtlas, AtlasError> {
    let path = dir.join(ATLAS_MANIFEST);
    let text = std::fs::read_to_string(&path).map_err(io_err(&path))?;
    let m: AtlasManifest = serde_json::from_str(&text).map_err(|e| AtlasError::Manifest {
        path: path.clone(),
        message: e.to_string(),
    })?;
    if m.format != FORMAT_TAG {
        return Err(AtlasError::Manifest {
            path,
            message: format!("unexpected format tag {:?}", m.format),
        });
    }
    let checks = [
        ("faces", m.num_faces, faces.len()),
        ("vertices", m.num_vertices, num_vertices),
        ("chart_to_part", NUM_CHARTS, m.chart_to_part.len()),
    ];
    for (what, expected, found) in checks {
        if expected != found {
            return Err(AtlasError::DimensionMismatch { what, expected, found });
        }
    }
    let charts_path = dir.join(&m.corner_charts);
    let charts = std::fs::read(&charts_path).map_err(io_err(&charts_path))?;
    if charts.len() != 3 * m.num_faces {
        return Err(AtlasError::DimensionMismatch {
            what: "corner charts",
            expected: 3 * m.num_faces,
            found: charts.len(),
        });
    }
    let uv_path = dir.join(&m.corner_uv);
    let uv = binio::read_f32(&uv_path).map_err(io_err(&uv_path))?;
    if uv.len() != 6 * m.num_faces {
        return Err(AtlasError::DimensionMismatch {
            what: "corner uvs",
            expected: 6 * m.num_faces,
            found: uv.len(),
        });
    }
    let corner_charts: Vec<[u8; 3]> = charts.chunks(3).map(|c| [c[0], c[1], c[2]]).collect();
    let corner_uv = uv
        .chunks(6)
        .map(|c| [[c[0], c[1]], [c[2], c[3]], [c[4], c[5]]])
        .collect();
    let mut table = [0u8; NUM_CHARTS];
    table.copy_from_slice(&m.chart_to_part);
    UvAtlas::from_corner_charts(faces, num_vertices, &corner_charts, corner_uv, table, m.grid_resolution)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atlas::chart_table;

    fn single_face() -> UvAtlas {
        UvAtlas::new(
            &[[0, 1, 2]],
            3,
            vec![5],
            vec![[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]],
            chart_table().chart_to_part,
            16,
        )
        .unwrap()
    }

    fn hit(bary: [f64; 3]) -> SurfaceHit {
        SurfaceHit { face: 0, t: 1.0, bary }
    }

    #[test]
    fn corner_hits_agree() {
        let a = single_face();
        for c in 0..3 {
            let mut b = [0.0; 3];
            b[c] = 1.0;
            let x = surface_to_iuv(&hit(b), &a, IuvMode::Barycentric).unwrap();
            let y = surface_to_iuv(&hit(b), &a, IuvMode::NearestVertex).unwrap();
            assert_eq!(x, y);
            assert_eq!(x, a.vertex_iuv(c).unwrap());
        }
    }

    #[test]
    fn centroid_is_mean_uv() {
        let a = single_face();
        let s = surface_to_iuv(&hit([1.0 / 3.0; 3]), &a, IuvMode::Barycentric).unwrap();
        assert!((s.u - 1.0 / 3.0).abs() < 1e-12 && (s.v - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(s.chart, 5);
        // All weights equal: the lowest vertex index wins.
        let n = surface_to_iuv(&hit([1.0 / 3.0; 3]), &a, IuvMode::NearestVertex).unwrap();
        assert_eq!((n.u, n.v), (0.0, 0.0));
    }

    #[test]
    fn inverse_lookup() {
        let a = single_face();
        for v in 0..3 {
            assert_eq!(a.iuv_to_vertex(&a.vertex_iuv(v).unwrap()).unwrap(), v as u32);
        }
        let near = IuvSample { chart: 5, u: 0.9, v: 0.2 };
        assert_eq!(a.iuv_to_vertex(&near).unwrap(), 1);
        assert!(matches!(
            a.iuv_to_vertex(&IuvSample { chart: 6, u: 0.5, v: 0.5 }),
            Err(AtlasError::EmptyChart(6))
        ));
        assert!(a.iuv_to_vertex(&IuvSample { chart: 0, u: 0.5, v: 0.5 }).is_err());
    }

    #[test]
    fn straddling_face_rejected() {
        let err = UvAtlas::from_corner_charts(
            &[[0, 1, 2]],
            3,
            &[[1, 1, 2]],
            vec![[[0.0; 2]; 3]],
            chart_table().chart_to_part,
            8,
        )
        .unwrap_err();
        assert!(matches!(err, AtlasError::SeamStraddle { face: 0, .. }));
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let a = single_face();
        save_atlas(&a, dir.path()).unwrap();
        assert_eq!(load_atlas(dir.path(), &[[0, 1, 2]], 3).unwrap(), a);
    }
}
