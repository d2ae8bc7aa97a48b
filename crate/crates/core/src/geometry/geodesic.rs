use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::GeometryError;
use crate::math::Vec3;

/// Edge lengths are rounded to multiples of 2⁻³² m so that every path sum is
/// exact in `f64` and the shortest-path value is independent of summation order.
const QUANTUM: f64 = 4294967296.0;

fn quantize(len: f64) -> f64 {
    (len * QUANTUM).round() / QUANTUM
}

/// Undirected mesh edge graph in compressed sparse row form.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeGraph {
    offsets: Vec<usize>,
    targets: Vec<u32>,
    weights: Vec<f64>,
}

#[derive(PartialEq)]
struct Entry(f64, u32);

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap on distance, then vertex index.
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl EdgeGraph {
    /// Builds the graph of triangle edges weighted by Euclidean length.
    pub fn new(vertices: &[Vec3], faces: &[[u32; 3]]) -> Self {
        let n = vertices.len();
        let mut edges: Vec<(u32, u32)> = faces
            .iter()
            .flat_map(|f| [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])])
            .filter(|(a, b)| a != b)
            .flat_map(|(a, b)| [(a, b), (b, a)])
            .collect();
        edges.sort_unstable();
        edges.dedup();
        let mut offsets = vec![0usize; n + 1];
        for &(a, _) in &edges {
            offsets[a as usize + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        let targets: Vec<u32> = edges.iter().map(|e| e.1).collect();
        let weights = edges
            .iter()
            .map(|&(a, b)| quantize((vertices[a as usize] - vertices[b as usize]).norm()))
            .collect();
        EdgeGraph {
            offsets,
            targets,
            weights,
        }
    }

    pub fn num_vertices(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.offsets[v]..self.offsets[v + 1];
        self.targets[r.clone()]
            .iter()
            .zip(&self.weights[r])
            .map(|(&t, &w)| (t as usize, w))
    }

    /// Dijkstra from `source`; unreachable vertices get `+∞`.
    pub fn distances_from(&self, source: usize) -> Result<Vec<f64>, GeometryError> {
        let n = self.num_vertices();
        if source >= n {
            return Err(GeometryError::InvalidSource { index: source, vertices: n });
        }
        let mut dist = vec![f64::INFINITY; n];
        let mut heap = BinaryHeap::new();
        dist[source] = 0.0;
        heap.push(Entry(0.0, source as u32));
        while let Some(Entry(d, v)) = heap.pop() {
            if d > dist[v as usize] {
                continue;
            }
            for (w, len) in self.neighbors(v as usize) {
                let nd = d + len;
                if nd < dist[w] {
                    dist[w] = nd;
                    heap.push(Entry(nd, w as u32));
                }
            }
        }
        Ok(dist)
    }
}

/// Shortest edge-path distances from one vertex to every vertex.
pub fn geodesic_distances(vertices: &[Vec3], faces: &[[u32; 3]], source: usize) -> Result<Vec<f64>, GeometryError> {
    EdgeGraph::new(vertices, faces).distances_from(source)
}
