use std::num::NonZeroUsize;
use std::sync::{Arc, Mutex};

use lru::LruCache;

use crate::geometry::EdgeGraph;
use crate::math::Vec3;

/// Geodesic distances on a fixed template mesh, one Dijkstra row per source
/// vertex, with the most recently used rows kept in a bounded cache.
pub struct GeodesicOracle {
    graph: EdgeGraph,
    rows: Mutex<LruCache<u32, Arc<Vec<f64>>>>,
}

impl GeodesicOracle {
    pub fn new(vertices: &[Vec3], faces: &[[u32; 3]], capacity: usize) -> Self {
        GeodesicOracle {
            graph: EdgeGraph::new(vertices, faces),
            rows: Mutex::new(LruCache::new(NonZeroUsize::new(capacity.max(1)).unwrap())),
        }
    }

    pub fn num_vertices(&self) -> usize {
        self.graph.num_vertices()
    }

    /// Distances from `source` to every vertex; `+∞` where unreachable.
    pub fn row(&self, source: u32) -> Arc<Vec<f64>> {
        if let Some(r) = self.rows.lock().unwrap().get(&source) {
            return Arc::clone(r);
        }
        let row = Arc::new(
            self.graph
                .distances_from(source as usize)
                .unwrap_or_else(|_| vec![f64::INFINITY; self.graph.num_vertices()]),
        );
        self.rows.lock().unwrap().put(source, Arc::clone(&row));
        row
    }

    /// Symmetric: rows are computed from the smaller index.
    pub fn distance(&self, a: u32, b: u32) -> f64 {
        if a == b {
            return 0.0;
        }
        let (s, t) = if a < b { (a, b) } else { (b, a) };
        self.row(s).get(t as usize).copied().unwrap_or(f64::INFINITY)
    }

    pub fn cached_rows(&self) -> usize {
        self.rows.lock().unwrap().len()
    }
}
