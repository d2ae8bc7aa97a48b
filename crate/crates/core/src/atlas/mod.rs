//! The 24-chart IUV surface parameterization and its 14-part semantic grouping.

mod texture;
mod uv_atlas;

pub use texture::{mix_textures, part_layout, sample_texture, MixedTexture, TextureLayout};
pub use uv_atlas::{load_atlas, save_atlas, surface_to_iuv, IuvMode, UvAtlas, ATLAS_MANIFEST, DEFAULT_GRID_RESOLUTION};

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const NUM_CHARTS: usize = 24;
pub const NUM_PARTS: usize = 14;

#[derive(Debug, Error)]
pub enum AtlasError {
    #[error("chart {0} is outside 1..=24")]
    ChartOutOfRange(u8),
    #[error("part {0} is outside 1..=14")]
    PartOutOfRange(u8),
    #[error("chart {0} has no vertices")]
    EmptyChart(u8),
    #[error("face {0} has no atlas entry")]
    MissingFace(u32),
    #[error("face {face} straddles charts {charts:?}")]
    SeamStraddle { face: usize, charts: [u8; 3] },
    #[error("face {face} corner {corner} has uv {uv:?} outside [0, 1]")]
    UvOutOfRange { face: usize, corner: usize, uv: [f64; 2] },
    #[error("{what}: expected {expected} entries, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("textures differ in size: {a:?} vs {b:?}")]
    TextureSize { a: (usize, usize), b: (usize, usize) },
    #[error("{path}: {message}")]
    Manifest { path: std::path::PathBuf, message: String },
    #[error("{path}: {source}")]
    Io {
        path: std::path::PathBuf,
        source: std::io::Error,
    },
}

/// A surface label: chart index `I` (1..=24, 0 for background) and chart-local `(u, v)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct IuvSample {
    pub chart: u8,
    pub u: f64,
    pub v: f64,
}

impl IuvSample {
    pub const BACKGROUND: IuvSample = IuvSample {
        chart: 0,
        u: 0.0,
        v: 0.0,
    };

    pub fn is_background(&self) -> bool {
        self.chart == 0
    }
}

#[derive(Debug, Deserialize)]
struct ChartEntry {
    chart: u8,
    part: u8,
}

#[derive(Debug, Deserialize)]
struct ChartTableFile {
    parts: Vec<String>,
    charts: Vec<ChartEntry>,
}

/// The shipped chart→part grouping.
pub struct ChartTable {
    pub part_names: Vec<String>,
    /// Index `I - 1` holds the part of chart `I`.
    pub chart_to_part: [u8; NUM_CHARTS],
}

const CHART_TABLE_JSON: &str = include_str!("../../data/densepose_chart_parts.json");

pub fn chart_table() -> &'static ChartTable {
    static TABLE: OnceLock<ChartTable> = OnceLock::new();
    TABLE.get_or_init(|| {
        let file: ChartTableFile = serde_json::from_str(CHART_TABLE_JSON).expect("shipped chart table parses");
        let mut chart_to_part = [0u8; NUM_CHARTS];
        for e in &file.charts {
            chart_to_part[e.chart as usize - 1] = e.part;
        }
        assert!(chart_to_part.iter().all(|&p| (1..=NUM_PARTS as u8).contains(&p)));
        assert_eq!(file.parts.len(), NUM_PARTS);
        ChartTable {
            part_names: file.parts,
            chart_to_part,
        }
    })
}

/// Semantic part (1..=14) of chart `I` under the shipped table.
pub fn part_of_chart(chart: u8) -> Result<u8, AtlasError> {
    if !(1..=NUM_CHARTS as u8).contains(&chart) {
        return Err(AtlasError::ChartOutOfRange(chart));
    }
    Ok(chart_table().chart_to_part[chart as usize - 1])
}

pub fn part_name(part: u8) -> Result<&'static str, AtlasError> {
    if !(1..=NUM_PARTS as u8).contains(&part) {
        return Err(AtlasError::PartOutOfRange(part));
    }
    Ok(&chart_table().part_names[part as usize - 1])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn torso_charts_are_torso() {
        assert_eq!(part_name(part_of_chart(1).unwrap()).unwrap(), "Torso");
        assert_eq!(part_name(part_of_chart(2).unwrap()).unwrap(), "Torso");
    }

    #[test]
    fn out_of_range_chart() {
        assert!(matches!(part_of_chart(0), Err(AtlasError::ChartOutOfRange(0))));
        assert!(part_of_chart(25).is_err());
    }

    #[test]
    fn table_is_surjective() {
        let mut hit = [false; NUM_PARTS];
        for i in 1..=NUM_CHARTS as u8 {
            hit[part_of_chart(i).unwrap() as usize - 1] = true;
        }
        assert!(hit.iter().all(|&h| h));
    }
}
