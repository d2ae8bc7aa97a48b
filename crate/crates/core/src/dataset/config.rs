//! Scene configuration: one JSON file naming resources and sampling ranges.
//!
//! Relative resource paths are resolved against the directory holding the
//! config file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::annotation::DEFAULT_POINTS_PER_INSTANCE;
use super::DatasetError;
use crate::camera::{CameraModel, CameraRig, NoiseModel, RigSampling};
use crate::compositor::{PlacementRanges, DEFAULT_HARMONIZE_LAMBDA};
use crate::render::RenderSettings;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClipSource {
    pub bvh: PathBuf,
    pub retarget: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum RigConfig {
    /// Drawn once per dataset from the master seed.
    Sampled(RigSampling),
    Explicit {
        cameras: Vec<CameraModel>,
        /// One per camera; empty means noiseless.
        #[serde(default)]
        noise: Vec<NoiseModel>,
    },
}

impl RigConfig {
    pub fn build(&self, rng: &mut impl rand::Rng) -> Result<CameraRig, DatasetError> {
        Ok(match self {
            RigConfig::Sampled(s) => s.sample(rng)?,
            RigConfig::Explicit { cameras, noise } => {
                let noise = if noise.is_empty() {
                    vec![NoiseModel::none(); cameras.len()]
                } else {
                    noise.clone()
                };
                CameraRig::new(cameras.clone(), noise)?
            }
        })
    }
}

/// Per-frame subject randomisation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SubjectSampling {
    /// Standard deviation of each shape coefficient.
    pub shape_sigma: f64,
    /// Coefficients are clamped to `±shape_clamp`.
    pub shape_clamp: f64,
    /// Heading about the vertical axis.
    pub yaw_range_deg: [f64; 2],
    /// Ground-plane offset of the root, in meters.
    pub offset_x: [f64; 2],
    pub offset_z: [f64; 2],
}

impl Default for SubjectSampling {
    fn default() -> Self {
        SubjectSampling {
            shape_sigma: 1.0,
            shape_clamp: 3.0,
            yaw_range_deg: [-180.0, 180.0],
            offset_x: [-0.15, 0.15],
            offset_z: [-0.15, 0.15],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OcclusionConfig {
    pub enabled: bool,
    /// Chance that a frame gets any occluder.
    pub probability: f64,
    pub max_per_frame: usize,
    pub placement: PlacementRanges,
    /// Feather band in sprite pixels; default `max(2, 3% of the sprite's larger side)`.
    pub band_px: Option<f64>,
    /// Feather sigma; default half the band.
    pub sigma_px: Option<f64>,
    /// Alpha above which a pixel counts as occluded for labels.
    pub threshold: f64,
    /// Drop labels under occluders; when false labels ignore occluders.
    pub occlusion_aware_labels: bool,
}

impl Default for OcclusionConfig {
    fn default() -> Self {
        OcclusionConfig {
            enabled: true,
            probability: 1.0,
            max_per_frame: 1,
            placement: PlacementRanges::default(),
            band_px: None,
            sigma_px: None,
            threshold: 0.5,
            occlusion_aware_labels: true,
        }
    }
}

fn default_true() -> bool {
    true
}

fn default_lambda() -> f64 {
    DEFAULT_HARMONIZE_LAMBDA
}

fn default_points() -> usize {
    DEFAULT_POINTS_PER_INSTANCE
}

fn default_min_in_frame() -> f64 {
    0.05
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneConfig {
    pub master_seed: u64,
    pub num_frames: usize,
    /// Body model container directory.
    pub model: PathBuf,
    /// Atlas directory for the model's topology.
    pub atlas: PathBuf,
    /// Directory of background PNGs.
    pub backgrounds: PathBuf,
    /// Directory of chart-packed texture PNGs, all the same size.
    pub textures: PathBuf,
    /// Directory of RGBA occluder PNGs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub occluders: Option<PathBuf>,
    pub clips: Vec<ClipSource>,
    /// Wrap clip time so the last frame blends back into the first.
    #[serde(default = "default_true")]
    pub loop_clips: bool,
    pub rig: RigConfig,
    #[serde(default)]
    pub subject: SubjectSampling,
    #[serde(default)]
    pub occlusion: OcclusionConfig,
    #[serde(default = "default_lambda")]
    pub harmonize_lambda: f64,
    #[serde(default)]
    pub render: RenderSettings,
    #[serde(default = "default_points")]
    pub points_per_instance: usize,
    /// Instances with a smaller fraction of vertices projecting inside the
    /// image are skipped as cropped.
    #[serde(default = "default_min_in_frame")]
    pub min_in_frame_fraction: f64,
    /// Keypoint names written to the COCO category, one per model joint.
    #[serde(default)]
    pub keypoint_names: Vec<String>,
}

impl SceneConfig {
    pub fn from_json(text: &str) -> Result<SceneConfig, DatasetError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: SceneConfig = serde_path_to_error::deserialize(de).map_err(|e| DatasetError::Json {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads, validates, and resolves resource paths against the file's directory.
    pub fn load(path: &Path) -> Result<SceneConfig, DatasetError> {
        let text = std::fs::read_to_string(path).map_err(|source| {
            if source.kind() == std::io::ErrorKind::NotFound {
                DatasetError::MissingResource(path.to_path_buf())
            } else {
                DatasetError::Io {
                    path: path.to_path_buf(),
                    source,
                }
            }
        })?;
        let mut cfg = SceneConfig::from_json(&text).map_err(|e| match e {
            DatasetError::Json { path: key, message } => DatasetError::Json {
                path: format!("{}: {key}", path.display()),
                message,
            },
            other => other,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.model);
        fix(&mut self.atlas);
        fix(&mut self.backgrounds);
        fix(&mut self.textures);
        if let Some(o) = &mut self.occluders {
            fix(o);
        }
        for c in &mut self.clips {
            fix(&mut c.bvh);
            fix(&mut c.retarget);
        }
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        let err = |m: &str| Err(DatasetError::Config(m.to_string()));
        if self.num_frames == 0 {
            return err("num_frames must be at least 1");
        }
        if self.clips.is_empty() {
            return err("at least one clip is required");
        }
        if !(0.0..=1.0).contains(&self.harmonize_lambda) {
            return err("harmonize_lambda must lie in [0, 1]");
        }
        let o = &self.occlusion;
        if !(0.0..=1.0).contains(&o.probability) {
            return err("occlusion.probability must lie in [0, 1]");
        }
        if o.enabled && o.max_per_frame == 0 {
            return err("occlusion.max_per_frame must be at least 1");
        }
        if o.band_px.is_some_and(|b| b < 1.0) || o.sigma_px.is_some_and(|s| s <= 0.0) {
            return err("occlusion band must be >= 1 px and sigma > 0");
        }
        let p = &o.placement;
        if !(p.size_fraction[0] > 0.0 && p.size_fraction[0] <= p.size_fraction[1]) {
            return err("occlusion.placement.size_fraction must be an increasing positive range");
        }
        if self.subject.shape_sigma < 0.0 || self.subject.shape_clamp <= 0.0 {
            return err("subject.shape_sigma must be >= 0 and shape_clamp > 0");
        }
        if !(0.0..=1.0).contains(&self.min_in_frame_fraction) {
            return err("min_in_frame_fraction must lie in [0, 1]");
        }
        Ok(())
    }

    /// Whether frames may receive occluders.
    pub fn occluders_active(&self) -> bool {
        self.occlusion.enabled && self.occlusion.probability > 0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "master_seed": 1, "num_frames": 2, "model": "m", "atlas": "a",
        "backgrounds": "b", "textures": "t",
        "clips": [{"bvh": "walk.bvh", "retarget": "walk.json"}],
        "rig": {"sampled": {"num_cameras": 3}}
    }"#;

    #[test]
    fn defaults_fill_in() {
        let c = SceneConfig::from_json(MINIMAL).unwrap();
        assert!(c.loop_clips);
        assert_eq!(c.points_per_instance, 196);
        assert_eq!(c.harmonize_lambda, 0.5);
        assert!(c.occlusion.occlusion_aware_labels);
        match &c.rig {
            RigConfig::Sampled(s) => assert_eq!((s.num_cameras, s.width), (3, 640)),
            _ => panic!("expected sampled rig"),
        }
    }

    #[test]
    fn bad_values_rejected() {
        let text = MINIMAL.replace("\"num_frames\": 2", "\"num_frames\": 0");
        assert!(matches!(SceneConfig::from_json(&text), Err(DatasetError::Config(_))));
        let text = MINIMAL.replace("\"num_frames\": 2", "\"num_frames\": \"two\"");
        match SceneConfig::from_json(&text) {
            Err(DatasetError::Json { path, .. }) => assert_eq!(path, "num_frames"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn relative_paths_follow_config_dir() {
        let mut c = SceneConfig::from_json(MINIMAL).unwrap();
        c.resolve_paths(Path::new("/data/toy"));
        assert_eq!(c.model, PathBuf::from("/data/toy/m"));
        assert_eq!(c.clips[0].bvh, PathBuf::from("/data/toy/walk.bvh"));
    }
}
