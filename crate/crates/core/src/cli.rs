//! Batch command-line front end. The `corrgen` binary only parses arguments,
//! installs the Ctrl-C handler and calls [`run`].
//!
//! Exit codes: 0 success, 1 internal error, 2 usage, 3 config or validation,
//! 4 missing resource, 5 data or id mismatch, 130 interrupted. Errors are a
//! single JSON object on stderr; logs are line-delimited JSON on stderr, with
//! the level taken from `CORRGEN_LOG`.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::ops::Range;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::atlas::{load_atlas, AtlasError};
use crate::body::{load_body_model, load_raw_body_model, InvariantCheck, ModelError};
use crate::dataset::{
    coco_to_string, frame_files, frame_id, generate_frame, image_file_name, read_coco, sample_scene, CocoDataset,
    DatasetError, DenseAnnotation, ImageMeta, Resources, SceneConfig,
};
use crate::fsutil::{sha256_hex, write_atomic};
use crate::metrics::{evaluate, EvalReport, GeodesicOracle, MetricsConfig, MetricsError};
use crate::raster::{read_rgb_png, rgb8_to_png_bytes};
use crate::render::part_palette;
use crate::toy::{write_toy_resources, ToyResourceOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;
pub const EXIT_MISSING: i32 = 4;
pub const EXIT_DATA: i32 = 5;
pub const EXIT_INTERRUPTED: i32 = 130;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const ANNOTATIONS_FILE: &str = "annotations.json";
const MANIFEST_FORMAT: &str = "corrgen-manifest/1";

/// A failure with its exit code and a short machine-readable kind.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{kind}: {message}")]
pub struct CliError {
    pub code: i32,
    pub kind: &'static str,
    pub message: String,
}

impl CliError {
    pub fn new(code: i32, kind: &'static str, message: impl Into<String>) -> Self {
        CliError {
            code,
            kind,
            message: message.into(),
        }
    }

    pub fn to_json(&self) -> String {
        json!({"error": self.kind, "message": self.message, "exit_code": self.code}).to_string()
    }
}

fn is_not_found(e: &std::io::Error) -> bool {
    e.kind() == std::io::ErrorKind::NotFound
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match &e {
            ModelError::MissingFile(_) => CliError::new(EXIT_MISSING, "missing_resource", e.to_string()),
            ModelError::Io { source, .. } if is_not_found(source) => {
                CliError::new(EXIT_MISSING, "missing_resource", e.to_string())
            }
            _ => CliError::new(EXIT_CONFIG, "invalid_model", e.to_string()),
        }
    }
}

impl From<AtlasError> for CliError {
    fn from(e: AtlasError) -> Self {
        match &e {
            AtlasError::Io { source, .. } if is_not_found(source) => {
                CliError::new(EXIT_MISSING, "missing_resource", e.to_string())
            }
            _ => CliError::new(EXIT_CONFIG, "invalid_atlas", e.to_string()),
        }
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        let msg = e.to_string();
        match e {
            DatasetError::MissingResource(_) | DatasetError::EmptyResources(_) => {
                CliError::new(EXIT_MISSING, "missing_resource", msg)
            }
            DatasetError::Io { ref source, .. } if is_not_found(source) => {
                CliError::new(EXIT_MISSING, "missing_resource", msg)
            }
            DatasetError::Io { .. } => CliError::new(EXIT_INTERNAL, "io", msg),
            DatasetError::Config(_) => CliError::new(EXIT_CONFIG, "config", msg),
            DatasetError::Json { .. } => CliError::new(EXIT_CONFIG, "malformed_json", msg),
            DatasetError::Model(m) => m.into(),
            DatasetError::Atlas(a) => a.into(),
            DatasetError::Mocap(_) | DatasetError::Camera(_) => CliError::new(EXIT_CONFIG, "invalid_resource", msg),
            DatasetError::Raster(_) => CliError::new(EXIT_CONFIG, "invalid_resource", msg),
            DatasetError::RleLength { .. }
            | DatasetError::RleString(_)
            | DatasetError::DuplicateId { .. }
            | DatasetError::UnknownImage { .. }
            | DatasetError::Annotation { .. }
            | DatasetError::EmptyInstance => CliError::new(EXIT_DATA, "data", msg),
            _ => CliError::new(EXIT_INTERNAL, "internal", msg),
        }
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        match e {
            MetricsError::Dataset(d) => d.into(),
            MetricsError::Config(_) => CliError::new(EXIT_CONFIG, "config", e.to_string()),
            _ => CliError::new(EXIT_DATA, "id_mismatch", e.to_string()),
        }
    }
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    if is_not_found(&e) {
        CliError::new(EXIT_MISSING, "missing_resource", format!("{}: {e}", path.display()))
    } else {
        CliError::new(EXIT_INTERNAL, "io", format!("{}: {e}", path.display()))
    }
}

/// Parses `A..B` (end exclusive, non-empty).
pub fn parse_frame_range(s: &str) -> Result<Range<usize>, String> {
    let (a, b) = s.split_once("..").ok_or_else(|| format!("expected A..B, got {s:?}"))?;
    let a: usize = a.trim().parse().map_err(|_| format!("bad range start {a:?}"))?;
    let b: usize = b.trim().parse().map_err(|_| format!("bad range end {b:?}"))?;
    if a >= b {
        return Err(format!("frame range {a}..{b} is empty"));
    }
    Ok(a..b)
}

fn parse_workers(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(n) if n >= 1 => Ok(n),
        _ => Err(format!("worker count must be a positive integer, got {s:?}")),
    }
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

/// Options shared by `generate` and `preview`.
#[derive(Debug, Clone, PartialEq, Args)]
pub struct RunConfig {
    /// Scene config JSON.
    #[arg(long)]
    pub config: PathBuf,
    /// Output root.
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides the config's master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (default: available cores).
    #[arg(long, value_parser = parse_workers)]
    pub workers: Option<usize>,
    /// Frames `A..B`, end exclusive (default: all).
    #[arg(long, value_parser = parse_frame_range)]
    pub frames: Option<Range<usize>>,
    /// Disables occluders regardless of the config.
    #[arg(long)]
    pub no_occluders: bool,
    #[arg(long)]
    pub harmonize_lambda: Option<f64>,
    #[arg(long)]
    pub occlusion_aware_labels: Option<bool>,
    /// 2×2 supersampling of the RGB buffer.
    #[arg(long)]
    pub supersample: Option<bool>,
    /// Directory of externally rewritten frames (`NNNNNN.png`); each one
    /// found replaces the generated RGB image before packaging.
    #[arg(long)]
    pub post_rgb_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(config: impl Into<PathBuf>, out: impl Into<PathBuf>) -> Self {
        RunConfig {
            config: config.into(),
            out: out.into(),
            seed: None,
            workers: None,
            frames: None,
            no_occluders: false,
            harmonize_lambda: None,
            occlusion_aware_labels: None,
            supersample: None,
            post_rgb_dir: None,
        }
    }

    pub fn workers(&self) -> usize {
        self.workers.unwrap_or_else(default_workers)
    }

    /// Loads the scene config and applies command-line overrides.
    pub fn scene_config(&self) -> Result<SceneConfig, CliError> {
        let mut cfg = SceneConfig::load(&self.config)?;
        if let Some(s) = self.seed {
            cfg.master_seed = s;
        }
        if self.no_occluders {
            cfg.occlusion.enabled = false;
        }
        if let Some(l) = self.harmonize_lambda {
            cfg.harmonize_lambda = l;
        }
        if let Some(b) = self.occlusion_aware_labels {
            cfg.occlusion.occlusion_aware_labels = b;
        }
        if let Some(b) = self.supersample {
            cfg.render.supersample = b;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn frame_range(&self, cfg: &SceneConfig) -> Result<Range<usize>, CliError> {
        let r = self.frames.clone().unwrap_or(0..cfg.num_frames);
        if r.is_empty() || r.end > cfg.num_frames {
            return Err(CliError::new(
                EXIT_USAGE,
                "frame_range",
                format!("frames {}..{} not within 0..{}", r.start, r.end, cfg.num_frames),
            ));
        }
        Ok(r)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PostRgbEntry {
    pub generated: String,
    pub replaced: String,
}

/// Contents of `manifest.json`. Holds nothing run-specific beyond the
/// resolved config, so identical inputs give identical bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub complete: bool,
    pub config: SceneConfig,
    pub frames: [usize; 2],
    /// Skipped frame index → reason.
    pub skipped: BTreeMap<usize, String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub post_rgb: BTreeMap<String, PostRgbEntry>,
    /// Relative path → SHA-256.
    pub files: BTreeMap<String, String>,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Manifest, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::new(EXIT_DATA, "malformed_json", format!("{}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenerateSummary {
    pub out: PathBuf,
    pub frames: usize,
    pub annotations: usize,
    pub skipped: usize,
}

struct FrameMessage {
    index: usize,
    files: Vec<(String, Vec<u8>)>,
    annotation: Option<DenseAnnotation>,
    skip_reason: Option<String>,
    post_rgb: Option<PostRgbEntry>,
}

#[derive(Default)]
struct WriterState {
    files: BTreeMap<String, String>,
    annotations: Vec<DenseAnnotation>,
    skipped: BTreeMap<usize, String>,
    post_rgb: BTreeMap<String, PostRgbEntry>,
    frames_done: usize,
    error: Option<CliError>,
}

fn replace_rgb(dir: &Path, index: usize, files: &mut [(String, Vec<u8>)], dims: (usize, usize)) -> Result<Option<PostRgbEntry>, CliError> {
    let path = dir.join(format!("{index:06}.png"));
    if !path.exists() {
        return Ok(None);
    }
    let img = read_rgb_png(&path).map_err(|e| CliError::new(EXIT_DATA, "post_rgb", e.to_string()))?;
    if img.dims() != dims {
        return Err(CliError::new(
            EXIT_DATA,
            "post_rgb",
            format!("{} is {:?}, frame is {:?}", path.display(), img.dims(), dims),
        ));
    }
    let bytes = std::fs::read(&path).map_err(|e| io_error(&path, e))?;
    let entry = PostRgbEntry {
        generated: sha256_hex(&files[0].1),
        replaced: sha256_hex(&bytes),
    };
    files[0].1 = bytes;
    Ok(Some(entry))
}

fn write_manifest(out: &Path, manifest: &Manifest) -> Result<(), CliError> {
    let path = out.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    write_atomic(&path, text.as_bytes()).map_err(|e| io_error(&path, e))
}

/// Generates the dataset described by `run` under `run.out`.
///
/// Every resource is loaded and checked before anything is written. Frames
/// are rendered on a pool of `run.workers()` threads and handed to a single
/// writer. When `interrupt` becomes set, frames not yet started are dropped,
/// finished ones are still written, the manifest is marked incomplete and no
/// `annotations.json` is produced.
pub fn cmd_generate(run: &RunConfig, interrupt: &AtomicBool) -> Result<GenerateSummary, CliError> {
    let cfg = run.scene_config()?;
    let range = run.frame_range(&cfg)?;
    let res = Resources::load(&cfg)?;
    if let Some(d) = &run.post_rgb_dir {
        if !d.is_dir() {
            return Err(CliError::new(EXIT_MISSING, "missing_resource", format!("{} is not a directory", d.display())));
        }
    }
    let catalog = res.catalog();
    for sub in ["images", "labels"] {
        let p = run.out.join(sub);
        std::fs::create_dir_all(&p).map_err(|e| io_error(&p, e))?;
    }
    let workers = run.workers();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::new(EXIT_INTERNAL, "thread_pool", e.to_string()))?;
    log::info!(
        "generating frames {}..{} with {workers} worker(s) into {}",
        range.start,
        range.end,
        run.out.display()
    );

    let (tx, rx) = mpsc::sync_channel::<FrameMessage>(2 * workers);
    let out = run.out.clone();
    let (worker_result, state) = std::thread::scope(|s| {
        let writer = s.spawn(move || {
            let mut st = WriterState::default();
            for msg in rx {
                if st.error.is_some() {
                    continue;
                }
                for (name, bytes) in &msg.files {
                    let path = out.join(name);
                    if let Err(e) = std::fs::write(&path, bytes) {
                        st.error = Some(io_error(&path, e));
                        break;
                    }
                    st.files.insert(name.clone(), sha256_hex(bytes));
                }
                if let Some(p) = msg.post_rgb {
                    st.post_rgb.insert(image_file_name(msg.index), p);
                }
                match (msg.annotation, msg.skip_reason) {
                    (Some(a), _) => st.annotations.push(a),
                    (None, reason) => {
                        let reason = reason.unwrap_or_else(|| "skipped".into());
                        log::info!("frame {} skipped: {reason}", msg.index);
                        st.skipped.insert(msg.index, reason);
                    }
                }
                st.frames_done += 1;
            }
            st
        });
        let result = pool.install(|| {
            range.clone().into_par_iter().try_for_each_with(tx, |tx, i| -> Result<(), CliError> {
                if interrupt.load(Ordering::SeqCst) {
                    return Ok(());
                }
                let spec = sample_scene(&cfg, &catalog, i)?;
                let frame = generate_frame(&cfg, &res, &spec)?;
                let mut files = frame_files(&frame);
                let post_rgb = match &run.post_rgb_dir {
                    Some(d) => replace_rgb(d, i, &mut files, frame.image.dims())?,
                    None => None,
                };
                log::debug!("frame {i} rendered");
                tx.send(FrameMessage {
                    index: i,
                    files,
                    annotation: frame.annotation,
                    skip_reason: frame.skip_reason,
                    post_rgb,
                })
                .map_err(|_| CliError::new(EXIT_INTERNAL, "writer", "writer thread stopped"))
            })
        });
        (result, writer.join().expect("writer thread panicked"))
    });
    worker_result?;
    if let Some(e) = state.error {
        return Err(e);
    }

    let mut manifest = Manifest {
        format: MANIFEST_FORMAT.into(),
        complete: false,
        config: cfg.clone(),
        frames: [range.start, range.end],
        skipped: state.skipped,
        post_rgb: state.post_rgb,
        files: state.files,
    };
    if interrupt.load(Ordering::SeqCst) || state.frames_done < range.len() {
        write_manifest(&run.out, &manifest)?;
        return Err(CliError::new(
            EXIT_INTERRUPTED,
            "interrupted",
            format!("stopped after {} of {} frames; manifest marked incomplete", state.frames_done, range.len()),
        ));
    }

    let first = &res.backgrounds[0];
    let (w, h) = res.rig.cameras.first().map(|c| (c.width, c.height)).unwrap_or(first.dims());
    let dataset = CocoDataset {
        images: range
            .clone()
            .map(|i| ImageMeta {
                id: frame_id(i),
                file_name: image_file_name(i),
                width: w,
                height: h,
            })
            .collect(),
        annotations: state.annotations,
        keypoint_names: res.keypoint_names.clone(),
        skeleton: res.skeleton(),
    };
    let text = coco_to_string(&dataset)?;
    let ann_path = run.out.join(ANNOTATIONS_FILE);
    write_atomic(&ann_path, text.as_bytes()).map_err(|e| io_error(&ann_path, e))?;
    manifest.files.insert(ANNOTATIONS_FILE.into(), sha256_hex(text.as_bytes()));
    manifest.complete = true;
    write_manifest(&run.out, &manifest)?;
    let summary = GenerateSummary {
        out: run.out.clone(),
        frames: range.len(),
        annotations: dataset.annotations.len(),
        skipped: manifest.skipped.len(),
    };
    log::info!(
        "wrote {} annotations for {} frames ({} skipped)",
        summary.annotations,
        summary.frames,
        summary.skipped
    );
    Ok(summary)
}

/// Files whose bytes no longer match the manifest, with the reason.
pub fn cmd_verify(out: &Path) -> Result<Vec<(String, String)>, CliError> {
    let manifest = Manifest::load(&out.join(MANIFEST_FILE))?;
    let mut drift = Vec::new();
    for (name, expected) in &manifest.files {
        match std::fs::read(out.join(name)) {
            Ok(bytes) if &sha256_hex(&bytes) == expected => {}
            Ok(_) => drift.push((name.clone(), "checksum differs".to_string())),
            Err(e) => drift.push((name.clone(), e.to_string())),
        }
    }
    if !manifest.complete {
        drift.push((MANIFEST_FILE.into(), "run did not complete".into()));
    }
    Ok(drift)
}

/// Blends the part palette at 50% over foreground pixels and marks each
/// dense point with a color encoding its `(U, V)`. Background pixels keep the
/// frame's RGB exactly.
pub fn preview_image(
    rgb: &crate::raster::RgbImage,
    part_seg: &crate::raster::Raster<u8>,
    annotation: Option<&DenseAnnotation>,
) -> Vec<[u8; 3]> {
    let palette = part_palette();
    let q = |x: f32| (x.clamp(0.0, 1.0) * 255.0).round() as u8;
    let mut px: Vec<[u8; 3]> = rgb
        .data()
        .iter()
        .zip(part_seg.data())
        .map(|(c, &p)| {
            if p == 0 {
                [q(c[0]), q(c[1]), q(c[2])]
            } else {
                let pc = palette[p as usize];
                [0, 1, 2].map(|k| ((q(c[k]) as u16 + pc[k] as u16 + 1) / 2) as u8)
            }
        })
        .collect();
    if let Some(a) = annotation {
        let w = rgb.width();
        for p in &a.points {
            let (x, y) = a.box_to_pixel(p.x, p.y);
            if part_seg.contains(x, y) && *part_seg.get(x as usize, y as usize) > 0 {
                px[y as usize * w + x as usize] = [255, q(p.u as f32), q(p.v as f32)];
            }
        }
    }
    px
}

/// Renders one frame and writes its annotated preview PNG (default
/// `<out>/preview_NNNNNN.png`). Nothing else is written.
pub fn cmd_preview(run: &RunConfig, frame_index: usize, output: Option<&Path>) -> Result<PathBuf, CliError> {
    let cfg = run.scene_config()?;
    if frame_index >= cfg.num_frames {
        return Err(CliError::new(
            EXIT_USAGE,
            "frame_range",
            format!("frame {frame_index} outside 0..{}", cfg.num_frames),
        ));
    }
    let res = Resources::load(&cfg)?;
    let spec = sample_scene(&cfg, &res.catalog(), frame_index)?;
    let frame = generate_frame(&cfg, &res, &spec)?;
    let px = preview_image(&frame.image, &frame.buffers.part_seg, frame.annotation.as_ref());
    let bytes = rgb8_to_png_bytes(frame.image.width(), frame.image.height(), &px);
    let path = match output {
        Some(p) => p.to_path_buf(),
        None => run.out.join(format!("preview_{frame_index:06}.png")),
    };
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| io_error(parent, e))?;
    }
    write_atomic(&path, &bytes).map_err(|e| io_error(&path, e))?;
    Ok(path)
}

/// Inputs of `evaluate`: the mesh comes from `--model`/`--atlas` or from the
/// scene config.
#[derive(Debug, Clone, PartialEq, Args)]
pub struct EvaluateArgs {
    /// Ground-truth annotations.json.
    #[arg(long)]
    pub gt: PathBuf,
    /// Predictions in the same format; a missing score counts as 1.0.
    #[arg(long)]
    pub pred: PathBuf,
    /// Scene config naming the model and atlas.
    #[arg(long, required_unless_present_all = ["model", "atlas"])]
    pub config: Option<PathBuf>,
    #[arg(long, requires = "atlas")]
    pub model: Option<PathBuf>,
    #[arg(long, requires = "model")]
    pub atlas: Option<PathBuf>,
    /// Directory for report.json and report.txt.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub kappa: Option<f64>,
    #[arg(long)]
    pub min_score: Option<f64>,
}

pub fn cmd_evaluate(args: &EvaluateArgs) -> Result<EvalReport, CliError> {
    let (model_dir, atlas_dir) = match (&args.model, &args.atlas, &args.config) {
        (Some(m), Some(a), _) => (m.clone(), a.clone()),
        (_, _, Some(c)) => {
            let cfg = SceneConfig::load(c)?;
            (cfg.model, cfg.atlas)
        }
        _ => return Err(CliError::new(EXIT_USAGE, "usage", "need --config or --model with --atlas")),
    };
    let mut mc = MetricsConfig::default();
    if let Some(k) = args.kappa {
        mc.kappa = k;
    }
    if let Some(s) = args.min_score {
        mc.min_score = s;
    }
    mc.validate()?;
    let model = load_body_model(&model_dir)?;
    let atlas = load_atlas(&atlas_dir, model.faces(), model.num_vertices())?;
    let gt = read_coco(&args.gt)?;
    let pred = read_coco(&args.pred)?;
    let geo = GeodesicOracle::new(model.template(), model.faces(), mc.geodesic_cache_size);
    let report = evaluate(&gt, &pred, &atlas, &geo, &mc)?;
    if let Some(dir) = &args.out {
        std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
        let j = dir.join("report.json");
        let text = serde_json::to_string_pretty(&report).expect("report serializes");
        write_atomic(&j, text.as_bytes()).map_err(|e| io_error(&j, e))?;
        let t = dir.join("report.txt");
        write_atomic(&t, report.to_table().as_bytes()).map_err(|e| io_error(&t, e))?;
    }
    Ok(report)
}

/// Every model load-time invariant plus atlas coverage checks. Problems are
/// reported as failed checks, not errors.
pub fn cmd_validate_model(model_dir: &Path, atlas_dir: &Path) -> Vec<InvariantCheck> {
    let raw = match load_raw_body_model(model_dir) {
        Ok(r) => r,
        Err(e) => return vec![InvariantCheck::from_result("model_readable", Err(e))],
    };
    let mut checks = vec![InvariantCheck::from_result::<ModelError>("model_readable", Ok(()))];
    checks.extend(raw.checks());
    let atlas = match load_atlas(atlas_dir, &raw.faces, raw.template.len()) {
        Ok(a) => a,
        Err(e) => {
            checks.push(InvariantCheck::from_result("atlas_coverage", Err(e)));
            return checks;
        }
    };
    checks.push(InvariantCheck::from_result::<AtlasError>("atlas_coverage", Ok(())));
    let mut used = vec![false; raw.template.len()];
    for f in &raw.faces {
        for &v in f {
            if let Some(u) = used.get_mut(v as usize) {
                *u = true;
            }
        }
    }
    let unlabeled = used.iter().enumerate().find(|&(v, &u)| u && atlas.vertex_iuv(v).is_none());
    checks.push(InvariantCheck::from_result(
        "atlas_vertex_labels",
        match unlabeled {
            Some((v, _)) => Err(format!("vertex {v} has no IUV")),
            None => Ok(()),
        },
    ));
    let mismatch = (0..raw.template.len()).find_map(|v| {
        let s = atlas.vertex_iuv(v)?;
        match atlas.iuv_to_vertex(&s) {
            Ok(back) if back as usize == v => None,
            Ok(back) => Some(format!("vertex {v} maps back to {back}")),
            Err(e) => Some(format!("vertex {v}: {e}")),
        }
    });
    checks.push(InvariantCheck::from_result(
        "atlas_round_trip",
        match mismatch {
            Some(m) => Err(m),
            None => Ok(()),
        },
    ));
    checks
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct ToyArgs {
    /// Directory to write the toy resources and config.json into.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, default_value_t = 50)]
    pub frames: usize,
    #[arg(long, default_value_t = 320)]
    pub width: usize,
    #[arg(long, default_value_t = 240)]
    pub height: usize,
}

#[derive(Debug, Parser)]
#[command(name = "corrgen", version, about = "Synthetic dense-correspondence data generation and evaluation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render a dataset: images, IUV and part labels, annotations.json, manifest.json.
    Generate(RunConfig),
    /// Write an annotated preview PNG for one frame.
    Preview {
        #[command(flatten)]
        run: RunConfig,
        /// Frame to preview.
        #[arg(long)]
        frame: usize,
        /// Output PNG path.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Score predictions against ground truth.
    Evaluate(EvaluateArgs),
    /// Check a model container and its atlas.
    ValidateModel {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        atlas: PathBuf,
    },
    /// Re-hash a generated dataset against its manifest.
    Verify {
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the procedural toy-biped resources and a scene config.
    Toy(ToyArgs),
}

/// Line-delimited JSON logger on stderr.
struct JsonLogger;

static LOGGER: JsonLogger = JsonLogger;

impl log::Log for JsonLogger {
    fn enabled(&self, metadata: &log::Metadata) -> bool {
        metadata.level() <= log::max_level()
    }

    fn log(&self, record: &log::Record) {
        if !self.enabled(record.metadata()) {
            return;
        }
        let ts = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis()).unwrap_or(0);
        let line = json!({
            "ts_ms": ts as u64,
            "level": record.level().as_str(),
            "target": record.target(),
            "msg": record.args().to_string(),
        });
        let _ = writeln!(std::io::stderr().lock(), "{line}");
    }

    fn flush(&self) {}
}

/// Installs the JSON logger; the level comes from `CORRGEN_LOG` (default `info`).
/// Calling it more than once is harmless.
pub fn init_logging() {
    let level = std::env::var("CORRGEN_LOG")
        .ok()
        .and_then(|s| s.parse::<log::LevelFilter>().ok())
        .unwrap_or(log::LevelFilter::Info);
    if log::set_logger(&LOGGER).is_ok() {
        log::set_max_level(level);
    }
}

fn print_json<T: Serialize>(value: &T) {
    println!("{}", serde_json::to_string(value).expect("serializable"));
}

fn dispatch(cli: Cli, interrupt: &AtomicBool) -> Result<i32, CliError> {
    match cli.command {
        Command::Generate(run) => {
            let summary = cmd_generate(&run, interrupt)?;
            print_json(&summary);
        }
        Command::Preview { run, frame, output } => {
            let path = cmd_preview(&run, frame, output.as_deref())?;
            print_json(&json!({"preview": path}));
        }
        Command::Evaluate(args) => {
            let report = cmd_evaluate(&args)?;
            print!("{}", report.to_table());
        }
        Command::ValidateModel { model, atlas } => {
            let checks = cmd_validate_model(&model, &atlas);
            for c in &checks {
                if c.passed {
                    println!("PASS {}", c.name);
                } else {
                    println!("FAIL {}: {}", c.name, c.detail);
                }
            }
            if checks.iter().any(|c| !c.passed) {
                return Ok(EXIT_CONFIG);
            }
        }
        Command::Verify { out } => {
            let drift = cmd_verify(&out)?;
            for (name, why) in &drift {
                println!("DRIFT {name}: {why}");
            }
            if !drift.is_empty() {
                return Ok(EXIT_DATA);
            }
            println!("ok");
        }
        Command::Toy(a) => {
            let opts = ToyResourceOptions {
                seed: a.seed,
                num_frames: a.frames,
                width: a.width,
                height: a.height,
                ..Default::default()
            };
            let path = write_toy_resources(&a.out, &opts)?;
            print_json(&json!({"config": path}));
        }
    }
    Ok(EXIT_OK)
}

/// Parses `args` (including the program name), runs the command and returns
/// the exit code. Errors are printed to stderr as JSON.
pub fn run<I, T>(args: I, interrupt: &AtomicBool) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            if !e.use_stderr() {
                let _ = e.print();
                return EXIT_OK;
            }
            let err = CliError::new(EXIT_USAGE, "usage", e.render().to_string().trim().to_string());
            eprintln!("{}", err.to_json());
            return EXIT_USAGE;
        }
    };
    match dispatch(cli, interrupt) {
        Ok(code) => code,
        Err(e) => {
            log::error!("{e}");
            eprintln!("{}", e.to_json());
            e.code
        }
    }
}
