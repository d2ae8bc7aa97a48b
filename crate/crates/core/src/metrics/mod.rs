//! Dense-pose evaluation: geodesic point similarity (GPS), GPSm, mask and box
//! IoU, and COCO-style AP/AR over a set of match thresholds.

mod ap;
mod geodesic_cache;

pub use ap::{average_precision, match_detections, PrecisionRecall};
pub use geodesic_cache::GeodesicOracle;

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::atlas::{IuvSample, UvAtlas};
use crate::dataset::{CocoDataset, DatasetError, DenseAnnotation, RleMask};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("GPS needs at least one ground-truth point")]
    EmptyGroundTruth,
    #[error("prediction {annotation} refers to image {image}, which is not in the ground truth")]
    UnknownImage { annotation: u64, image: u64 },
    #[error("prediction image {0} is not in the ground truth")]
    UnknownImageEntry(u64),
    #[error("masks differ in size: {a:?} vs {b:?}")]
    MaskSize { a: (usize, usize), b: (usize, usize) },
    #[error("ground-truth annotation {id}: {message}")]
    InvalidGroundTruth { id: u64, message: String },
    #[error("invalid metrics config: {0}")]
    Config(String),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

/// Geodesic kernel bandwidth of the established dense-pose protocol.
pub const DEFAULT_KAPPA: f64 = 0.255;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsConfig {
    /// Geodesic bandwidth in mesh units.
    pub kappa: f64,
    /// Strictly increasing, in `(0, 1]`.
    pub iou_thresholds: Vec<f64>,
    /// Detections scoring below this are ignored.
    pub min_score: f64,
    /// Geodesic rows kept in the LRU cache.
    pub geodesic_cache_size: usize,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        MetricsConfig {
            kappa: DEFAULT_KAPPA,
            iou_thresholds: (0..10).map(|i| (50 + 5 * i) as f64 / 100.0).collect(),
            min_score: 0.0,
            geodesic_cache_size: 4096,
        }
    }
}

impl MetricsConfig {
    pub fn validate(&self) -> Result<(), MetricsError> {
        if !(self.kappa > 0.0) {
            return Err(MetricsError::Config("kappa must be positive".into()));
        }
        let t = &self.iou_thresholds;
        if t.is_empty() || t.iter().any(|&x| !(x > 0.0 && x <= 1.0)) || t.windows(2).any(|w| w[1] <= w[0]) {
            return Err(MetricsError::Config(
                "thresholds must be non-empty, strictly increasing and in (0, 1]".into(),
            ));
        }
        Ok(())
    }
}

/// GPS of one instance: the mean over ground-truth points of
/// `exp(-g² / (2κ²))`, `g` being the geodesic distance between the vertices
/// the true and predicted IUVs map to. Missing or background predictions
/// contribute 0.
pub fn gps_instance(
    gt: &[IuvSample],
    predicted: &[Option<IuvSample>],
    atlas: &UvAtlas,
    geodesics: &GeodesicOracle,
    kappa: f64,
) -> Result<f64, MetricsError> {
    if gt.is_empty() {
        return Err(MetricsError::EmptyGroundTruth);
    }
    let mut sum = 0.0;
    for (i, g) in gt.iter().enumerate() {
        let Some(p) = predicted.get(i).copied().flatten().filter(|p| !p.is_background()) else {
            continue;
        };
        let (Ok(vg), Ok(vp)) = (atlas.iuv_to_vertex(g), atlas.iuv_to_vertex(&p)) else {
            continue;
        };
        let d = geodesics.distance(vg, vp);
        sum += (-d * d / (2.0 * kappa * kappa)).exp();
    }
    Ok(sum / gt.len() as f64)
}

/// `√(gps · IoU)`; `None` when both masks are empty.
pub fn gpsm_instance(gps: f64, gt_mask: &RleMask, pred_mask: &RleMask) -> Result<Option<f64>, MetricsError> {
    if gt_mask.area() == 0 && pred_mask.area() == 0 {
        return Ok(None);
    }
    Ok(Some((gps * mask_iou(gt_mask, pred_mask)?).sqrt()))
}

/// Set-pixel count of `a ∧ b`, walking both run lists.
fn intersection(a: &RleMask, b: &RleMask) -> u64 {
    let (mut ia, mut ib) = (0usize, 0usize);
    let (mut ra, mut rb) = (a.counts.first().copied().unwrap_or(0) as u64, b.counts.first().copied().unwrap_or(0) as u64);
    let mut total = 0u64;
    while ia < a.counts.len() && ib < b.counts.len() {
        let step = ra.min(rb);
        if ia % 2 == 1 && ib % 2 == 1 {
            total += step;
        }
        ra -= step;
        rb -= step;
        while ra == 0 && ia < a.counts.len() {
            ia += 1;
            ra = a.counts.get(ia).copied().unwrap_or(0) as u64;
        }
        while rb == 0 && ib < b.counts.len() {
            ib += 1;
            rb = b.counts.get(ib).copied().unwrap_or(0) as u64;
        }
    }
    total
}

/// `|a ∧ b| / |a ∨ b|`, defined as 1 when both are empty.
pub fn mask_iou(a: &RleMask, b: &RleMask) -> Result<f64, MetricsError> {
    if (a.width, a.height) != (b.width, b.height) {
        return Err(MetricsError::MaskSize {
            a: (a.width, a.height),
            b: (b.width, b.height),
        });
    }
    let inter = intersection(a, b);
    let union = a.area() + b.area() - inter;
    Ok(if union == 0 { 1.0 } else { inter as f64 / union as f64 })
}

/// IoU of two `[x, y, w, h]` boxes.
pub fn bbox_iou(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    let iw = ((a[0] + a[2]).min(b[0] + b[2]) - a[0].max(b[0])).max(0.0);
    let ih = ((a[1] + a[3]).min(b[1] + b[3]) - a[1].max(b[1])).max(0.0);
    let inter = iw * ih;
    let union = a[2] * a[3] + b[2] * b[3] - inter;
    if union <= 0.0 {
        0.0
    } else {
        inter / union
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Bbox,
    Gps,
    Gpsm,
    Segm,
}

impl Task {
    pub const ALL: [Task; 4] = [Task::Bbox, Task::Gps, Task::Gpsm, Task::Segm];

    pub fn label(&self) -> &'static str {
        match self {
            Task::Bbox => "bbox",
            Task::Gps => "GPS",
            Task::Gpsm => "GPSm",
            Task::Segm => "Segm",
        }
    }
}

/// Scores ×100 for one task.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaskScores {
    pub ap: f64,
    pub ap50: f64,
    pub ap75: f64,
    pub ar: f64,
    pub ar50: f64,
    pub ar75: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub bbox: TaskScores,
    pub gps: TaskScores,
    pub gpsm: TaskScores,
    pub segm: TaskScores,
    pub num_images: usize,
    pub num_ground_truth: usize,
    pub num_detections: usize,
    /// GPSm pairs left unmatched because both masks were empty.
    pub gpsm_excluded: usize,
    pub kappa: f64,
}

impl EvalReport {
    pub fn task(&self, t: Task) -> &TaskScores {
        match t {
            Task::Bbox => &self.bbox,
            Task::Gps => &self.gps,
            Task::Gpsm => &self.gpsm,
            Task::Segm => &self.segm,
        }
    }

    pub fn to_table(&self) -> String {
        let mut out = format!(
            "{:<6}{:>8}{:>8}{:>8}{:>8}{:>8}{:>8}\n",
            "task", "AP", "AP50", "AP75", "AR", "AR50", "AR75"
        );
        for t in Task::ALL {
            let s = self.task(t);
            out.push_str(&format!(
                "{:<6}{:>8.2}{:>8.2}{:>8.2}{:>8.2}{:>8.2}{:>8.2}\n",
                t.label(),
                s.ap,
                s.ap50,
                s.ap75,
                s.ar,
                s.ar50,
                s.ar75
            ));
        }
        out
    }
}

/// Match quality of every (detection, ground truth) pair of one image, per task.
struct ImageQualities {
    /// Detection scores, in evaluation order.
    scores: Vec<f64>,
    num_gt: usize,
    /// `q[task][d][g]`; `None` means the pair can never match.
    q: [Vec<Vec<Option<f64>>>; 4],
    gpsm_excluded: usize,
}

fn predicted_lookup(det: &DenseAnnotation) -> HashMap<(i64, i64), IuvSample> {
    det.points
        .iter()
        .map(|p| {
            (
                det.box_to_pixel(p.x, p.y),
                IuvSample {
                    chart: p.chart,
                    u: p.u,
                    v: p.v,
                },
            )
        })
        .collect()
}

fn image_qualities(
    gts: &[&DenseAnnotation],
    dets: &[&DenseAnnotation],
    atlas: &UvAtlas,
    geodesics: &GeodesicOracle,
    kappa: f64,
) -> Result<ImageQualities, MetricsError> {
    let mut q: [Vec<Vec<Option<f64>>>; 4] = Default::default();
    let mut gpsm_excluded = 0;
    for det in dets {
        let lookup = predicted_lookup(det);
        let mut rows: [Vec<Option<f64>>; 4] = Default::default();
        for gt in gts {
            rows[0].push(Some(bbox_iou(&gt.bbox, &det.bbox)));
            let gps = if gt.points.is_empty() {
                0.0
            } else {
                let truth: Vec<IuvSample> = gt
                    .points
                    .iter()
                    .map(|p| IuvSample {
                        chart: p.chart,
                        u: p.u,
                        v: p.v,
                    })
                    .collect();
                let pred: Vec<Option<IuvSample>> = gt
                    .points
                    .iter()
                    .map(|p| lookup.get(&gt.box_to_pixel(p.x, p.y)).copied())
                    .collect();
                gps_instance(&truth, &pred, atlas, geodesics, kappa)?
            };
            rows[1].push(Some(gps));
            let gpsm = gpsm_instance(gps, &gt.fg_rle, &det.fg_rle)?;
            if gpsm.is_none() {
                gpsm_excluded += 1;
                log::warn!("GPSm undefined for gt {} / det {}: both masks empty", gt.id, det.id);
            }
            rows[2].push(gpsm);
            rows[3].push(Some(mask_iou(&gt.fg_rle, &det.fg_rle)?));
        }
        for (t, r) in rows.into_iter().enumerate() {
            q[t].push(r);
        }
    }
    Ok(ImageQualities {
        scores: dets.iter().map(|d| d.score.unwrap_or(1.0)).collect(),
        num_gt: gts.len(),
        q,
        gpsm_excluded,
    })
}

fn check_ids(gt: &CocoDataset, pred: &CocoDataset) -> Result<(), MetricsError> {
    for img in &pred.images {
        if gt.image(img.id).is_none() {
            return Err(MetricsError::UnknownImageEntry(img.id));
        }
    }
    let ids: std::collections::HashSet<u64> = gt.images.iter().map(|i| i.id).collect();
    for a in &pred.annotations {
        if !ids.contains(&a.image_id) {
            return Err(MetricsError::UnknownImage {
                annotation: a.id,
                image: a.image_id,
            });
        }
    }
    Ok(())
}

/// Scores predictions against ground truth on the four tasks.
///
/// Detections without a score count as 1.0. Per image, detections are
/// matched greedily by descending score (ties by id) to the unmatched ground
/// truth of highest quality at or above each threshold (ties to the lower
/// ground-truth id).
pub fn evaluate(
    gt: &CocoDataset,
    pred: &CocoDataset,
    atlas: &UvAtlas,
    geodesics: &GeodesicOracle,
    config: &MetricsConfig,
) -> Result<EvalReport, MetricsError> {
    config.validate()?;
    check_ids(gt, pred)?;
    let mut image_ids: Vec<u64> = gt.images.iter().map(|i| i.id).collect();
    image_ids.sort_unstable();
    for a in &gt.annotations {
        if a.points.iter().any(|p| atlas.iuv_to_vertex(&IuvSample { chart: p.chart, u: p.u, v: p.v }).is_err()) {
            return Err(MetricsError::InvalidGroundTruth {
                id: a.id,
                message: "dense point does not resolve to a surface vertex".into(),
            });
        }
    }
    let per_image: Vec<ImageQualities> = image_ids
        .par_iter()
        .map(|&img| {
            let mut gts: Vec<&DenseAnnotation> = gt.annotations.iter().filter(|a| a.image_id == img).collect();
            gts.sort_by_key(|a| a.id);
            let mut dets: Vec<&DenseAnnotation> = pred
                .annotations
                .iter()
                .filter(|a| a.image_id == img && a.score.unwrap_or(1.0) >= config.min_score)
                .collect();
            dets.sort_by(|a, b| {
                b.score
                    .unwrap_or(1.0)
                    .total_cmp(&a.score.unwrap_or(1.0))
                    .then(a.id.cmp(&b.id))
            });
            image_qualities(&gts, &dets, atlas, geodesics, config.kappa)
        })
        .collect::<Result<_, _>>()?;

    let num_gt: usize = per_image.iter().map(|i| i.num_gt).sum();
    if num_gt == 0 {
        log::warn!("ground truth has no instances; all scores reported as 0");
    }
    let scores_for = |task: usize| -> TaskScores {
        let at = |t: f64| -> PrecisionRecall {
            let mut tagged = Vec::new();
            for img in &per_image {
                let tp = match_detections(&img.q[task], img.num_gt, t);
                tagged.extend(img.scores.iter().copied().zip(tp));
            }
            average_precision(&tagged, num_gt)
        };
        let all: Vec<PrecisionRecall> = config.iou_thresholds.iter().map(|&t| at(t)).collect();
        let n = all.len() as f64;
        let (p50, p75) = (at(0.5), at(0.75));
        TaskScores {
            ap: 100.0 * all.iter().map(|p| p.ap).sum::<f64>() / n,
            ap50: 100.0 * p50.ap,
            ap75: 100.0 * p75.ap,
            ar: 100.0 * all.iter().map(|p| p.max_recall).sum::<f64>() / n,
            ar50: 100.0 * p50.max_recall,
            ar75: 100.0 * p75.max_recall,
        }
    };
    Ok(EvalReport {
        bbox: scores_for(0),
        gps: scores_for(1),
        gpsm: scores_for(2),
        segm: scores_for(3),
        num_images: image_ids.len(),
        num_ground_truth: num_gt,
        num_detections: per_image.iter().map(|i| i.scores.len()).sum(),
        gpsm_excluded: per_image.iter().map(|i| i.gpsm_excluded).sum(),
        kappa: config.kappa,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::rle_encode;
    use crate::raster::Raster;

    #[test]
    fn iou_cases() {
        let a = rle_encode(&Raster::from_fn(10, 10, |x, _| x < 4));
        let b = rle_encode(&Raster::from_fn(10, 10, |x, _| (2..6).contains(&x)));
        assert_eq!(mask_iou(&a, &a).unwrap(), 1.0);
        assert_eq!(mask_iou(&a, &b).unwrap(), 1.0 / 3.0);
        let c = rle_encode(&Raster::from_fn(10, 10, |x, _| x >= 6));
        assert_eq!(mask_iou(&a, &c).unwrap(), 0.0);
        let e = rle_encode(&Raster::filled(10, 10, false));
        assert_eq!(mask_iou(&e, &e).unwrap(), 1.0);
        let small = rle_encode(&Raster::filled(3, 3, false));
        assert!(mask_iou(&a, &small).is_err());
    }

    #[test]
    fn gpsm_combination() {
        let a = rle_encode(&Raster::from_fn(8, 8, |x, y| x < 4 && y < 4));
        let quarter = rle_encode(&Raster::from_fn(8, 8, |_, y| y < 4));
        // IoU = 16 / 32, so √(0.5 · 0.5) = 0.5.
        assert_eq!(gpsm_instance(0.5, &a, &quarter).unwrap(), Some(0.5));
        assert_eq!(gpsm_instance(0.0, &a, &quarter).unwrap(), Some(0.0));
        assert_eq!(gpsm_instance(1.0, &a, &a).unwrap(), Some(1.0));
        let e = rle_encode(&Raster::filled(8, 8, false));
        assert_eq!(gpsm_instance(1.0, &e, &e).unwrap(), None);
    }

    #[test]
    fn box_iou() {
        assert_eq!(bbox_iou(&[0.0, 0.0, 2.0, 2.0], &[1.0, 0.0, 2.0, 2.0]), 1.0 / 3.0);
        assert_eq!(bbox_iou(&[0.0, 0.0, 1.0, 1.0], &[2.0, 2.0, 1.0, 1.0]), 0.0);
    }

    #[test]
    fn config_validation() {
        assert!(MetricsConfig::default().validate().is_ok());
        let mut c = MetricsConfig::default();
        c.iou_thresholds = vec![0.5, 0.5];
        assert!(c.validate().is_err());
        c = MetricsConfig {
            kappa: 0.0,
            ..Default::default()
        };
        assert!(c.validate().is_err());
    }
}
