//! COCO-DensePose JSON interchange.
//!
//! Floats are written at 6 significant digits, so `read_coco(write_coco(d))`
//! equals `d.normalized()` rather than `d` itself. Masks are COCO compressed
//! RLE strings; `dp_masks` always holds 14 entries, empty parts included.

use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::annotation::{DenseAnnotation, DensePoint, BOX_FRAME};
use super::rle::RleMask;
use super::DatasetError;
use crate::atlas::NUM_PARTS;
use crate::math::round_sig6;
use crate::render::Keypoint;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageMeta {
    pub id: u64,
    pub file_name: String,
    pub width: usize,
    pub height: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CocoDataset {
    pub images: Vec<ImageMeta>,
    pub annotations: Vec<DenseAnnotation>,
    pub keypoint_names: Vec<String>,
    /// Keypoint index pairs (0-based) drawn as limbs.
    pub skeleton: Vec<[usize; 2]>,
}

impl CocoDataset {
    /// Sorted by id with floats rounded as on disk.
    pub fn normalized(&self) -> CocoDataset {
        let mut images = self.images.clone();
        images.sort_by_key(|i| i.id);
        let mut annotations: Vec<DenseAnnotation> = self.annotations.iter().map(|a| a.rounded()).collect();
        annotations.sort_by_key(|a| (a.image_id, a.id));
        CocoDataset {
            images,
            annotations,
            ..self.clone()
        }
    }

    pub fn image(&self, id: u64) -> Option<&ImageMeta> {
        self.images.iter().find(|i| i.id == id)
    }

    fn check_ids(&self) -> Result<(), DatasetError> {
        let mut seen = HashSet::new();
        for i in &self.images {
            if !seen.insert(i.id) {
                return Err(DatasetError::DuplicateId { kind: "image", id: i.id });
            }
        }
        let mut ann_ids = HashSet::new();
        for a in &self.annotations {
            if !ann_ids.insert(a.id) {
                return Err(DatasetError::DuplicateId {
                    kind: "annotation",
                    id: a.id,
                });
            }
            if !seen.contains(&a.image_id) {
                return Err(DatasetError::UnknownImage {
                    annotation: a.id,
                    image: a.image_id,
                });
            }
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct WireRle {
    /// `[height, width]`.
    size: [usize; 2],
    counts: String,
}

impl From<&RleMask> for WireRle {
    fn from(r: &RleMask) -> Self {
        WireRle {
            size: [r.height, r.width],
            counts: r.to_coco_string(),
        }
    }
}

impl WireRle {
    fn decode(&self) -> Result<RleMask, DatasetError> {
        RleMask::from_coco_string(self.size[1], self.size[0], &self.counts)
    }
}

#[allow(non_snake_case)]
#[derive(Serialize, Deserialize)]
struct WireAnnotation {
    id: u64,
    image_id: u64,
    category_id: u32,
    iscrowd: u8,
    area: u64,
    bbox: [f64; 4],
    segmentation: WireRle,
    dp_x: Vec<f64>,
    dp_y: Vec<f64>,
    dp_I: Vec<u8>,
    dp_U: Vec<f64>,
    dp_V: Vec<f64>,
    dp_masks: Vec<WireRle>,
    keypoints: Vec<f64>,
    num_keypoints: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    score: Option<f64>,
}

#[derive(Serialize, Deserialize)]
struct WireCategory {
    id: u32,
    name: String,
    supercategory: String,
    keypoints: Vec<String>,
    /// 1-based, as in COCO.
    skeleton: Vec<[usize; 2]>,
}

#[derive(Serialize, Deserialize)]
struct WireFile {
    images: Vec<ImageMeta>,
    annotations: Vec<WireAnnotation>,
    categories: Vec<WireCategory>,
}

const PERSON: u32 = 1;

fn to_wire(a: &DenseAnnotation) -> WireAnnotation {
    let r = round_sig6;
    WireAnnotation {
        id: a.id,
        image_id: a.image_id,
        category_id: PERSON,
        iscrowd: 0,
        area: a.area(),
        bbox: a.bbox.map(r),
        segmentation: (&a.fg_rle).into(),
        dp_x: a.points.iter().map(|p| r(p.x)).collect(),
        dp_y: a.points.iter().map(|p| r(p.y)).collect(),
        dp_I: a.points.iter().map(|p| p.chart).collect(),
        dp_U: a.points.iter().map(|p| r(p.u)).collect(),
        dp_V: a.points.iter().map(|p| r(p.v)).collect(),
        dp_masks: a.part_rles.iter().map(WireRle::from).collect(),
        keypoints: a
            .keypoints
            .iter()
            .flat_map(|k| [r(k.x), r(k.y), k.flag as f64])
            .collect(),
        num_keypoints: a.keypoints.iter().filter(|k| k.flag > 0).count(),
        score: a.score.map(r),
    }
}

fn from_wire(w: WireAnnotation) -> Result<DenseAnnotation, DatasetError> {
    let bad = |message: String| DatasetError::Annotation { id: w.id, message };
    let n = w.dp_x.len();
    if [w.dp_y.len(), w.dp_I.len(), w.dp_U.len(), w.dp_V.len()].iter().any(|&l| l != n) {
        return Err(bad("dp_x, dp_y, dp_I, dp_U and dp_V differ in length".into()));
    }
    if w.dp_masks.len() != NUM_PARTS {
        return Err(bad(format!("expected {NUM_PARTS} dp_masks, found {}", w.dp_masks.len())));
    }
    if !w.keypoints.len().is_multiple_of(3) {
        return Err(bad("keypoint array length is not a multiple of 3".into()));
    }
    let part_rles = w.dp_masks.iter().map(WireRle::decode).collect::<Result<Vec<_>, _>>()?;
    if part_rles.iter().any(|m| m.width != BOX_FRAME || m.height != BOX_FRAME) {
        return Err(bad(format!("dp_masks must be {BOX_FRAME}x{BOX_FRAME}")));
    }
    let points = (0..n)
        .map(|i| DensePoint {
            x: w.dp_x[i],
            y: w.dp_y[i],
            chart: w.dp_I[i],
            u: w.dp_U[i],
            v: w.dp_V[i],
        })
        .collect();
    let keypoints = w
        .keypoints
        .chunks(3)
        .map(|k| Keypoint {
            x: k[0],
            y: k[1],
            flag: k[2] as u8,
        })
        .collect();
    Ok(DenseAnnotation {
        id: w.id,
        image_id: w.image_id,
        bbox: w.bbox,
        fg_rle: w.segmentation.decode()?,
        part_rles,
        points,
        keypoints,
        score: w.score,
    })
}

/// Serializes to the JSON text written by [`write_coco`], sorted by id.
pub fn coco_to_string(dataset: &CocoDataset) -> Result<String, DatasetError> {
    dataset.check_ids()?;
    let mut images = dataset.images.clone();
    images.sort_by_key(|i| i.id);
    let mut annotations: Vec<&DenseAnnotation> = dataset.annotations.iter().collect();
    annotations.sort_by_key(|a| (a.image_id, a.id));
    let file = WireFile {
        images,
        annotations: annotations.into_iter().map(to_wire).collect(),
        categories: vec![WireCategory {
            id: PERSON,
            name: "person".into(),
            supercategory: "person".into(),
            keypoints: dataset.keypoint_names.clone(),
            skeleton: dataset.skeleton.iter().map(|[a, b]| [a + 1, b + 1]).collect(),
        }],
    };
    let mut text = serde_json::to_string(&file).expect("wire types serialize");
    text.push('\n');
    Ok(text)
}

pub fn coco_from_str(text: &str) -> Result<CocoDataset, DatasetError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let file: WireFile = serde_path_to_error::deserialize(de).map_err(|e| DatasetError::Json {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })?;
    let category = file.categories.into_iter().find(|c| c.id == PERSON);
    let (keypoint_names, skeleton) = match category {
        Some(c) => (
            c.keypoints,
            c.skeleton
                .into_iter()
                .map(|[a, b]| [a.saturating_sub(1), b.saturating_sub(1)])
                .collect(),
        ),
        None => (Vec::new(), Vec::new()),
    };
    let dataset = CocoDataset {
        images: file.images,
        annotations: file
            .annotations
            .into_iter()
            .map(from_wire)
            .collect::<Result<Vec<_>, _>>()?,
        keypoint_names,
        skeleton,
    };
    dataset.check_ids()?;
    Ok(dataset)
}

/// Writes atomically: a temporary sibling is renamed over `path` on success.
pub fn write_coco(dataset: &CocoDataset, path: &Path) -> Result<(), DatasetError> {
    let text = coco_to_string(dataset)?;
    crate::fsutil::write_atomic(path, text.as_bytes()).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_coco(path: &Path) -> Result<CocoDataset, DatasetError> {
    let text = std::fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    coco_from_str(&text).map_err(|e| match e {
        DatasetError::Json { path: key, message } => DatasetError::Json {
            path: format!("{}: {key}", path.display()),
            message,
        },
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_dataset_round_trips() {
        let d = CocoDataset::default();
        let text = coco_to_string(&d).unwrap();
        assert_eq!(
            text,
            "{\"images\":[],\"annotations\":[],\"categories\":[{\"id\":1,\"name\":\"person\",\
             \"supercategory\":\"person\",\"keypoints\":[],\"skeleton\":[]}]}\n"
        );
        assert_eq!(coco_from_str(&text).unwrap(), d);
    }

    #[test]
    fn malformed_json_names_offending_key() {
        let text = r#"{"images":[{"id":1,"file_name":"a.png","width":"wide","height":2}],"annotations":[],"categories":[]}"#;
        match coco_from_str(text) {
            Err(DatasetError::Json { path, .. }) => assert_eq!(path, "images[0].width"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_image_ids_rejected() {
        let img = ImageMeta {
            id: 3,
            file_name: "x.png".into(),
            width: 4,
            height: 4,
        };
        let d = CocoDataset {
            images: vec![img.clone(), img],
            ..Default::default()
        };
        assert!(matches!(coco_to_string(&d), Err(DatasetError::DuplicateId { kind: "image", id: 3 })));
    }
}
