//! Cross-camera knowledge sharing: transfer collaborator boxes into the
//! supreme camera's image plane, pair them with Hungarian matching on
//! `1 - IoU`, boost agreed boxes, suppress duplicates, count people.

mod hungarian;
mod nms;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::geometry::{box_iou, transform_box, BBox, Homography};
use crate::{CameraId, Error, Real, Result};

pub use hungarian::{hungarian, Assignment};
pub use nms::{nms, nms_indices};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FusionParams<T> {
    /// Matched pairs below this IoU are discarded.
    pub match_gate_iou: T,
    /// Confidence multiplier slope per extra supporting camera.
    pub boost_alpha: T,
    pub nms_iou: T,
    /// Minimum confidence for a fused person box to be counted.
    pub count_conf_threshold: T,
}

impl<T: Real> Default for FusionParams<T> {
    fn default() -> Self {
        FusionParams {
            match_gate_iou: T::lit(0.2),
            boost_alpha: T::lit(0.25),
            nms_iou: T::lit(0.5),
            count_conf_threshold: T::lit(0.5),
        }
    }
}

/// A box in supreme-camera coordinates plus the cameras that saw it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusedBox<T> {
    #[serde(rename = "box")]
    pub bbox: BBox<T>,
    pub support: usize,
    pub source_cameras: BTreeSet<CameraId>,
}

impl<T: Real> FusedBox<T> {
    pub fn single(bbox: BBox<T>) -> Self {
        let source_cameras = BTreeSet::from([bbox.camera_id.clone()]);
        FusedBox {
            bbox,
            support: 1,
            source_cameras,
        }
    }
}

/// Hungarian matching on `1 - IoU`, keeping pairs with IoU `>= match_gate_iou`.
/// Returns `(supreme_index, other_index)` pairs sorted by supreme index.
pub fn match_boxes<T: Real>(supreme: &[BBox<T>], others: &[BBox<T>], params: &FusionParams<T>) -> Vec<(usize, usize)> {
    if supreme.is_empty() || others.is_empty() {
        return Vec::new();
    }
    let cost: Vec<Vec<T>> = supreme
        .iter()
        .map(|s| others.iter().map(|o| T::one() - box_iou(s, o)).collect())
        .collect();
    let assignment = hungarian(&cost).expect("cost matrix is non-empty and finite");
    assignment
        .pairs
        .into_iter()
        .filter(|&(i, j)| box_iou(&supreme[i], &others[j]) >= params.match_gate_iou)
        .collect()
}

/// `c <- min(1, c * (1 + alpha * (support - 1)))`.
pub fn boost_confidence<T: Real>(boxes: Vec<FusedBox<T>>, params: &FusionParams<T>) -> Vec<FusedBox<T>> {
    boxes
        .into_iter()
        .map(|mut f| {
            if f.support > 1 {
                let gain = T::one() + params.boost_alpha * T::from_count(f.support - 1);
                f.bbox.confidence = (f.bbox.confidence * gain).min(T::one());
            }
            f
        })
        .collect()
}

/// Fuses one cluster's boxes into supreme coordinates.
///
/// Collaborators are matched against the supreme camera's list only. A matched
/// pair keeps the supreme geometry and the larger of the two confidences;
/// unmatched collaborator boxes join as single-camera boxes. The merged set is
/// boosted by support and then passed through NMS.
pub fn fuse<T: Real>(
    cluster_boxes: &BTreeMap<CameraId, Vec<BBox<T>>>,
    supreme_id: &CameraId,
    cam_to_supreme: &BTreeMap<CameraId, Homography<T>>,
    params: &FusionParams<T>,
) -> Result<Vec<FusedBox<T>>> {
    let supreme_boxes: &[BBox<T>] = cluster_boxes.get(supreme_id).map_or(&[], Vec::as_slice);
    let mut fused: Vec<FusedBox<T>> = supreme_boxes.iter().cloned().map(FusedBox::single).collect();

    for (cam, boxes) in cluster_boxes {
        if cam == supreme_id {
            continue;
        }
        let h = cam_to_supreme.get(cam).ok_or_else(|| Error::MissingHomography(cam.clone()))?;
        let moved = boxes.iter().map(|b| transform_box(h, b)).collect::<Result<Vec<_>>>()?;
        let pairs = match_boxes(supreme_boxes, &moved, params);
        let mut matched = vec![false; moved.len()];
        for (si, oi) in pairs {
            matched[oi] = true;
            let f = &mut fused[si];
            if f.source_cameras.insert(cam.clone()) {
                f.support += 1;
            }
            f.bbox.confidence = f.bbox.confidence.max(moved[oi].confidence);
        }
        fused.extend(moved.into_iter().zip(matched).filter(|(_, m)| !m).map(|(b, _)| FusedBox::single(b)));
    }

    let boosted = boost_confidence(fused, params);
    let plain: Vec<BBox<T>> = boosted.iter().map(|f| f.bbox.clone()).collect();
    let keep = nms_indices(&plain, params.nms_iou);
    Ok(keep.into_iter().map(|i| boosted[i].clone()).collect())
}

/// Person boxes (class 0) with confidence at or above the count threshold.
pub fn count_people<T: Real>(fused: &[FusedBox<T>], params: &FusionParams<T>) -> usize {
    fused
        .iter()
        .filter(|f| f.bbox.class_id == 0 && f.bbox.confidence >= params.count_conf_threshold)
        .count()
}
