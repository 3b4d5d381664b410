use std::cmp::Ordering;

use crate::geometry::{box_iou, BBox};
use crate::Real;

/// Greedy non-maximum suppression. Returns the indices of kept boxes in keep order.
///
/// Boxes are visited by confidence descending (ties: lower `x_min`, then lower
/// `y_min`, then input order); a box is suppressed when its IoU with an
/// already kept box is `>= nms_iou`.
pub fn nms_indices<T: Real>(boxes: &[BBox<T>], nms_iou: T) -> Vec<usize> {
    let mut order: Vec<usize> = (0..boxes.len()).collect();
    order.sort_by(|&a, &b| {
        let (ba, bb) = (&boxes[a], &boxes[b]);
        bb.confidence
            .partial_cmp(&ba.confidence)
            .unwrap_or(Ordering::Equal)
            .then(ba.x_min.partial_cmp(&bb.x_min).unwrap_or(Ordering::Equal))
            .then(ba.y_min.partial_cmp(&bb.y_min).unwrap_or(Ordering::Equal))
    });
    let mut kept: Vec<usize> = Vec::new();
    for idx in order {
        if kept.iter().all(|&k| box_iou(&boxes[k], &boxes[idx]) < nms_iou) {
            kept.push(idx);
        }
    }
    kept
}

pub fn nms<T: Real>(boxes: &[BBox<T>], nms_iou: T) -> Vec<BBox<T>> {
    nms_indices(boxes, nms_iou).into_iter().map(|i| boxes[i].clone()).collect()
}
