use serde::{Deserialize, Serialize};

use super::{CameraId, Homography, Point2};
use crate::{Error, Real, Result};

/// Axis-aligned pixel-space detection box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BBox<T> {
    pub x_min: T,
    pub y_min: T,
    pub width: T,
    pub height: T,
    pub confidence: T,
    /// 0 = person.
    pub class_id: u32,
    pub camera_id: CameraId,
    pub frame_idx: usize,
}

impl<T: Real> BBox<T> {
    /// A person box (class 0).
    pub fn new(x_min: T, y_min: T, width: T, height: T, confidence: T, camera_id: CameraId, frame_idx: usize) -> Result<Self> {
        let b = BBox {
            x_min,
            y_min,
            width,
            height,
            confidence,
            class_id: 0,
            camera_id,
            frame_idx,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        let geo = [self.x_min, self.y_min, self.width, self.height];
        if geo.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidBox("non-finite geometry".into()));
        }
        if !(self.width > T::zero() && self.height > T::zero()) {
            return Err(Error::InvalidBox(format!("non-positive size {}x{}", self.width, self.height)));
        }
        if !(self.confidence >= T::zero() && self.confidence <= T::one()) {
            return Err(Error::InvalidBox(format!("confidence {} outside [0, 1]", self.confidence)));
        }
        Ok(())
    }

    pub fn x_max(&self) -> T {
        self.x_min + self.width
    }

    pub fn y_max(&self) -> T {
        self.y_min + self.height
    }

    // Computed from the corners so an identical box intersects to exactly its own area.
    pub fn area(&self) -> T {
        (self.x_max() - self.x_min) * (self.y_max() - self.y_min)
    }

    pub fn corners(&self) -> [Point2<T>; 4] {
        let (x0, y0, x1, y1) = (self.x_min, self.y_min, self.x_max(), self.y_max());
        [Point2::new(x0, y0), Point2::new(x1, y0), Point2::new(x1, y1), Point2::new(x0, y1)]
    }

    pub fn iou(&self, other: &Self) -> T {
        box_iou(self, other)
    }
}

/// Intersection over union; 0 for disjoint boxes.
pub fn box_iou<T: Real>(a: &BBox<T>, b: &BBox<T>) -> T {
    let iw = a.x_max().min(b.x_max()) - a.x_min.max(b.x_min);
    let ih = a.y_max().min(b.y_max()) - a.y_min.max(b.y_min);
    if !(iw > T::zero() && ih > T::zero()) {
        return T::zero();
    }
    let inter = iw * ih;
    let union = a.area() + b.area() - inter;
    if !(union > T::zero()) {
        return T::zero();
    }
    (inter / union).min(T::one()).max(T::zero())
}

/// Maps the four corners of `b` through `h` and returns their axis-aligned bounding box.
pub fn transform_box<T: Real>(h: &Homography<T>, b: &BBox<T>) -> Result<BBox<T>> {
    let mut x0 = T::infinity();
    let mut y0 = T::infinity();
    let mut x1 = T::neg_infinity();
    let mut y1 = T::neg_infinity();
    for c in b.corners() {
        let q = h.apply(c)?;
        x0 = x0.min(q.x);
        y0 = y0.min(q.y);
        x1 = x1.max(q.x);
        y1 = y1.max(q.y);
    }
    let out = BBox {
        x_min: x0,
        y_min: y0,
        width: x1 - x0,
        height: y1 - y0,
        ..b.clone()
    };
    if !(out.width > T::zero() && out.height > T::zero()) {
        return Err(Error::DegeneratePoint);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bx(x: f64, y: f64, w: f64, h: f64) -> BBox<f64> {
        BBox::new(x, y, w, h, 0.9, CameraId::from("1"), 0).unwrap()
    }

    #[test]
    fn iou_examples() {
        let a = bx(0.0, 0.0, 2.0, 2.0);
        assert_eq!(box_iou(&a, &a), 1.0);
        assert_eq!(box_iou(&a, &bx(5.0, 5.0, 1.0, 1.0)), 0.0);
        // touching edges count as disjoint
        assert_eq!(box_iou(&a, &bx(2.0, 0.0, 2.0, 2.0)), 0.0);
        let v = box_iou(&a, &bx(1.0, 1.0, 2.0, 2.0));
        assert!((v - 1.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn invalid_boxes_rejected() {
        assert!(BBox::new(0.0, 0.0, 0.0, 1.0, 0.5, CameraId::from("1"), 0).is_err());
        assert!(BBox::new(0.0, 0.0, 1.0, -1.0, 0.5, CameraId::from("1"), 0).is_err());
        assert!(BBox::new(0.0, 0.0, 1.0, 1.0, 1.5, CameraId::from("1"), 0).is_err());
        assert!(BBox::new(f64::NAN, 0.0, 1.0, 1.0, 0.5, CameraId::from("1"), 0).is_err());
    }

    #[test]
    fn transform_examples() {
        let b = bx(0.0, 0.0, 2.0, 2.0);
        assert_eq!(transform_box(&Homography::identity(), &b).unwrap(), b);
        let t = transform_box(&Homography::translation(5.0, 0.0), &b).unwrap();
        assert_eq!((t.x_min, t.y_min, t.width, t.height), (5.0, 0.0, 2.0, 2.0));
        let s = transform_box(&Homography::scaling(2.0, 2.0).unwrap(), &bx(1.0, 1.0, 1.0, 1.0)).unwrap();
        assert_eq!((s.x_min, s.y_min, s.width, s.height), (2.0, 2.0, 2.0, 2.0));
        assert_eq!(s.confidence, 0.9);
        assert_eq!(s.camera_id, CameraId::from("1"));
    }

    #[test]
    fn generic_over_f32() {
        let a = BBox::<f32>::new(0.0, 0.0, 2.0, 2.0, 0.5, CameraId::from("1"), 0).unwrap();
        let b = BBox::<f32>::new(1.0, 1.0, 2.0, 2.0, 0.5, CameraId::from("1"), 0).unwrap();
        assert!((box_iou(&a, &b) - 1.0 / 7.0).abs() < 1e-6);
    }

    fn arb_box() -> impl Strategy<Value = BBox<f64>> {
        (-100.0..100.0f64, -100.0..100.0f64, 0.1..50.0f64, 0.1..50.0f64).prop_map(|(x, y, w, h)| bx(x, y, w, h))
    }

    proptest! {
        #[test]
        fn iou_symmetric_and_bounded(a in arb_box(), b in arb_box()) {
            let ab = box_iou(&a, &b);
            prop_assert_eq!(ab, box_iou(&b, &a));
            prop_assert!((0.0..=1.0).contains(&ab));
            prop_assert_eq!(box_iou(&a, &a), 1.0);
        }

        #[test]
        fn transform_commutes_with_translation(a in arb_box(), tx in -20.0..20.0f64, ty in -20.0..20.0f64) {
            let s = Homography::scaling(1.5, 0.75).unwrap();
            let t = Homography::translation(tx, ty);
            let shifted = BBox { x_min: a.x_min + tx, y_min: a.y_min + ty, ..a.clone() };
            let lhs = transform_box(&s, &shifted).unwrap();
            let rhs = transform_box(&s.compose(&t).unwrap(), &a).unwrap();
            prop_assert!((lhs.x_min - rhs.x_min).abs() < 1e-9);
            prop_assert!((lhs.y_min - rhs.y_min).abs() < 1e-9);
            prop_assert!((lhs.width - rhs.width).abs() < 1e-9);
            prop_assert!((lhs.height - rhs.height).abs() < 1e-9);
        }
    }
}
