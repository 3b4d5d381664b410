//! Planar homographies, axis-aligned boxes and convex polygons.

mod bbox;
mod homography;
mod polygon;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Real, Result};

pub use bbox::{box_iou, transform_box, BBox};
pub use homography::{apply_homography, compose, invert_homography, Homography};
pub use polygon::{polygon_intersection_area, ConvexPolygon};

/// Camera identifier. Ordered lexicographically; all "lowest id" rules use this order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CameraId(pub String);

impl CameraId {
    pub fn new(id: impl Into<String>) -> Self {
        CameraId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for CameraId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for CameraId {
    fn from(s: &str) -> Self {
        CameraId(s.to_owned())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2<T> {
    pub x: T,
    pub y: T,
}

impl<T: Real> Point2<T> {
    pub fn new(x: T, y: T) -> Self {
        Point2 { x, y }
    }

    /// Fails on NaN or infinite coordinates.
    pub fn checked(x: T, y: T) -> Result<Self> {
        if x.is_finite() && y.is_finite() {
            Ok(Point2 { x, y })
        } else {
            Err(Error::DegeneratePoint)
        }
    }

    pub fn distance(&self, other: &Self) -> T {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Twice the signed area of the triangle (a, b, c); positive when counter-clockwise.
pub(crate) fn cross<T: Real>(a: &Point2<T>, b: &Point2<T>, c: &Point2<T>) -> T {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}
