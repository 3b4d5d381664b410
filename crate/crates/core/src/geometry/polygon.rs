use serde::{Deserialize, Serialize};

use super::{cross, Point2};
use crate::{Error, Real, Result};

const CONVEXITY_TOL: f64 = 1e-9;

/// Convex polygon with counter-clockwise vertices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexPolygon<T> {
    vertices: Vec<Point2<T>>,
}

impl<T: Real> ConvexPolygon<T> {
    /// Accepts either winding; clockwise input is reversed.
    pub fn new(mut vertices: Vec<Point2<T>>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::InvalidPolygon(format!("{} vertices", vertices.len())));
        }
        if vertices.iter().any(|p| !(p.x.is_finite() && p.y.is_finite())) {
            return Err(Error::InvalidPolygon("non-finite vertex".into()));
        }
        let signed = signed_area(&vertices);
        if !(signed.abs() > T::zero()) {
            return Err(Error::InvalidPolygon("zero area".into()));
        }
        if signed < T::zero() {
            vertices.reverse();
        }
        let n = vertices.len();
        for i in 0..n {
            let c = cross(&vertices[i], &vertices[(i + 1) % n], &vertices[(i + 2) % n]);
            if c < -T::lit(CONVEXITY_TOL) {
                return Err(Error::InvalidPolygon("not convex".into()));
            }
        }
        Ok(ConvexPolygon { vertices })
    }

    /// Axis-aligned rectangle `[x0, x1] x [y0, y1]`.
    pub fn rectangle(x0: T, y0: T, x1: T, y1: T) -> Result<Self> {
        ConvexPolygon::new(vec![Point2::new(x0, y0), Point2::new(x1, y0), Point2::new(x1, y1), Point2::new(x0, y1)])
    }

    pub fn vertices(&self) -> &[Point2<T>] {
        &self.vertices
    }

    /// Shoelace area.
    pub fn area(&self) -> T {
        signed_area(&self.vertices).abs()
    }

    pub fn contains(&self, p: &Point2<T>) -> bool {
        let n = self.vertices.len();
        (0..n).all(|i| cross(&self.vertices[i], &self.vertices[(i + 1) % n], p) >= -T::lit(CONVEXITY_TOL))
    }

    pub fn intersection_area(&self, other: &Self) -> T {
        polygon_intersection_area(self, other)
    }
}

fn signed_area<T: Real>(v: &[Point2<T>]) -> T {
    let n = v.len();
    let twice = (0..n).fold(T::zero(), |acc, i| {
        let (a, b) = (&v[i], &v[(i + 1) % n]);
        acc + (a.x * b.y - b.x * a.y)
    });
    twice / T::lit(2.0)
}

/// Clips `a` against every half-plane of `b` (Sutherland-Hodgman) and returns the clipped area.
pub fn polygon_intersection_area<T: Real>(a: &ConvexPolygon<T>, b: &ConvexPolygon<T>) -> T {
    let mut poly: Vec<Point2<T>> = a.vertices.clone();
    let n = b.vertices.len();
    for i in 0..n {
        if poly.is_empty() {
            break;
        }
        let (e0, e1) = (&b.vertices[i], &b.vertices[(i + 1) % n]);
        let mut out = Vec::with_capacity(poly.len() + 1);
        for k in 0..poly.len() {
            let cur = poly[k];
            let prev = poly[(k + poly.len() - 1) % poly.len()];
            let dc = cross(e0, e1, &cur);
            let dp = cross(e0, e1, &prev);
            let cur_in = dc >= T::zero();
            let prev_in = dp >= T::zero();
            if cur_in {
                if !prev_in {
                    out.push(lerp(&prev, &cur, dp / (dp - dc)));
                }
                out.push(cur);
            } else if prev_in {
                out.push(lerp(&prev, &cur, dp / (dp - dc)));
            }
        }
        poly = out;
    }
    if poly.len() < 3 {
        return T::zero();
    }
    signed_area(&poly).abs()
}

fn lerp<T: Real>(a: &Point2<T>, b: &Point2<T>, t: T) -> Point2<T> {
    Point2::new(a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t)
}
