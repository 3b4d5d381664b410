use serde::{Deserialize, Serialize};

use super::Point2;
use crate::{Error, Real, Result};

const DEGENERACY_TOL: f64 = 1e-12;

/// A 3x3 projective transform of the plane.
///
/// Stored canonically: when `m[2][2] != 0` the matrix is scaled so that
/// `m[2][2] == 1`. Always finite with `|det| > 1e-12`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[[T; 3]; 3]", into = "[[T; 3]; 3]")]
#[serde(bound(serialize = "T: Real + Serialize", deserialize = "T: Real + Deserialize<'de>"))]
pub struct Homography<T> {
    m: [[T; 3]; 3],
}

impl<T: Real> TryFrom<[[T; 3]; 3]> for Homography<T> {
    type Error = Error;

    fn try_from(m: [[T; 3]; 3]) -> Result<Self> {
        Homography::new(m)
    }
}

impl<T: Real> From<Homography<T>> for [[T; 3]; 3] {
    fn from(h: Homography<T>) -> Self {
        h.m
    }
}

impl<T: Real> Homography<T> {
    pub fn new(m: [[T; 3]; 3]) -> Result<Self> {
        if m.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Singular);
        }
        let mut m = m;
        let s = m[2][2];
        if s != T::zero() {
            for row in m.iter_mut() {
                for v in row.iter_mut() {
                    *v = *v / s;
                }
            }
            m[2][2] = T::one();
        }
        if m.iter().flatten().any(|v| !v.is_finite()) || det3(&m).abs() <= T::lit(DEGENERACY_TOL) {
            return Err(Error::Singular);
        }
        Ok(Homography { m })
    }

    pub fn identity() -> Self {
        let (o, z) = (T::one(), T::zero());
        Homography {
            m: [[o, z, z], [z, o, z], [z, z, o]],
        }
    }

    pub fn scaling(sx: T, sy: T) -> Result<Self> {
        let (o, z) = (T::one(), T::zero());
        Homography::new([[sx, z, z], [z, sy, z], [z, z, o]])
    }

    pub fn translation(tx: T, ty: T) -> Self {
        let (o, z) = (T::one(), T::zero());
        Homography {
            m: [[o, z, tx], [z, o, ty], [z, z, o]],
        }
    }

    /// Solves for the homography mapping each `src[k]` onto `dst[k]`.
    pub fn from_correspondences(src: &[Point2<T>; 4], dst: &[Point2<T>; 4]) -> Result<Self> {
        // h22 fixed at 1; 8 unknowns, two equations per correspondence.
        let mut a = [[T::zero(); 9]; 8];
        for (k, (s, d)) in src.iter().zip(dst.iter()).enumerate() {
            let (x, y, u, v) = (s.x, s.y, d.x, d.y);
            let (o, z) = (T::one(), T::zero());
            a[2 * k] = [x, y, o, z, z, z, -u * x, -u * y, u];
            a[2 * k + 1] = [z, z, z, x, y, o, -v * x, -v * y, v];
        }
        let h = solve8(a).ok_or(Error::Singular)?;
        Homography::new([[h[0], h[1], h[2]], [h[3], h[4], h[5]], [h[6], h[7], T::one()]])
    }

    pub fn matrix(&self) -> &[[T; 3]; 3] {
        &self.m
    }

    pub fn determinant(&self) -> T {
        det3(&self.m)
    }

    pub fn apply(&self, p: Point2<T>) -> Result<Point2<T>> {
        let m = &self.m;
        let w = m[2][0] * p.x + m[2][1] * p.y + m[2][2];
        if !(w.abs() > T::lit(DEGENERACY_TOL)) {
            return Err(Error::DegeneratePoint);
        }
        let x = (m[0][0] * p.x + m[0][1] * p.y + m[0][2]) / w;
        let y = (m[1][0] * p.x + m[1][1] * p.y + m[1][2]) / w;
        Point2::checked(x, y)
    }

    /// Square root of the Jacobian determinant at `p`: the local linear
    /// magnification of the map around that point.
    pub fn local_scale(&self, p: Point2<T>) -> Result<T> {
        let m = &self.m;
        let w = m[2][0] * p.x + m[2][1] * p.y + m[2][2];
        if !(w.abs() > T::lit(DEGENERACY_TOL)) {
            return Err(Error::DegeneratePoint);
        }
        let q = self.apply(p)?;
        let j00 = (m[0][0] - q.x * m[2][0]) / w;
        let j01 = (m[0][1] - q.x * m[2][1]) / w;
        let j10 = (m[1][0] - q.y * m[2][0]) / w;
        let j11 = (m[1][1] - q.y * m[2][1]) / w;
        Ok((j00 * j11 - j01 * j10).abs().sqrt())
    }

    pub fn compose(&self, rhs: &Self) -> Result<Self> {
        let (a, b) = (&self.m, &rhs.m);
        let mut out = [[T::zero(); 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = (0..3).fold(T::zero(), |acc, k| acc + a[i][k] * b[k][j]);
            }
        }
        Homography::new(out)
    }

    pub fn inverse(&self) -> Result<Self> {
        let m = &self.m;
        let det = det3(m);
        if !(det.abs() > T::lit(DEGENERACY_TOL)) {
            return Err(Error::Singular);
        }
        let cof = |r0: usize, r1: usize, c0: usize, c1: usize| m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0];
        let adj = [
            [cof(1, 2, 1, 2), -cof(0, 2, 1, 2), cof(0, 1, 1, 2)],
            [-cof(1, 2, 0, 2), cof(0, 2, 0, 2), -cof(0, 1, 0, 2)],
            [cof(1, 2, 0, 1), -cof(0, 2, 0, 1), cof(0, 1, 0, 1)],
        ];
        let mut inv = adj;
        for row in inv.iter_mut() {
            for v in row.iter_mut() {
                *v = *v / det;
            }
        }
        Homography::new(inv)
    }
}

impl<T: Real> Default for Homography<T> {
    fn default() -> Self {
        Homography::identity()
    }
}

pub fn apply_homography<T: Real>(h: &Homography<T>, p: Point2<T>) -> Result<Point2<T>> {
    h.apply(p)
}

/// `h1 · h2`: applies `h2` first.
pub fn compose<T: Real>(h1: &Homography<T>, h2: &Homography<T>) -> Result<Homography<T>> {
    h1.compose(h2)
}

pub fn invert_homography<T: Real>(h: &Homography<T>) -> Result<Homography<T>> {
    h.inverse()
}

fn det3<T: Real>(m: &[[T; 3]; 3]) -> T {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Gaussian elimination with partial pivoting on an 8x9 augmented system.
fn solve8<T: Real>(mut a: [[T; 9]; 8]) -> Option<[T; 8]> {
    for col in 0..8 {
        let pivot = (col..8).max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())?;
        if !(a[pivot][col].abs() > T::lit(1e-15)) {
            return None;
        }
        a.swap(col, pivot);
        for row in 0..8 {
            if row != col {
                let f = a[row][col] / a[col][col];
                if f != T::zero() {
                    for k in col..9 {
                        a[row][k] = a[row][k] - f * a[col][k];
                    }
                }
            }
        }
    }
    let mut x = [T::zero(); 8];
    for (i, v) in x.iter_mut().enumerate() {
        *v = a[i][8] / a[i][i];
    }
    Some(x)
}
