//! Camera network model: ground-plane footprints, pairwise overlap,
//! clustering of overlapping cameras and choice of each cluster's supreme camera.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::detsim::{ImageSize, NoiseModel};
use crate::geometry::{polygon_intersection_area, ConvexPolygon, Homography, Point2};
use crate::{CameraId, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraConfig {
    pub camera_id: CameraId,
    pub image_w: u32,
    pub image_h: u32,
    /// Ground plane (metres) to image (pixels).
    pub world_to_image: Homography<f64>,
    /// Resolution-quality score in [0, 1].
    pub quality: f64,
    pub noise: NoiseModel,
    /// Multiplier on projected person height.
    pub vertical_scale: f64,
}

impl CameraConfig {
    pub fn image_size(&self) -> ImageSize {
        ImageSize {
            width: self.image_w,
            height: self.image_h,
        }
    }
}

/// The image rectangle mapped back to the ground plane.
pub fn fov_footprint(cam: &CameraConfig) -> Result<ConvexPolygon<f64>> {
    let to_world = cam.world_to_image.inverse()?;
    let (w, h) = (cam.image_w as f64, cam.image_h as f64);
    let corners = [Point2::new(0.0, 0.0), Point2::new(w, 0.0), Point2::new(w, h), Point2::new(0.0, h)];
    let quad = corners.iter().map(|c| to_world.apply(*c)).collect::<Result<Vec<_>>>()?;
    ConvexPolygon::new(quad).map_err(|_| Error::DegeneratePoint)
}

/// Symmetric pairwise overlap: intersection area over the smaller footprint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapMatrix {
    pub ids: Vec<CameraId>,
    pub values: Vec<Vec<f64>>,
}

impl OverlapMatrix {
    pub fn n(&self) -> usize {
        self.ids.len()
    }

    pub fn get(&self, a: &CameraId, b: &CameraId) -> Option<f64> {
        let i = self.ids.iter().position(|c| c == a)?;
        let j = self.ids.iter().position(|c| c == b)?;
        Some(self.values[i][j])
    }
}

pub fn overlap_matrix(cams: &[CameraConfig]) -> Result<OverlapMatrix> {
    if cams.is_empty() {
        return Err(Error::MissingInput("no cameras".into()));
    }
    let feet = cams.iter().map(fov_footprint).collect::<Result<Vec<_>>>()?;
    let n = cams.len();
    let mut values = vec![vec![0.0; n]; n];
    for i in 0..n {
        values[i][i] = 1.0;
        for j in i + 1..n {
            let inter = polygon_intersection_area(&feet[i], &feet[j]);
            let v = (inter / feet[i].area().min(feet[j].area())).clamp(0.0, 1.0);
            values[i][j] = v;
            values[j][i] = v;
        }
    }
    Ok(OverlapMatrix {
        ids: cams.iter().map(|c| c.camera_id.clone()).collect(),
        values,
    })
}

/// Connected components of the graph joining cameras whose overlap is at
/// least `overlap_threshold`. Components are ordered by their smallest id.
pub fn cluster_cameras(m: &OverlapMatrix, overlap_threshold: f64) -> Vec<BTreeSet<CameraId>> {
    let n = m.n();
    let mut parent: Vec<usize> = (0..n).collect();
    fn root(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            if m.values[i][j] >= overlap_threshold {
                let (a, b) = (root(&mut parent, i), root(&mut parent, j));
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut groups: BTreeMap<usize, BTreeSet<CameraId>> = BTreeMap::new();
    for i in 0..n {
        let r = root(&mut parent, i);
        groups.entry(r).or_default().insert(m.ids[i].clone());
    }
    let mut out: Vec<BTreeSet<CameraId>> = groups.into_values().collect();
    out.sort_by(|a, b| a.first().cmp(&b.first()));
    out
}

/// A set of overlapping cameras anchored on one supreme camera.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    members: BTreeSet<CameraId>,
    supreme: CameraId,
}

impl Cluster {
    pub fn new(members: BTreeSet<CameraId>, supreme: CameraId) -> Result<Self> {
        if !members.contains(&supreme) {
            return Err(Error::Scenario(format!("supreme camera {supreme} is not a cluster member")));
        }
        Ok(Cluster { members, supreme })
    }

    pub fn members(&self) -> &BTreeSet<CameraId> {
        &self.members
    }

    pub fn supreme(&self) -> &CameraId {
        &self.supreme
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SupremeMode {
    /// Best per-camera counting accuracy on a calibration run.
    ValidationAccuracy,
    /// `beta * normalised footprint area + (1 - beta) * quality`.
    StaticScore,
}

pub enum SupremeInput<'a> {
    Accuracy(&'a BTreeMap<CameraId, f64>),
    Cameras { cams: &'a [CameraConfig], beta: f64 },
}

/// Arg-max over the members; ties go to the lowest id.
pub fn select_supreme(members: &BTreeSet<CameraId>, input: SupremeInput<'_>) -> Result<CameraId> {
    let scores: Vec<(CameraId, f64)> = match input {
        SupremeInput::Accuracy(acc) => members
            .iter()
            .map(|c| {
                acc.get(c)
                    .map(|a| (c.clone(), *a))
                    .ok_or_else(|| Error::MissingInput(format!("accuracy for camera {c}")))
            })
            .collect::<Result<_>>()?,
        SupremeInput::Cameras { cams, beta } => {
            let mut area_quality = Vec::new();
            for c in members {
                let cam = cams
                    .iter()
                    .find(|k| &k.camera_id == c)
                    .ok_or_else(|| Error::MissingInput(format!("config for camera {c}")))?;
                area_quality.push((c.clone(), fov_footprint(cam)?.area(), cam.quality));
            }
            static_scores(&area_quality, beta)
        }
    };
    let mut best: Option<(CameraId, f64)> = None;
    for (c, s) in scores {
        if best.as_ref().is_none_or(|(_, b)| s > *b) {
            best = Some((c, s));
        }
    }
    best.map(|(c, _)| c).ok_or_else(|| Error::MissingInput("empty cluster".into()))
}

/// `beta * area / max_area + (1 - beta) * quality` per camera.
pub fn static_scores(area_quality: &[(CameraId, f64, f64)], beta: f64) -> Vec<(CameraId, f64)> {
    let max_area = area_quality.iter().fold(0.0f64, |m, (_, a, _)| m.max(*a));
    area_quality
        .iter()
        .map(|(c, a, q)| {
            let norm = if max_area > 0.0 { a / max_area } else { 0.0 };
            (c.clone(), beta * norm + (1.0 - beta) * q)
        })
        .collect()
}
