//! Synthetic stand-in for an object detector.
//!
//! Ground truth comes from projecting world-plane people into each camera;
//! detections are ground truth passed through a seeded noise model (misses,
//! jitter, confidence spread, false positives). Logs can be written to and
//! read from newline-delimited JSON so externally produced detections can be
//! fed through the same pipeline.

mod log;
mod scene;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::geometry::{BBox, Point2};
use crate::topology::CameraConfig;
use crate::{CameraId, Error, Real, Result};

pub(crate) use log::BoxRecord;
pub use log::{load_log, read_log, save_log, write_log};
pub use scene::{generate_scene, SceneSpec, WorldObject, WorldScene};

/// Person box width over height.
pub const PERSON_ASPECT: f64 = 0.4;

/// Per-camera, per-frame detections. `frames[i]` holds frame `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionLog<T> {
    pub camera_id: CameraId,
    pub frames: Vec<Vec<BBox<T>>>,
}

impl<T: Real> DetectionLog<T> {
    pub fn empty(camera_id: CameraId, n_frames: usize) -> Self {
        DetectionLog {
            camera_id,
            frames: vec![Vec::new(); n_frames],
        }
    }

    pub fn n_frames(&self) -> usize {
        self.frames.len()
    }

    pub fn validate(&self) -> Result<()> {
        for (f, boxes) in self.frames.iter().enumerate() {
            for b in boxes {
                if b.camera_id != self.camera_id || b.frame_idx != f {
                    return Err(Error::Schema {
                        frame: f,
                        msg: format!("box tagged camera {} frame {}", b.camera_id, b.frame_idx),
                    });
                }
                b.validate().map_err(|e| Error::Schema {
                    frame: f,
                    msg: e.to_string(),
                })?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseModel {
    /// Independent per-box drop probability, in [0, 1).
    pub miss_prob: f64,
    /// Expected false boxes per frame (Poisson).
    pub false_pos_rate: f64,
    /// Std-dev of the per-axis centre shift, px.
    pub center_jitter_std: f64,
    /// Std-dev of the width/height perturbation, px.
    pub size_jitter_std: f64,
    pub conf_mean: f64,
    pub conf_std: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel {
            miss_prob: 0.1,
            false_pos_rate: 0.01,
            center_jitter_std: 6.0,
            size_jitter_std: 4.0,
            conf_mean: 0.5,
            conf_std: 0.15,
        }
    }
}

impl NoiseModel {
    /// A perfect detector: output equals ground truth.
    pub fn zero() -> Self {
        NoiseModel {
            miss_prob: 0.0,
            false_pos_rate: 0.0,
            center_jitter_std: 0.0,
            size_jitter_std: 0.0,
            conf_mean: 1.0,
            conf_std: 0.0,
        }
    }

    /// Checks every field; the error carries the offending field name.
    pub fn validate(&self) -> std::result::Result<(), (&'static str, String)> {
        let finite = [
            ("miss_prob", self.miss_prob),
            ("false_pos_rate", self.false_pos_rate),
            ("center_jitter_std", self.center_jitter_std),
            ("size_jitter_std", self.size_jitter_std),
            ("conf_mean", self.conf_mean),
            ("conf_std", self.conf_std),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return Err((name, "must be finite".into()));
            }
        }
        if !(0.0..1.0).contains(&self.miss_prob) {
            return Err(("miss_prob", format!("{} not in [0, 1)", self.miss_prob)));
        }
        for (name, v) in [
            ("false_pos_rate", self.false_pos_rate),
            ("center_jitter_std", self.center_jitter_std),
            ("size_jitter_std", self.size_jitter_std),
            ("conf_std", self.conf_std),
        ] {
            if v < 0.0 {
                return Err((name, format!("{v} is negative")));
            }
        }
        if !(self.conf_mean > 0.0 && self.conf_mean <= 1.0) {
            return Err(("conf_mean", format!("{} not in (0, 1]", self.conf_mean)));
        }
        Ok(())
    }
}

/// Projects a person standing at `foot` (world metres) into `cam`.
///
/// The foot lands at the bottom centre of the box. The head is the ground
/// point `vertical_scale * person_height_m` metres towards the top of the
/// image (world `-y`), so the box height shrinks with distance the same way
/// floor distances do; width is [`PERSON_ASPECT`] of the height. Returns
/// `None` when the foot point falls outside the image.
pub fn project_person(cam: &CameraConfig, foot: Point2<f64>, person_height_m: f64, frame_idx: usize) -> Result<Option<BBox<f64>>> {
    let q = cam.world_to_image.apply(foot)?;
    if !(q.x >= 0.0 && q.x < cam.image_w as f64 && q.y >= 0.0 && q.y < cam.image_h as f64) {
        return Ok(None);
    }
    let head = cam
        .world_to_image
        .apply(Point2::new(foot.x, foot.y - cam.vertical_scale * person_height_m))?;
    let h = q.distance(&head);
    let w = PERSON_ASPECT * h;
    let b = BBox::new(q.x - w / 2.0, q.y - h, w, h, 1.0, cam.camera_id.clone(), frame_idx).map_err(|_| Error::DegeneratePoint)?;
    Ok(Some(b))
}

/// One confidence-1 box per object whose foot point is inside the image.
pub fn render_ground_truth(scene: &WorldScene, cam: &CameraConfig) -> Result<DetectionLog<f64>> {
    let mut log = DetectionLog::empty(cam.camera_id.clone(), scene.n_frames);
    for (f, boxes) in log.frames.iter_mut().enumerate() {
        for obj in &scene.objects {
            if let Some(p) = obj.position_at(f) {
                if let Some(b) = project_person(cam, p, scene.person_height_m, f)? {
                    boxes.push(b);
                }
            }
        }
    }
    Ok(log)
}

/// Number of objects visible to at least one camera, per frame.
pub fn visible_counts(scene: &WorldScene, cams: &[CameraConfig]) -> Result<Vec<usize>> {
    let mut counts = vec![0; scene.n_frames];
    for (f, count) in counts.iter_mut().enumerate() {
        for obj in &scene.objects {
            let Some(p) = obj.position_at(f) else { continue };
            for cam in cams {
                if project_person(cam, p, scene.person_height_m, f)?.is_some() {
                    *count += 1;
                    break;
                }
            }
        }
    }
    Ok(counts)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ImageSize {
    pub width: u32,
    pub height: u32,
}

/// Deterministic RNG for one `(seed, camera, frame)` cell, independent of the
/// order in which cells are generated.
pub fn cell_rng(seed: u64, camera: &CameraId, frame_idx: usize) -> ChaCha8Rng {
    let cam_hash = camera
        .as_str()
        .bytes()
        .fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3));
    let key = splitmix64(splitmix64(seed) ^ cam_hash) ^ splitmix64(frame_idx as u64 ^ 0x9e37_79b9_7f4a_7c15);
    ChaCha8Rng::seed_from_u64(splitmix64(key))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Passes a ground-truth log through the noise model.
pub fn synthesize_detections(gt: &DetectionLog<f64>, noise: &NoiseModel, image: ImageSize, seed: u64) -> DetectionLog<f64> {
    let mut out = DetectionLog::empty(gt.camera_id.clone(), gt.n_frames());
    let center = (noise.center_jitter_std > 0.0).then(|| Normal::new(0.0, noise.center_jitter_std).unwrap());
    let size = (noise.size_jitter_std > 0.0).then(|| Normal::new(0.0, noise.size_jitter_std).unwrap());
    let conf = (noise.conf_std > 0.0).then(|| Normal::new(noise.conf_mean, noise.conf_std).unwrap());
    let false_pos = (noise.false_pos_rate > 0.0).then(|| Poisson::new(noise.false_pos_rate).unwrap());
    let (iw, ih) = (image.width as f64, image.height as f64);

    for (f, gt_boxes) in gt.frames.iter().enumerate() {
        let mut rng = cell_rng(seed, &gt.camera_id, f);
        let frame = &mut out.frames[f];
        for b in gt_boxes {
            if rng.random::<f64>() < noise.miss_prob {
                continue;
            }
            let mut d = b.clone();
            if let Some(n) = &size {
                let cx = d.x_min + d.width / 2.0;
                let by = d.y_min + d.height;
                d.width = (d.width + n.sample(&mut rng)).max(1.0);
                d.height = (d.height + n.sample(&mut rng)).max(1.0);
                d.x_min = cx - d.width / 2.0;
                d.y_min = by - d.height;
            }
            if let Some(n) = &center {
                d.x_min += n.sample(&mut rng);
                d.y_min += n.sample(&mut rng);
            }
            d.confidence = match &conf {
                Some(n) => n.sample(&mut rng),
                None => noise.conf_mean,
            }
            .clamp(0.01, 1.0);
            frame.push(d);
        }
        if let Some(p) = &false_pos {
            let k = p.sample(&mut rng) as usize;
            let hi = noise.conf_mean.max(0.01 + f64::EPSILON);
            for _ in 0..k {
                let h = rng.random_range(ih / 12.0..ih / 4.0);
                let w = PERSON_ASPECT * h;
                let cx = rng.random_range(0.0..iw);
                let cy = rng.random_range(0.0..ih);
                let c = rng.random_range(0.01..hi);
                frame.push(BBox {
                    x_min: cx - w / 2.0,
                    y_min: cy - h / 2.0,
                    width: w,
                    height: h,
                    confidence: c,
                    class_id: 0,
                    camera_id: gt.camera_id.clone(),
                    frame_idx: f,
                });
            }
        }
    }
    out
}

/// Point-reflects every box through the image centre. Used to model a
/// camera that shares deliberately wrong detections.
pub fn invert_boxes(log: &DetectionLog<f64>, image: ImageSize) -> DetectionLog<f64> {
    let (iw, ih) = (image.width as f64, image.height as f64);
    let frames = log
        .frames
        .iter()
        .map(|boxes| {
            boxes
                .iter()
                .map(|b| BBox {
                    x_min: iw - b.x_min - b.width,
                    y_min: ih - b.y_min - b.height,
                    ..b.clone()
                })
                .collect()
        })
        .collect();
    DetectionLog {
        camera_id: log.camera_id.clone(),
        frames,
    }
}
