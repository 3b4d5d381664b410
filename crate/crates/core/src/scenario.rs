//! Scenario configuration (TOML) and the pipeline that turns a config and a
//! seed into everything a server run needs: cameras, scene, logs, ground
//! truth and the clustered network.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::detsim::{
    generate_scene, invert_boxes, render_ground_truth, synthesize_detections, visible_counts, DetectionLog, NoiseModel,
    SceneSpec, WorldScene,
};
use crate::filter::FilterParams;
use crate::fusion::{count_people, fuse, FusionParams};
use crate::geometry::{Homography, Point2};
use crate::server::{compute_accuracy, Network, ServerParams, TrustParams};
use crate::topology::{cluster_cameras, overlap_matrix, select_supreme, CameraConfig, Cluster, SupremeInput, SupremeMode};
use crate::{CameraId, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub seed: u64,
    pub n_frames: usize,
    pub fps: f64,
    #[serde(default = "default_person_height")]
    pub person_height_m: f64,
    pub scene: SceneSpec,
    pub cameras: Vec<CameraSpec>,
    #[serde(default)]
    pub filter: FilterParams<f64>,
    #[serde(default)]
    pub fusion: FusionParams<f64>,
    #[serde(default)]
    pub topology: TopologyParams,
    #[serde(default)]
    pub trust: TrustParams,
}

fn default_person_height() -> f64 {
    1.7
}

fn one() -> f64 {
    1.0
}

/// A camera as written in the config. Exactly one of `world_to_image` and
/// `ground_quad` must be given; a ground quad lists the world points seen at
/// the image corners top-left, top-right, bottom-right, bottom-left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraSpec {
    pub camera_id: CameraId,
    pub image_w: u32,
    pub image_h: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub world_to_image: Option<[[f64; 3]; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_quad: Option<[[f64; 2]; 4]>,
    #[serde(default = "one")]
    pub quality: f64,
    #[serde(default = "one")]
    pub vertical_scale: f64,
    #[serde(default)]
    pub noise: NoiseModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TopologyParams {
    pub overlap_threshold: f64,
    pub supreme_mode: SupremeMode,
    pub beta: f64,
    /// Cameras pinned as supreme; a cluster containing one skips selection.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub supremes: Vec<CameraId>,
}

impl Default for TopologyParams {
    fn default() -> Self {
        TopologyParams {
            overlap_threshold: 0.3,
            supreme_mode: SupremeMode::ValidationAccuracy,
            beta: 0.5,
            supremes: Vec::new(),
        }
    }
}

impl CameraSpec {
    pub fn to_camera(&self) -> Result<CameraConfig> {
        let path = |f: &str| format!("cameras[{}].{f}", self.camera_id);
        let h = match (&self.world_to_image, &self.ground_quad) {
            (Some(m), None) => Homography::new(*m).map_err(|e| Error::config(path("world_to_image"), e.to_string()))?,
            (None, Some(q)) => {
                let (w, hh) = (self.image_w as f64, self.image_h as f64);
                let src = q.map(|[x, y]| Point2::new(x, y));
                let dst = [Point2::new(0.0, 0.0), Point2::new(w, 0.0), Point2::new(w, hh), Point2::new(0.0, hh)];
                Homography::from_correspondences(&src, &dst).map_err(|e| Error::config(path("ground_quad"), e.to_string()))?
            }
            _ => return Err(Error::config(path("world_to_image"), "give exactly one of world_to_image or ground_quad")),
        };
        Ok(CameraConfig {
            camera_id: self.camera_id.clone(),
            image_w: self.image_w,
            image_h: self.image_h,
            world_to_image: h,
            quality: self.quality,
            noise: self.noise,
            vertical_scale: self.vertical_scale,
        })
    }
}

impl ScenarioConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let de = toml::de::Deserializer::parse(s).map_err(|e| Error::config("", e.to_string().trim()))?;
        let cfg: ScenarioConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::config(path, e.into_inner().to_string().trim())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_frames == 0 {
            return Err(Error::config("n_frames", "must be positive"));
        }
        if !(self.fps > 0.0 && self.fps.is_finite()) {
            return Err(Error::config("fps", "must be positive"));
        }
        if !(self.person_height_m > 0.0 && self.person_height_m.is_finite()) {
            return Err(Error::config("person_height_m", "must be positive"));
        }
        let s = &self.scene;
        for (name, v) in [
            ("room_w_m", s.room_w_m),
            ("room_h_m", s.room_h_m),
            ("max_speed_mps", s.max_speed_mps),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(format!("scene.{name}"), "must be positive"));
            }
        }
        for (name, v) in [
            ("margin_m", s.margin_m),
            ("anchor_spacing_m", s.anchor_spacing_m),
            ("wander_radius_m", s.wander_radius_m),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::config(format!("scene.{name}"), "must be non-negative"));
            }
        }
        if self.cameras.is_empty() {
            return Err(Error::config("cameras", "at least one camera is required"));
        }
        let mut seen = BTreeSet::new();
        for c in &self.cameras {
            let path = |f: &str| format!("cameras[{}].{f}", c.camera_id);
            if !seen.insert(&c.camera_id) {
                return Err(Error::config(path("camera_id"), format!("duplicate camera id {}", c.camera_id)));
            }
            if c.image_w == 0 || c.image_h == 0 {
                return Err(Error::config(path("image_w"), "image dimensions must be positive"));
            }
            if !(0.0..=1.0).contains(&c.quality) {
                return Err(Error::config(path("quality"), "must be in [0, 1]"));
            }
            if !(c.vertical_scale > 0.0 && c.vertical_scale.is_finite()) {
                return Err(Error::config(path("vertical_scale"), "must be positive"));
            }
            c.noise.validate().map_err(|(f, msg)| Error::config(path(&format!("noise.{f}")), msg))?;
            c.to_camera()?;
        }
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if !(self.filter.match_iou > 0.0 && self.filter.match_iou <= 1.0) {
            return Err(Error::config("filter.match_iou", "must be in (0, 1]"));
        }
        let f = &self.fusion;
        for (name, v) in [
            ("match_gate_iou", f.match_gate_iou),
            ("nms_iou", f.nms_iou),
            ("count_conf_threshold", f.count_conf_threshold),
        ] {
            if !unit(v) {
                return Err(Error::config(format!("fusion.{name}"), "must be in [0, 1]"));
            }
        }
        if !(f.boost_alpha >= 0.0 && f.boost_alpha.is_finite()) {
            return Err(Error::config("fusion.boost_alpha", "must be non-negative"));
        }
        let t = &self.topology;
        if !(t.overlap_threshold > 0.0 && t.overlap_threshold <= 1.0) {
            return Err(Error::config("topology.overlap_threshold", "must be in (0, 1]"));
        }
        if !unit(t.beta) {
            return Err(Error::config("topology.beta", "must be in [0, 1]"));
        }
        for id in &t.supremes {
            if !seen.contains(id) {
                return Err(Error::config("topology.supremes", format!("unknown camera {id}")));
            }
        }
        let tr = &self.trust;
        if !(tr.learning_rate > 0.0 && tr.learning_rate <= 1.0) {
            return Err(Error::config("trust.learning_rate", "must be in (0, 1]"));
        }
        if !unit(tr.initial_score) {
            return Err(Error::config("trust.initial_score", "must be in [0, 1]"));
        }
        if !unit(tr.min_trust) {
            return Err(Error::config("trust.min_trust", "must be in [0, 1]"));
        }
        if !(tr.agreement_iou > 0.0 && tr.agreement_iou <= 1.0) {
            return Err(Error::config("trust.agreement_iou", "must be in (0, 1]"));
        }
        for id in &tr.adversarial {
            if !seen.contains(id) {
                return Err(Error::config("trust.adversarial", format!("unknown camera {id}")));
            }
        }
        Ok(())
    }

    pub fn camera_configs(&self) -> Result<Vec<CameraConfig>> {
        self.cameras.iter().map(CameraSpec::to_camera).collect()
    }

    pub fn server_params(&self) -> ServerParams {
        ServerParams {
            filter: self.filter,
            fusion: self.fusion,
            trust: self.trust.clone(),
        }
    }

    /// Sets every camera's noise model.
    pub fn with_noise(mut self, noise: NoiseModel) -> Self {
        for c in &mut self.cameras {
            c.noise = noise;
        }
        self
    }
}

/// Four cameras at the corners of a 10 m x 8 m room looking inwards, 18
/// people milling about. Every camera sees the whole floor, with perspective
/// shrinking the far side of the room.
pub fn salsa_like() -> ScenarioConfig {
    let (w, h) = (10.0, 8.0);
    let (pad, stretch) = (0.5, 1.5);
    // (id, corner the camera sits at); quality breaks the selection tie.
    let corners = [("1", 0, 0, 0.8), ("2", 1, 0, 0.8), ("3", 1, 1, 0.8), ("4", 0, 1, 0.9)];
    let cameras = corners
        .iter()
        .map(|&(id, cx, cy, quality)| {
            let xs = [-pad, w + pad];
            let ys = [-pad, h + pad];
            // image TL, TR, BR, BL see these floor corners
            let mut quad = [[xs[0], ys[0]], [xs[1], ys[0]], [xs[1], ys[1]], [xs[0], ys[1]]];
            let far = quad
                .iter_mut()
                .find(|p| (p[0] > 0.0) != (cx == 1) && (p[1] > 0.0) != (cy == 1))
                .expect("one corner is opposite the camera");
            far[0] += if far[0] > 0.0 { stretch } else { -stretch };
            far[1] += if far[1] > 0.0 { stretch } else { -stretch };
            CameraSpec {
                camera_id: CameraId::from(id),
                image_w: 640,
                image_h: 480,
                world_to_image: None,
                ground_quad: Some(quad),
                quality,
                vertical_scale: 1.0,
                noise: NoiseModel::default(),
            }
        })
        .collect();
    ScenarioConfig {
        seed: 1,
        n_frames: 300,
        fps: 10.0,
        person_height_m: 1.7,
        scene: SceneSpec {
            count: 18,
            room_w_m: w,
            room_h_m: h,
            margin_m: 0.5,
            anchor_spacing_m: 1.3,
            wander_radius_m: 0.3,
            max_speed_mps: 0.4,
        },
        cameras,
        filter: FilterParams::default(),
        fusion: FusionParams::default(),
        topology: TopologyParams {
            supreme_mode: SupremeMode::StaticScore,
            ..TopologyParams::default()
        },
        trust: TrustParams::default(),
    }
}

pub fn preset(name: &str) -> Option<ScenarioConfig> {
    match name {
        "salsa-like" => Some(salsa_like()),
        _ => None,
    }
}

/// Everything a server run consumes.
#[derive(Debug, Clone)]
pub struct RunInputs {
    pub network: Network,
    pub scene: WorldScene,
    pub gt_logs: BTreeMap<CameraId, DetectionLog<f64>>,
    pub det_logs: BTreeMap<CameraId, DetectionLog<f64>>,
    /// People visible to at least one camera, per frame.
    pub gt_counts: Vec<usize>,
}

/// Generates the scene and all logs for `seed`.
pub fn build_inputs(cfg: &ScenarioConfig, seed: u64) -> Result<RunInputs> {
    cfg.validate()?;
    let cams = cfg.camera_configs()?;
    let scene = generate_scene(&cfg.scene, cfg.n_frames, cfg.fps, cfg.person_height_m, seed)?;
    let gt_counts = visible_counts(&scene, &cams)?;
    let mut gt_logs = BTreeMap::new();
    let mut det_logs = BTreeMap::new();
    for cam in &cams {
        let gt = render_ground_truth(&scene, cam)?;
        let mut det = synthesize_detections(&gt, &cam.noise, cam.image_size(), seed);
        if cfg.trust.adversarial.contains(&cam.camera_id) {
            det = invert_boxes(&det, cam.image_size());
        }
        gt_logs.insert(cam.camera_id.clone(), gt);
        det_logs.insert(cam.camera_id.clone(), det);
    }
    let network = build_network(cfg, cams, &det_logs, &gt_counts)?;
    Ok(RunInputs {
        network,
        scene,
        gt_logs,
        det_logs,
        gt_counts,
    })
}

/// Clusters the cameras and picks each cluster's supreme. Validation-accuracy
/// selection scores each camera's own NMS'd count against `gt_counts`.
pub fn build_network(
    cfg: &ScenarioConfig,
    cams: Vec<CameraConfig>,
    det_logs: &BTreeMap<CameraId, DetectionLog<f64>>,
    gt_counts: &[usize],
) -> Result<Network> {
    let overlap = overlap_matrix(&cams)?;
    let topo = &cfg.topology;
    let mut clusters = Vec::new();
    for members in cluster_cameras(&overlap, topo.overlap_threshold) {
        let pinned: Vec<&CameraId> = topo.supremes.iter().filter(|c| members.contains(*c)).collect();
        let supreme = match pinned.as_slice() {
            [one] => (*one).clone(),
            [] => match topo.supreme_mode {
                SupremeMode::StaticScore => select_supreme(&members, SupremeInput::Cameras { cams: &cams, beta: topo.beta })?,
                SupremeMode::ValidationAccuracy => {
                    let mut acc = BTreeMap::new();
                    for c in &members {
                        let log = det_logs.get(c).ok_or_else(|| Error::MissingInput(format!("detection log for camera {c}")))?;
                        acc.insert(c.clone(), solo_accuracy(log, gt_counts, &cfg.fusion)?);
                    }
                    select_supreme(&members, SupremeInput::Accuracy(&acc))?
                }
            },
            _ => return Err(Error::config("topology.supremes", "two pinned supremes share a cluster")),
        };
        clusters.push(Cluster::new(members, supreme)?);
    }
    Network::new(cams, clusters)
}

fn solo_accuracy(log: &DetectionLog<f64>, gt_counts: &[usize], params: &FusionParams<f64>) -> Result<f64> {
    if log.n_frames() != gt_counts.len() {
        return Err(Error::Scenario(format!(
            "camera {} has {} frames, ground truth has {}",
            log.camera_id,
            log.n_frames(),
            gt_counts.len()
        )));
    }
    let mut pairs = Vec::with_capacity(gt_counts.len());
    for (boxes, &gt) in log.frames.iter().zip(gt_counts) {
        let one = BTreeMap::from([(log.camera_id.clone(), boxes.clone())]);
        let fused = fuse(&one, &log.camera_id, &BTreeMap::new(), params)?;
        pairs.push((count_people(&fused, params), gt));
    }
    compute_accuracy(&pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::fov_footprint;

    #[test]
    fn preset_round_trips_through_toml() {
        let cfg = salsa_like();
        let text = cfg.to_toml_string();
        assert_eq!(ScenarioConfig::from_toml_str(&text).unwrap(), cfg);
    }

    #[test]
    fn preset_cameras_cover_the_room() {
        for cam in salsa_like().camera_configs().unwrap() {
            let f = fov_footprint(&cam).unwrap();
            for p in [(0.0, 0.0), (10.0, 0.0), (10.0, 8.0), (0.0, 8.0)] {
                assert!(f.contains(&Point2::new(p.0, p.1)), "camera {} misses {p:?}", cam.camera_id);
            }
        }
    }

    #[test]
    fn unknown_key_names_its_path() {
        let mut text = salsa_like().to_toml_string();
        text = text.replacen("match_iou", "match_iuo", 1);
        let err = ScenarioConfig::from_toml_str(&text).unwrap_err();
        match err {
            Error::Config { path, msg } => {
                assert_eq!(path, "filter.match_iuo");
                assert!(msg.contains("match_iuo"), "{msg}");
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn bad_value_names_its_path() {
        let mut cfg = salsa_like();
        cfg.cameras[2].noise.miss_prob = 1.5;
        let err = ScenarioConfig::from_toml_str(&cfg.to_toml_string()).unwrap_err();
        assert!(matches!(err, Error::Config { ref path, .. } if path == "cameras[3].noise.miss_prob"), "{err}");

        let text = salsa_like().to_toml_string().replacen("n_frames = 300", "n_frames = \"many\"", 1);
        let err = ScenarioConfig::from_toml_str(&text).unwrap_err();
        assert!(matches!(err, Error::Config { ref path, .. } if path == "n_frames"), "{err}");
    }

    #[test]
    fn duplicate_camera_rejected() {
        let mut cfg = salsa_like();
        cfg.cameras[1].camera_id = CameraId::from("1");
        let err = cfg.validate().unwrap_err();
        assert!(err.to_string().contains("duplicate camera id 1"), "{err}");
    }

    #[test]
    fn camera_needs_exactly_one_geometry() {
        let mut cfg = salsa_like();
        cfg.cameras[0].world_to_image = Some([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);
        assert!(cfg.validate().is_err());
        cfg.cameras[0].ground_quad = None;
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn preset_network_is_one_cluster_with_camera_4() {
        let inputs = build_inputs(&salsa_like(), 3).unwrap();
        let clusters = inputs.network.clusters();
        assert_eq!(clusters.len(), 1);
        assert_eq!(clusters[0].members().len(), 4);
        assert_eq!(clusters[0].supreme(), &CameraId::from("4"));
        assert!(inputs.gt_counts.iter().all(|&c| c == 18));
    }

    #[test]
    fn build_is_deterministic() {
        let a = build_inputs(&salsa_like(), 9).unwrap();
        let b = build_inputs(&salsa_like(), 9).unwrap();
        assert_eq!(a.det_logs, b.det_logs);
        let c = build_inputs(&salsa_like(), 10).unwrap();
        assert_ne!(a.det_logs, c.det_logs);
    }
}
