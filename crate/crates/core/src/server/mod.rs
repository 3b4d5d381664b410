//! The edge server: a frame-ordered event loop over camera messages.
//!
//! Each frame, cameras decide whether to upload (their own tracker saw a new
//! object; collaborators must also show something the server's global tracks
//! do not already cover). The server counts people by fusing, per cluster,
//! either the latest uploaded detections of every camera or, in knowledge
//! sharing mode, the boxes the chosen subset shares at every frame.

mod message;
mod report;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::detsim::DetectionLog;
use crate::filter::{FilterParams, Tracker};
use crate::fusion::{count_people, fuse, match_boxes, FusionParams};
use crate::geometry::{transform_box, BBox, Homography};
use crate::topology::{overlap_matrix, CameraConfig, Cluster};
use crate::trust::{trust_label, TrustLedger};
use crate::{CameraId, Error, Result};

pub use message::{read_messages, write_messages, Message, MessageKind};
pub use report::{write_cameras_csv, write_counts_csv, write_outputs, CameraStats, FrameCount, RunReport, TrustEntry};

/// Cameras, their clusters, and each camera's image-to-supreme-image map.
#[derive(Debug, Clone)]
pub struct Network {
    cameras: Vec<CameraConfig>,
    clusters: Vec<Cluster>,
    to_supreme: BTreeMap<CameraId, Homography<f64>>,
}

impl Network {
    /// Every camera must sit in exactly one cluster.
    pub fn new(cameras: Vec<CameraConfig>, clusters: Vec<Cluster>) -> Result<Self> {
        let by_id: BTreeMap<&CameraId, &CameraConfig> = cameras.iter().map(|c| (&c.camera_id, c)).collect();
        if by_id.len() != cameras.len() {
            return Err(Error::Scenario("duplicate camera id".into()));
        }
        let mut seen = BTreeSet::new();
        let mut to_supreme = BTreeMap::new();
        for cl in &clusters {
            let sup = by_id
                .get(cl.supreme())
                .ok_or_else(|| Error::Scenario(format!("unknown camera {}", cl.supreme())))?;
            for m in cl.members() {
                let cam = by_id.get(m).ok_or_else(|| Error::Scenario(format!("unknown camera {m}")))?;
                if !seen.insert(m.clone()) {
                    return Err(Error::Scenario(format!("camera {m} is in two clusters")));
                }
                let h = sup.world_to_image.compose(&cam.world_to_image.inverse()?)?;
                to_supreme.insert(m.clone(), h);
            }
        }
        if seen.len() != cameras.len() {
            return Err(Error::Scenario("every camera needs a cluster".into()));
        }
        Ok(Network {
            cameras,
            clusters,
            to_supreme,
        })
    }

    pub fn cameras(&self) -> &[CameraConfig] {
        &self.cameras
    }

    pub fn clusters(&self) -> &[Cluster] {
        &self.clusters
    }

    pub fn to_supreme(&self) -> &BTreeMap<CameraId, Homography<f64>> {
        &self.to_supreme
    }

    pub fn camera_ids(&self) -> BTreeSet<CameraId> {
        self.cameras.iter().map(|c| c.camera_id.clone()).collect()
    }

    /// The order a subset sweep adds cameras in: every supreme first, then
    /// the rest by overlap with their supreme (largest first, ties by id).
    pub fn accretion_order(&self) -> Result<Vec<CameraId>> {
        let m = overlap_matrix(&self.cameras)?;
        let mut out: Vec<CameraId> = self.clusters.iter().map(|c| c.supreme().clone()).collect();
        let mut rest: Vec<(f64, CameraId)> = Vec::new();
        for c in &self.clusters {
            for id in c.members().iter().filter(|m| *m != c.supreme()) {
                rest.push((m.get(id, c.supreme()).unwrap_or(0.0), id.clone()));
            }
        }
        rest.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
        out.extend(rest.into_iter().map(|(_, id)| id));
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrustParams {
    /// Gate shares by trust score and update scores from fusion agreement.
    pub enabled: bool,
    pub learning_rate: f64,
    pub initial_score: f64,
    pub min_trust: f64,
    /// IoU a shared box needs with a box another camera contributed to for
    /// it to count as agreeing.
    pub agreement_iou: f64,
    /// Cameras that share point-reflected boxes.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub adversarial: Vec<CameraId>,
}

impl Default for TrustParams {
    fn default() -> Self {
        TrustParams {
            enabled: false,
            learning_rate: 0.1,
            initial_score: 0.5,
            min_trust: 0.4,
            agreement_iou: 0.3,
            adversarial: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServerParams {
    pub filter: FilterParams<f64>,
    pub fusion: FusionParams<f64>,
    pub trust: TrustParams,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RunMode {
    Isolated,
    Collaborative,
    KnowledgeSharing(BTreeSet<CameraId>),
}

impl RunMode {
    pub fn name(&self) -> &'static str {
        match self {
            RunMode::Isolated => "isolated",
            RunMode::Collaborative => "collaborative",
            RunMode::KnowledgeSharing(_) => "knowledge-sharing",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: RunReport,
    pub messages: Vec<Message>,
}

/// Mean over frames of `max(0, 1 - |pred - gt| / max(gt, 1))`.
pub fn compute_accuracy(per_frame: &[(usize, usize)]) -> Result<f64> {
    if per_frame.is_empty() {
        return Err(Error::EmptyInput);
    }
    let sum: f64 = per_frame
        .iter()
        .map(|&(pred, gt)| (1.0 - pred.abs_diff(gt) as f64 / gt.max(1) as f64).max(0.0))
        .sum();
    Ok(sum / per_frame.len() as f64)
}

pub fn run_isolated(
    net: &Network,
    logs: &BTreeMap<CameraId, DetectionLog<f64>>,
    gt_counts: &[usize],
    params: &ServerParams,
    seed: u64,
) -> Result<RunOutput> {
    run(net, logs, gt_counts, params, &RunMode::Isolated, seed)
}

pub fn run_collaborative(
    net: &Network,
    logs: &BTreeMap<CameraId, DetectionLog<f64>>,
    gt_counts: &[usize],
    params: &ServerParams,
    seed: u64,
) -> Result<RunOutput> {
    run(net, logs, gt_counts, params, &RunMode::Collaborative, seed)
}

pub fn run_knowledge_sharing(
    net: &Network,
    logs: &BTreeMap<CameraId, DetectionLog<f64>>,
    gt_counts: &[usize],
    subset: &BTreeSet<CameraId>,
    params: &ServerParams,
    seed: u64,
) -> Result<RunOutput> {
    run(net, logs, gt_counts, params, &RunMode::KnowledgeSharing(subset.clone()), seed)
}

fn check_inputs(net: &Network, logs: &BTreeMap<CameraId, DetectionLog<f64>>, gt_counts: &[usize], mode: &RunMode) -> Result<()> {
    if gt_counts.is_empty() {
        return Err(Error::EmptyInput);
    }
    for c in net.camera_ids() {
        let log = logs.get(&c).ok_or_else(|| Error::MissingInput(format!("detection log for camera {c}")))?;
        if log.n_frames() != gt_counts.len() {
            return Err(Error::Scenario(format!(
                "camera {c} has {} frames, ground truth has {}",
                log.n_frames(),
                gt_counts.len()
            )));
        }
    }
    if let RunMode::KnowledgeSharing(subset) = mode {
        if subset.is_empty() {
            return Err(Error::Scenario("knowledge-sharing subset is empty".into()));
        }
        let known = net.camera_ids();
        if let Some(c) = subset.iter().find(|c| !known.contains(*c)) {
            return Err(Error::Scenario(format!("subset names unknown camera {c}")));
        }
        for cl in net.clusters() {
            if cl.members().iter().any(|m| subset.contains(m)) && !subset.contains(cl.supreme()) {
                return Err(Error::Scenario(format!("subset must include supreme camera {}", cl.supreme())));
            }
        }
    }
    Ok(())
}

fn moved(h: &Homography<f64>, boxes: &[BBox<f64>]) -> Result<Vec<BBox<f64>>> {
    boxes.iter().map(|b| transform_box(h, b)).collect()
}

/// Runs one experiment. Frames are processed in order; within a frame each
/// cluster's supreme camera goes first, then the others by id.
pub fn run(
    net: &Network,
    logs: &BTreeMap<CameraId, DetectionLog<f64>>,
    gt_counts: &[usize],
    params: &ServerParams,
    mode: &RunMode,
    seed: u64,
) -> Result<RunOutput> {
    check_inputs(net, logs, gt_counts, mode)?;
    let n_frames = gt_counts.len();
    let fusion = &params.fusion;
    let trust = &params.trust;
    let sharing = matches!(mode, RunMode::KnowledgeSharing(_));

    let orders: Vec<Vec<CameraId>> = net
        .clusters()
        .iter()
        .map(|cl| {
            let mut order = vec![cl.supreme().clone()];
            order.extend(cl.members().iter().filter(|m| *m != cl.supreme()).cloned());
            match mode {
                RunMode::KnowledgeSharing(subset) => order.retain(|c| subset.contains(c)),
                _ => {}
            }
            order
        })
        .collect();

    let mut own: BTreeMap<&CameraId, Tracker<f64>> =
        orders.iter().flatten().map(|c| (c, Tracker::new(params.filter))).collect();
    let mut global: Vec<Tracker<f64>> = orders.iter().map(|_| Tracker::new(params.filter)).collect();
    let mut held: BTreeMap<CameraId, Vec<BBox<f64>>> = BTreeMap::new();
    let mut sent: BTreeMap<CameraId, usize> = orders.iter().flatten().map(|c| (c.clone(), 0)).collect();
    let mut ledger = TrustLedger::new(trust.learning_rate, trust.initial_score)?;
    let mut first_gated: BTreeMap<CameraId, usize> = BTreeMap::new();
    let mut messages = Vec::new();
    let mut counts = Vec::with_capacity(n_frames);

    for (f, &gt) in gt_counts.iter().enumerate() {
        let mut predicted = 0;
        for (ci, (cl, order)) in net.clusters().iter().zip(&orders).enumerate() {
            if order.is_empty() {
                continue;
            }
            let supreme = cl.supreme();
            let mut fresh: Vec<&CameraId> = Vec::new();
            for cam in order {
                let boxes = &logs[cam].frames[f];
                let novel = own.get_mut(cam).expect("tracker per camera").step(boxes, f) > 0;
                let h = &net.to_supreme()[cam];
                let send = match mode {
                    RunMode::Isolated => novel,
                    _ if cam == supreme => novel,
                    _ => novel && {
                        let mut any_uncovered = false;
                        for b in moved(h, boxes)? {
                            if !global[ci].matches_any(&b, fusion.match_gate_iou) {
                                any_uncovered = true;
                                break;
                            }
                        }
                        any_uncovered
                    },
                };
                if send {
                    *sent.get_mut(cam).expect("counter per camera") += 1;
                    messages.push(Message::new(MessageKind::FrameUpload, cam.clone(), f, boxes.clone())?);
                    held.insert(cam.clone(), boxes.clone());
                    fresh.push(cam);
                    if !matches!(mode, RunMode::Isolated) {
                        global[ci].step(&moved(h, boxes)?, f);
                    }
                }
            }

            let mut shares: BTreeMap<CameraId, Vec<BBox<f64>>> = BTreeMap::new();
            for cam in order {
                let boxes = if sharing {
                    let b = logs[cam].frames[f].clone();
                    messages.push(Message::new(MessageKind::StateShare, cam.clone(), f, b.clone())?);
                    b
                } else {
                    match held.get(cam) {
                        Some(b) => b.clone(),
                        None => continue,
                    }
                };
                shares.insert(cam.clone(), boxes);
            }
            let admitted: BTreeMap<CameraId, Vec<BBox<f64>>> = shares
                .iter()
                .filter(|(c, _)| !trust.enabled || ledger.allows(c, trust.min_trust))
                .map(|(c, b)| (c.clone(), b.clone()))
                .collect();
            let fused = fuse(&admitted, supreme, net.to_supreme(), fusion)?;
            predicted += count_people(&fused, fusion);

            if trust.enabled {
                let rated: Vec<&CameraId> = if sharing { order.iter().collect() } else { fresh };
                for cam in rated {
                    let boxes = &shares[cam];
                    if boxes.is_empty() {
                        continue;
                    }
                    // Consensus = fused boxes some other camera contributed to.
                    let consensus: Vec<BBox<f64>> = fused
                        .iter()
                        .filter(|fb| fb.source_cameras.iter().any(|s| s != cam))
                        .map(|fb| fb.bbox.clone())
                        .collect();
                    let mine = moved(&net.to_supreme()[cam], boxes)?;
                    let gate = FusionParams {
                        match_gate_iou: trust.agreement_iou,
                        ..*fusion
                    };
                    let agreed = match_boxes(&consensus, &mine, &gate).len();
                    ledger.update(cam, agreed as f64 / mine.len() as f64)?;
                }
                for cam in order {
                    if !ledger.allows(cam, trust.min_trust) {
                        first_gated.entry(cam.clone()).or_insert(f);
                    }
                }
            }
        }
        counts.push(FrameCount {
            frame_idx: f,
            predicted,
            ground_truth: gt,
        });
    }

    let pairs: Vec<(usize, usize)> = counts.iter().map(|c| (c.predicted, c.ground_truth)).collect();
    let accuracy = compute_accuracy(&pairs)?;
    let per_camera: BTreeMap<CameraId, CameraStats> = sent
        .into_iter()
        .map(|(c, k)| {
            let stats = CameraStats {
                frames_total: n_frames,
                frames_transmitted: k,
                fraction: k as f64 / n_frames as f64,
            };
            (c, stats)
        })
        .collect();
    let mean_fraction = per_camera.values().map(|s| s.fraction).sum::<f64>() / per_camera.len().max(1) as f64;
    let mut trust_snapshot = BTreeMap::new();
    for c in per_camera.keys() {
        let score = ledger.score(c);
        let (description, label) = trust_label(score)?;
        trust_snapshot.insert(
            c.clone(),
            TrustEntry {
                score,
                description: description.into(),
                label: label.into(),
            },
        );
    }
    let report = RunReport {
        mode: mode.name().into(),
        subset: match mode {
            RunMode::KnowledgeSharing(s) => Some(s.iter().cloned().collect()),
            _ => None,
        },
        seed,
        accuracy,
        mean_fraction,
        per_camera,
        per_frame_counts: counts,
        trust_snapshot,
        first_gated,
        params: params.clone(),
    };
    Ok(RunOutput { report, messages })
}
