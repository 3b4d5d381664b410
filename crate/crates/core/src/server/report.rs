use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{write_messages, Message, ServerParams};
use crate::{CameraId, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraStats {
    pub frames_total: usize,
    pub frames_transmitted: usize,
    pub fraction: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameCount {
    pub frame_idx: usize,
    pub predicted: usize,
    pub ground_truth: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrustEntry {
    pub score: f64,
    pub description: String,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub mode: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub subset: Option<Vec<CameraId>>,
    pub seed: u64,
    pub accuracy: f64,
    pub mean_fraction: f64,
    pub per_camera: BTreeMap<CameraId, CameraStats>,
    pub per_frame_counts: Vec<FrameCount>,
    pub trust_snapshot: BTreeMap<CameraId, TrustEntry>,
    /// First frame at which each camera fell below the trust gate.
    pub first_gated: BTreeMap<CameraId, usize>,
    pub params: ServerParams,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// `frame_idx,predicted,ground_truth`
pub fn write_counts_csv<W: Write>(report: &RunReport, mut w: W) -> std::io::Result<()> {
    writeln!(w, "frame_idx,predicted,ground_truth")?;
    for c in &report.per_frame_counts {
        writeln!(w, "{},{},{}", c.frame_idx, c.predicted, c.ground_truth)?;
    }
    w.flush()
}

/// `camera_id,frames_total,frames_transmitted,fraction`
pub fn write_cameras_csv<W: Write>(report: &RunReport, mut w: W) -> std::io::Result<()> {
    writeln!(w, "camera_id,frames_total,frames_transmitted,fraction")?;
    for (id, s) in &report.per_camera {
        writeln!(w, "{id},{},{},{}", s.frames_total, s.frames_transmitted, s.fraction)?;
    }
    w.flush()
}

/// Writes `report.json`, `counts.csv`, `cameras.csv` and `messages.jsonl` into `dir`.
pub fn write_outputs(dir: &Path, report: &RunReport, messages: &[Message]) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let create = |name: &str| {
        let p = dir.join(name);
        File::create(&p).map(BufWriter::new).map_err(|e| Error::io(&p, e)).map(|f| (f, p))
    };
    let (mut f, p) = create("report.json")?;
    f.write_all(report.to_json().as_bytes())
        .and_then(|_| f.flush())
        .map_err(|e| Error::io(&p, e))?;
    let (f, p) = create("counts.csv")?;
    write_counts_csv(report, f).map_err(|e| Error::io(&p, e))?;
    let (f, p) = create("cameras.csv")?;
    write_cameras_csv(report, f).map_err(|e| Error::io(&p, e))?;
    let (f, p) = create("messages.jsonl")?;
    write_messages(messages, f).map_err(|e| Error::io(&p, e))
}
