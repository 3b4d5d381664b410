//! Newline-delimited JSON detection logs, one record per frame:
//!
//! ```text
//! {"camera_id":"1","frame_idx":0,"boxes":[{"x_min":1.0,"y_min":2.0,"w":3.0,"h":4.0,"conf":0.9,"class_id":0}]}
//! ```
//!
//! Frames appear in ascending `frame_idx` starting at 0 with no gaps.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::DetectionLog;
use crate::geometry::BBox;
use crate::{CameraId, Error, Real, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub(crate) struct BoxRecord<T> {
    pub x_min: T,
    pub y_min: T,
    pub w: T,
    pub h: T,
    pub conf: T,
    pub class_id: u32,
}

impl<T: Real> BoxRecord<T> {
    pub(crate) fn from_box(b: &BBox<T>) -> Self {
        BoxRecord {
            x_min: b.x_min,
            y_min: b.y_min,
            w: b.width,
            h: b.height,
            conf: b.confidence,
            class_id: b.class_id,
        }
    }

    pub(crate) fn into_box(self, camera_id: &CameraId, frame_idx: usize) -> BBox<T> {
        BBox {
            x_min: self.x_min,
            y_min: self.y_min,
            width: self.w,
            height: self.h,
            confidence: self.conf,
            class_id: self.class_id,
            camera_id: camera_id.clone(),
            frame_idx,
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FrameRecord<T> {
    camera_id: CameraId,
    frame_idx: usize,
    boxes: Vec<BoxRecord<T>>,
}

pub fn write_log<T: Real + Serialize, W: Write>(log: &DetectionLog<T>, mut w: W) -> std::io::Result<()> {
    for (f, boxes) in log.frames.iter().enumerate() {
        let rec = FrameRecord {
            camera_id: log.camera_id.clone(),
            frame_idx: f,
            boxes: boxes.iter().map(BoxRecord::from_box).collect(),
        };
        serde_json::to_writer(&mut w, &rec)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

pub fn save_log<T: Real + Serialize>(log: &DetectionLog<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_log(log, BufWriter::new(file)).map_err(|e| Error::io(path, e))
}

/// Reads a log. `fallback_camera` names the log when the input holds no frames.
pub fn read_log<T, R>(r: R, fallback_camera: &CameraId) -> Result<DetectionLog<T>>
where
    T: Real + for<'de> Deserialize<'de>,
    R: Read,
{
    let mut camera: Option<CameraId> = None;
    let mut frames: Vec<Vec<BBox<T>>> = Vec::new();
    for (k, line) in BufReader::new(r).lines().enumerate() {
        let line_no = k + 1;
        let line = line.map_err(|e| Error::Parse {
            line: line_no,
            msg: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let expected = frames.len();
        let rec: FrameRecord<T> = serde_json::from_str(&line).map_err(|e| {
            if e.is_data() {
                Error::Schema {
                    frame: expected,
                    msg: e.to_string(),
                }
            } else {
                Error::Parse {
                    line: line_no,
                    msg: e.to_string(),
                }
            }
        })?;
        if rec.frame_idx != expected {
            return Err(Error::Schema {
                frame: expected,
                msg: format!("expected frame_idx {expected}, found {}", rec.frame_idx),
            });
        }
        match &camera {
            None => camera = Some(rec.camera_id.clone()),
            Some(c) if *c != rec.camera_id => {
                return Err(Error::Schema {
                    frame: expected,
                    msg: format!("camera_id {} differs from {}", rec.camera_id, c),
                })
            }
            Some(_) => {}
        }
        let boxes: Vec<BBox<T>> = rec.boxes.into_iter().map(|b| b.into_box(&rec.camera_id, expected)).collect();
        for b in &boxes {
            b.validate().map_err(|e| Error::Schema {
                frame: expected,
                msg: e.to_string(),
            })?;
        }
        frames.push(boxes);
    }
    Ok(DetectionLog {
        camera_id: camera.unwrap_or_else(|| fallback_camera.clone()),
        frames,
    })
}

/// Loads a log file; an empty file is a valid log with no frames, named after the file stem.
pub fn load_log<T>(path: impl AsRef<Path>) -> Result<DetectionLog<T>>
where
    T: Real + for<'de> Deserialize<'de>,
{
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
    read_log(file, &CameraId::from(stem))
}
