//! Camera-to-server messages and their newline-delimited JSON trace format:
//!
//! ```text
//! {"kind":"frame_upload","camera_id":"4","frame_idx":0,"boxes":[...]}
//! {"kind":"state_share","camera_id":"1","frame_idx":0,"boxes":[...]}
//! ```

use std::io::{BufRead, BufReader, Read, Write};

use serde::{Deserialize, Serialize};

use crate::detsim::BoxRecord;
use crate::geometry::BBox;
use crate::{CameraId, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MessageKind {
    /// A transmitted frame's detections.
    FrameUpload,
    /// Pre-NMS boxes shared for fusion.
    StateShare,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Message {
    pub kind: MessageKind,
    pub camera_id: CameraId,
    pub frame_idx: usize,
    pub boxes: Vec<BBox<f64>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MessageRecord {
    kind: MessageKind,
    camera_id: CameraId,
    frame_idx: usize,
    boxes: Vec<BoxRecord<f64>>,
}

impl Message {
    pub fn new(kind: MessageKind, camera_id: CameraId, frame_idx: usize, boxes: Vec<BBox<f64>>) -> Result<Self> {
        let m = Message {
            kind,
            camera_id,
            frame_idx,
            boxes,
        };
        m.validate()?;
        Ok(m)
    }

    /// Boxes must carry the header's camera and frame.
    pub fn validate(&self) -> Result<()> {
        for b in &self.boxes {
            if b.camera_id != self.camera_id || b.frame_idx != self.frame_idx {
                return Err(Error::Schema {
                    frame: self.frame_idx,
                    msg: format!("box tagged camera {} frame {} in message from {}", b.camera_id, b.frame_idx, self.camera_id),
                });
            }
        }
        Ok(())
    }
}

pub fn write_messages<W: Write>(messages: &[Message], mut w: W) -> std::io::Result<()> {
    for m in messages {
        let rec = MessageRecord {
            kind: m.kind,
            camera_id: m.camera_id.clone(),
            frame_idx: m.frame_idx,
            boxes: m.boxes.iter().map(BoxRecord::from_box).collect(),
        };
        serde_json::to_writer(&mut w, &rec)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

/// Reads a trace; records must be ordered by `frame_idx`.
pub fn read_messages<R: Read>(r: R) -> Result<Vec<Message>> {
    let mut out: Vec<Message> = Vec::new();
    for (k, line) in BufReader::new(r).lines().enumerate() {
        let line = line.map_err(|e| Error::Parse {
            line: k + 1,
            msg: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: MessageRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: k + 1,
            msg: e.to_string(),
        })?;
        if out.last().is_some_and(|m| m.frame_idx > rec.frame_idx) {
            return Err(Error::Schema {
                frame: rec.frame_idx,
                msg: "messages out of frame order".into(),
            });
        }
        let boxes = rec.boxes.into_iter().map(|b| b.into_box(&rec.camera_id, rec.frame_idx)).collect();
        out.push(Message::new(rec.kind, rec.camera_id, rec.frame_idx, boxes)?);
    }
    Ok(out)
}
