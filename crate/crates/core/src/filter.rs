//! On-camera "new object" frame filter.
//!
//! Each camera tracks its boxes frame to frame with greedy IoU matching; a
//! frame is worth transmitting exactly when some box in it fails to match a
//! live track.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::detsim::DetectionLog;
use crate::geometry::{box_iou, BBox};
use crate::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FilterParams<T> {
    pub match_iou: T,
    /// Frames a track survives without a match. `u64::MAX` never expires.
    pub ttl: u64,
}

impl<T: Real> Default for FilterParams<T> {
    fn default() -> Self {
        FilterParams {
            match_iou: T::lit(0.3),
            ttl: 15,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Track<T> {
    pub track_id: u64,
    pub last_box: BBox<T>,
    pub created_frame: usize,
    pub last_seen_frame: usize,
    /// Frames between creation and the latest match.
    pub age: usize,
}

/// Greedy IoU tracker. Track ids come from a per-instance counter, so a
/// tracker fed the same boxes always produces the same ids.
#[derive(Debug, Clone)]
pub struct Tracker<T> {
    params: FilterParams<T>,
    tracks: Vec<Track<T>>,
    next_id: u64,
}

impl<T: Real> Tracker<T> {
    pub fn new(params: FilterParams<T>) -> Self {
        Tracker {
            params,
            tracks: Vec::new(),
            next_id: 0,
        }
    }

    pub fn tracks(&self) -> &[Track<T>] {
        &self.tracks
    }

    pub fn params(&self) -> &FilterParams<T> {
        &self.params
    }

    /// Advances to `frame_idx` with this frame's boxes; returns how many new
    /// tracks were opened.
    ///
    /// Candidate `(track, box)` pairs with IoU `>= match_iou` are taken in
    /// order of IoU descending, then lower track id, then lower box index,
    /// each track and box used once. Tracks unseen for more than `ttl`
    /// frames are dropped afterwards.
    pub fn step(&mut self, frame_boxes: &[BBox<T>], frame_idx: usize) -> usize {
        let mut candidates: Vec<(T, usize, usize)> = Vec::new();
        for (ti, t) in self.tracks.iter().enumerate() {
            for (bi, b) in frame_boxes.iter().enumerate() {
                let iou = box_iou(&t.last_box, b);
                if iou >= self.params.match_iou {
                    candidates.push((iou, ti, bi));
                }
            }
        }
        candidates.sort_by(|a, b| {
            b.0.partial_cmp(&a.0)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(self.tracks[a.1].track_id.cmp(&self.tracks[b.1].track_id))
                .then(a.2.cmp(&b.2))
        });

        let mut track_used = vec![false; self.tracks.len()];
        let mut box_used = vec![false; frame_boxes.len()];
        for (_, ti, bi) in candidates {
            if track_used[ti] || box_used[bi] {
                continue;
            }
            track_used[ti] = true;
            box_used[bi] = true;
            let t = &mut self.tracks[ti];
            t.last_box = frame_boxes[bi].clone();
            t.last_seen_frame = frame_idx;
            t.age = frame_idx - t.created_frame;
        }

        let mut created = 0;
        for (b, used) in frame_boxes.iter().zip(box_used) {
            if !used {
                self.tracks.push(Track {
                    track_id: self.next_id,
                    last_box: b.clone(),
                    created_frame: frame_idx,
                    last_seen_frame: frame_idx,
                    age: 0,
                });
                self.next_id += 1;
                created += 1;
            }
        }

        let ttl = self.params.ttl;
        self.tracks
            .retain(|t| (frame_idx.saturating_sub(t.last_seen_frame) as u64) <= ttl);
        created
    }

    /// Whether any live track overlaps `b` with IoU `>= iou`.
    pub fn matches_any(&self, b: &BBox<T>, iou: T) -> bool {
        self.tracks.iter().any(|t| box_iou(&t.last_box, b) >= iou)
    }
}

/// Free-function form of [`Tracker::step`] over an explicit track list.
pub fn step_tracker<T: Real>(
    tracks: Vec<Track<T>>,
    next_id: u64,
    frame_boxes: &[BBox<T>],
    params: &FilterParams<T>,
    frame_idx: usize,
) -> (Vec<Track<T>>, u64, usize) {
    let mut tracker = Tracker {
        params: *params,
        tracks,
        next_id,
    };
    let created = tracker.step(frame_boxes, frame_idx);
    (tracker.tracks, tracker.next_id, created)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterResult {
    pub transmitted: BTreeSet<usize>,
    /// `|transmitted| / n_frames`.
    pub fraction: f64,
    /// `(frame_idx, new tracks opened)` for every frame that opened one.
    pub new_object_events: Vec<(usize, usize)>,
}

pub fn filter_stream<T: Real>(log: &DetectionLog<T>, params: &FilterParams<T>) -> FilterResult {
    let mut tracker = Tracker::new(*params);
    let mut transmitted = BTreeSet::new();
    let mut new_object_events = Vec::new();
    for (f, boxes) in log.frames.iter().enumerate() {
        let created = tracker.step(boxes, f);
        if created > 0 {
            transmitted.insert(f);
            new_object_events.push((f, created));
        }
    }
    let fraction = if log.frames.is_empty() {
        0.0
    } else {
        transmitted.len() as f64 / log.frames.len() as f64
    };
    FilterResult {
        transmitted,
        fraction,
        new_object_events,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::CameraId;
    use proptest::prelude::*;

    fn bx(x: f64, y: f64, f: usize) -> BBox<f64> {
        BBox::new(x, y, 2.0, 2.0, 0.9, CameraId::from("1"), f).unwrap()
    }

    fn log_of(frames: Vec<Vec<BBox<f64>>>) -> DetectionLog<f64> {
        DetectionLog {
            camera_id: CameraId::from("1"),
            frames,
        }
    }

    #[test]
    fn step_examples() {
        let p = FilterParams::default();
        let mut t = Tracker::<f64>::new(p);
        assert_eq!(t.step(&[bx(0.0, 0.0, 0), bx(10.0, 0.0, 0), bx(20.0, 0.0, 0)], 0), 3);
        assert_eq!(t.tracks().len(), 3);

        let mut t = Tracker::<f64>::new(p);
        t.step(&[bx(0.0, 0.0, 0)], 0);
        assert_eq!(t.step(&[bx(0.0, 0.0, 1)], 1), 0);
        assert_eq!(t.tracks()[0].last_seen_frame, 1);

        let mut t = Tracker::<f64>::new(p);
        t.step(&[bx(0.0, 0.0, 0)], 0);
        assert_eq!(t.step(&[bx(10.0, 10.0, 1)], 1), 1);
        assert_eq!(t.tracks().len(), 2);
    }

    #[test]
    fn free_function_matches_method() {
        let p = FilterParams::default();
        let (tracks, next, created) = step_tracker(Vec::new(), 0, &[bx(0.0, 0.0, 0)], &p, 0);
        assert_eq!((tracks.len(), next, created), (1, 1, 1));
        let (tracks, _, created) = step_tracker(tracks, next, &[bx(0.5, 0.0, 1)], &p, 1);
        assert_eq!((tracks.len(), created), (1, 0));
    }

    #[test]
    fn ttl_expiry_and_reappearance() {
        let p = FilterParams { match_iou: 0.3, ttl: 2 };
        let mut t = Tracker::<f64>::new(p);
        t.step(&[bx(0.0, 0.0, 0)], 0);
        t.step(&[], 1);
        t.step(&[], 2);
        assert_eq!(t.tracks().len(), 1);
        t.step(&[], 3);
        assert!(t.tracks().is_empty());
        assert_eq!(t.step(&[bx(0.0, 0.0, 4)], 4), 1);
    }

    #[test]
    fn greedy_takes_highest_iou_first() {
        let p = FilterParams::default();
        let mut t = Tracker::<f64>::new(p);
        t.step(&[bx(0.0, 0.0, 0)], 0);
        // both candidates overlap the track; the closer one wins, the other is new
        let created = t.step(&[bx(1.0, 0.0, 1), bx(0.2, 0.0, 1)], 1);
        assert_eq!(created, 1);
        assert_eq!(t.tracks()[0].last_box.x_min, 0.2);
    }

    #[test]
    fn stream_examples() {
        let p = FilterParams::default();
        let static_log = log_of((0..10).map(|f| vec![bx(5.0, 5.0, f)]).collect());
        let r = filter_stream(&static_log, &p);
        assert_eq!(r.transmitted, BTreeSet::from([0]));
        assert_eq!(r.fraction, 0.1);
        assert_eq!(r.new_object_events, vec![(0, 1)]);

        let empty = log_of(vec![Vec::new(); 10]);
        let r = filter_stream(&empty, &p);
        assert!(r.transmitted.is_empty());
        assert_eq!(r.fraction, 0.0);

        let late = log_of((0..10).map(|f| if f == 5 { vec![bx(1.0, 1.0, f)] } else { vec![] }).collect());
        assert_eq!(filter_stream(&late, &p).transmitted, BTreeSet::from([5]));
    }

    #[test]
    fn infinite_ttl_static_objects_transmit_once_each() {
        let p = FilterParams { match_iou: 0.3, ttl: u64::MAX };
        // object A visible 0..10 with a gap, object B appears at frame 4
        let frames = (0..10)
            .map(|f| {
                let mut v = Vec::new();
                if !(2..6).contains(&f) {
                    v.push(bx(0.0, 0.0, f));
                }
                if f >= 4 {
                    v.push(bx(30.0, 0.0, f));
                }
                v
            })
            .collect();
        let r = filter_stream(&log_of(frames), &p);
        assert_eq!(r.transmitted, BTreeSet::from([0, 4]));
    }

    fn arb_frame() -> impl Strategy<Value = Vec<(f64, f64)>> {
        prop::collection::vec((0.0..40.0f64, 0.0..40.0f64), 0..6)
    }

    proptest! {
        #[test]
        fn repeated_frame_is_never_new(frames in prop::collection::vec(arb_frame(), 1..8)) {
            let p = FilterParams::<f64>::default();
            let mut t = Tracker::new(p);
            let mut f = 0;
            for frame in frames {
                let boxes: Vec<_> = frame.iter().map(|&(x, y)| bx(x, y, f)).collect();
                t.step(&boxes, f);
                f += 1;
                let again: Vec<_> = frame.iter().map(|&(x, y)| bx(x, y, f)).collect();
                prop_assert_eq!(t.step(&again, f), 0);
                f += 1;
            }
        }

        #[test]
        fn stream_invariants(frames in prop::collection::vec(arb_frame(), 1..12)) {
            let p = FilterParams::<f64>::default();
            let frames: Vec<Vec<BBox<f64>>> = frames
                .iter()
                .enumerate()
                .map(|(f, fr)| fr.iter().map(|&(x, y)| bx(x, y, f)).collect())
                .collect();
            let log = log_of(frames);
            let a = filter_stream(&log, &p);
            prop_assert!((0.0..=1.0).contains(&a.fraction));
            prop_assert_eq!(a.fraction, a.transmitted.len() as f64 / log.frames.len() as f64);
            for f in &a.transmitted {
                prop_assert!(!log.frames[*f].is_empty());
            }
            prop_assert_eq!(a, filter_stream(&log, &p));
        }
    }
}
