//! Collaborative cross-camera video analytics at the edge.
//!
//! Cameras filter their own streams down to frames that contain a newly
//! appearing object, share bounding boxes with a centralized edge server, and
//! the server fuses overlapping views (homography transfer, Hungarian
//! matching, confidence boosting, NMS) to count people. The detector itself is
//! replaced by a seeded synthetic noise model or by ingested detection logs.
//!
//! The geometric and combinatorial core (`geometry`, `filter`, `fusion`,
//! `trust`) is generic over the scalar type; the simulator layers (`detsim`,
//! `topology`, `server`, `scenario`) run in `f64`.

pub mod detsim;
pub mod error;
pub mod filter;
pub mod fusion;
pub mod geometry;
pub mod scalar;
pub mod scenario;
pub mod server;
pub mod topology;
pub mod trust;

pub use error::{Error, Result};
pub use geometry::CameraId;
pub use scalar::Real;

pub type Point2f64 = geometry::Point2<f64>;
pub type Point2f32 = geometry::Point2<f32>;
pub type Homography64 = geometry::Homography<f64>;
pub type Homography32 = geometry::Homography<f32>;
pub type BBox64 = geometry::BBox<f64>;
pub type BBox32 = geometry::BBox<f32>;
pub type ConvexPolygon64 = geometry::ConvexPolygon<f64>;
pub type ConvexPolygon32 = geometry::ConvexPolygon<f32>;
pub type FusedBox64 = fusion::FusedBox<f64>;
pub type FusionParams64 = fusion::FusionParams<f64>;
pub type Assignment64 = fusion::Assignment<f64>;
pub type Tracker64 = filter::Tracker<f64>;
pub type FilterParams64 = filter::FilterParams<f64>;
pub type TrustLedger64 = trust::TrustLedger<f64>;
