//! Correlation-filter visual tracking with fused multi-feature responses, keypoint-based
//! scale estimation and learned bounding-box refinement.

pub mod bbox;
pub mod cf;
pub mod error;
pub mod eval;
pub mod features;
pub mod fusion;
pub mod media;
pub mod regression;
pub mod scale;
pub mod tracker;

pub use bbox::{center_distance, iou, BBox};
pub use error::{Error, Result};
