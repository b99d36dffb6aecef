use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the tracking engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid box: {0}")]
    InvalidBox(String),
    #[error("invalid frame: {0}")]
    InvalidFrame(String),
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: String, actual: String },
    #[error("patch too small: {0}")]
    PatchTooSmall(String),
    #[error("color input required: {0}")]
    ColorRequired(String),
    #[error("local region window of radius {p_cells} does not fit a {rows}x{cols} grid")]
    WindowTooLarge { p_cells: usize, rows: usize, cols: usize },
    #[error("missing ground truth in {0}")]
    MissingGroundTruth(PathBuf),
    #[error("no frames found in {0}")]
    NoFrames(PathBuf),
    #[error("sequence directory not found: {0}")]
    MissingDirectory(PathBuf),
    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },
    #[error("image decoding failed for {path}: {message}")]
    Decode { path: PathBuf, message: String },
    #[error("box sampling failed after {attempts} attempts (iou_min = {iou_min})")]
    SamplingFailed { attempts: usize, iou_min: f64 },
    #[error("gradient descent diverged; use a learning rate below {suggested:e}")]
    Diverged { suggested: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("tracking failure at frame {frame}: {reason}")]
    TrackingFailure { frame: usize, reason: String },
    #[error("degenerate polygon: {0}")]
    DegeneratePolygon(String),
    #[error("target leaves the frame at frame {frame}")]
    TargetOutOfFrame { frame: usize },
    #[error("empty record set")]
    EmptyRecords,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
