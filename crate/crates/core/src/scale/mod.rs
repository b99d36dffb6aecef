//! Keypoint-based scale pre-estimation between adjacent frames.

mod estimate;
mod matching;
mod surf;

pub use estimate::{
    estimate_scale, estimate_scale_spread, keypoint_weights, weighted_centroid, ResponseGeometry, ScaleEstimate, MIN_DENOMINATOR, MIN_MATCHES,
    WEIGHT_FLOOR,
};
pub use matching::{match_keypoints, write_matches_csv, Match};
pub use surf::{
    assign_orientation, describe_keypoint, detect_keypoints, extract_features, surf_integral, Descriptor, Keypoint,
    DESCRIPTOR_LEN, MIN_IMAGE_SIDE,
};
