use serde::{Deserialize, Serialize};

use crate::cf::ResponseMap;
use crate::error::{Error, Result};

pub const WEIGHT_FLOOR: f64 = 1e-6;
pub const MIN_MATCHES: usize = 4;
pub const MIN_DENOMINATOR: f64 = 1.0;

/// Placement of a response map in frame coordinates: the zero shift sits at `center` and
/// one cell spans `cell` pixels along x and y.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResponseGeometry {
    pub center: (f64, f64),
    pub cell: (f64, f64),
}

/// Response at each point divided by the response peak, floored at `WEIGHT_FLOOR`.
/// Points that fall outside the grid receive the floor.
pub fn keypoint_weights(resp: &ResponseMap, points: &[(f64, f64)], geom: &ResponseGeometry) -> Vec<f64> {
    let peak = resp.peak_value;
    let (half_r, half_c) = (resp.rows as f64 / 2.0, resp.cols as f64 / 2.0);
    points
        .iter()
        .map(|&(x, y)| {
            let dy = ((y - geom.center.1) / geom.cell.1).round();
            let dx = ((x - geom.center.0) / geom.cell.0).round();
            if !(dy.abs() < half_r && dx.abs() < half_c) || peak <= 0.0 {
                return WEIGHT_FLOOR;
            }
            (resp.at_shift(dy as i64, dx as i64) / peak).max(WEIGHT_FLOOR)
        })
        .collect()
}

pub fn weighted_centroid(points: &[(f64, f64)], weights: &[f64]) -> Result<(f64, f64)> {
    if points.is_empty() || points.len() != weights.len() {
        return Err(Error::InvalidArgument(format!("{} points with {} weights", points.len(), weights.len())));
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::InvalidArgument("weights sum to zero".into()));
    }
    let (mut sx, mut sy) = (0.0, 0.0);
    for (&(x, y), &w) in points.iter().zip(weights) {
        sx += w * x;
        sy += w * y;
    }
    Ok((sx / total, sy / total))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleEstimate {
    /// Clamped factor to apply to width and height.
    pub scale: f64,
    /// Ratio before clamping; `None` when a fallback rule fired.
    pub raw: Option<f64>,
    pub matches: usize,
}

impl ScaleEstimate {
    pub fn identity(matches: usize) -> Self {
        Self { scale: 1.0, raw: None, matches }
    }
}

/// `|M_l - C_l| / |M_p - C_p|` clamped to `clamp`; 1.0 when fewer than `MIN_MATCHES`
/// pairs exist or the previous centroid sits within a pixel of the previous center.
pub fn estimate_scale(
    m_p: (f64, f64),
    c_p: (f64, f64),
    m_l: (f64, f64),
    c_l: (f64, f64),
    matches: usize,
    clamp: (f64, f64),
) -> ScaleEstimate {
    let den = (m_p.0 - c_p.0).hypot(m_p.1 - c_p.1);
    if matches < MIN_MATCHES || den < MIN_DENOMINATOR {
        return ScaleEstimate::identity(matches);
    }
    let raw = (m_l.0 - c_l.0).hypot(m_l.1 - c_l.1) / den;
    ScaleEstimate { scale: raw.clamp(clamp.0, clamp.1), raw: Some(raw), matches }
}

/// Ratio of weighted mean point distances from the two centers. Agrees with
/// `estimate_scale` on exactly scaled point sets but its denominator is a typical keypoint
/// radius rather than a centroid offset, so localization noise matters far less.
pub fn estimate_scale_spread(
    prev: &[(f64, f64)],
    c_p: (f64, f64),
    latest: &[(f64, f64)],
    c_l: (f64, f64),
    weights: &[f64],
    min_den: f64,
    clamp: (f64, f64),
) -> ScaleEstimate {
    let n = prev.len();
    if n < MIN_MATCHES || latest.len() != n || weights.len() != n {
        return ScaleEstimate::identity(n.min(latest.len()));
    }
    let (mut num, mut den, mut total) = (0.0, 0.0, 0.0);
    for ((p, l), w) in prev.iter().zip(latest).zip(weights) {
        num += w * (l.0 - c_l.0).hypot(l.1 - c_l.1);
        den += w * (p.0 - c_p.0).hypot(p.1 - c_p.1);
        total += w;
    }
    if !(total > 0.0) || den / total < min_den {
        return ScaleEstimate::identity(n);
    }
    let raw = num / den;
    ScaleEstimate { scale: raw.clamp(clamp.0, clamp.1), raw: Some(raw), matches: n }
}
