//! Reliability-weighted fusion of the three sub-model responses.

use serde::{Deserialize, Serialize};

use crate::cf::{shift_offset, ResponseMap};
use crate::error::{Error, Result};

pub const NORMALIZE_EPS: f64 = 1e-8;
pub const KL_FLOOR: f64 = 1e-6;

/// Nonnegative map summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbMap {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl ProbMap {
    pub fn argmax(&self) -> (usize, usize) {
        let i = argmax(&self.data);
        (i / self.cols, i % self.cols)
    }
}

fn argmax(v: &[f64]) -> usize {
    v.iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
        .map(|(i, _)| i)
        .unwrap_or(0)
}

/// Min-shift, add a small epsilon, divide by the total.
pub fn normalize_response(resp: &ResponseMap) -> ProbMap {
    let min = resp.data.iter().copied().fold(f64::INFINITY, f64::min);
    let shifted: Vec<f64> = resp.data.iter().map(|v| v - min + NORMALIZE_EPS).collect();
    let total: f64 = shifted.iter().sum();
    ProbMap { rows: resp.rows, cols: resp.cols, data: shifted.into_iter().map(|v| v / total).collect() }
}

/// Normalized Gaussian centred on `peak` using circular distances.
pub fn ideal_response(peak: (usize, usize), rows: usize, cols: usize, sigma: f64) -> Result<ProbMap> {
    if peak.0 >= rows || peak.1 >= cols || !(sigma > 0.0) {
        return Err(Error::InvalidArgument(format!("peak {peak:?} outside {rows}x{cols} or sigma {sigma}")));
    }
    let mut data = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        let dy = shift_offset((r + rows - peak.0) % rows, rows) as f64;
        for c in 0..cols {
            let dx = shift_offset((c + cols - peak.1) % cols, cols) as f64;
            data.push((-(dx * dx + dy * dy) / (2.0 * sigma * sigma)).exp());
        }
    }
    let total: f64 = data.iter().sum();
    data.iter_mut().for_each(|v| *v /= total);
    Ok(ProbMap { rows, cols, data })
}

/// `KL(r || pred)` in nats.
pub fn kl_divergence(r: &ProbMap, pred: &ProbMap) -> Result<f64> {
    if r.rows != pred.rows || r.cols != pred.cols {
        return Err(Error::DimensionMismatch {
            expected: format!("{}x{}", r.rows, r.cols),
            actual: format!("{}x{}", pred.rows, pred.cols),
        });
    }
    let kl: f64 = r
        .data
        .iter()
        .zip(&pred.data)
        .filter(|(p, _)| **p > 0.0)
        .map(|(p, q)| p * (p / q).ln())
        .sum();
    Ok(kl.max(0.0))
}

/// Per-frame weights proportional to `1 / KL`, each KL floored first.
pub fn compute_frame_weights(kl: [f64; 3]) -> [f64; 3] {
    let inv = kl.map(|k| 1.0 / k.max(KL_FLOOR));
    let s: f64 = inv.iter().sum();
    let mut eta = inv.map(|v| v / s);
    // pin the sum to one exactly for the last component
    eta[2] = 1.0 - eta[0] - eta[1];
    eta
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FusionWeights {
    /// HOG, colour histogram, LBP histogram.
    pub alpha: [f64; 3],
    pub lambda_w: f64,
    /// Number of updates applied so far.
    pub t: usize,
}

impl FusionWeights {
    pub fn new(lambda_w: f64) -> Self {
        Self { alpha: [1.0 / 3.0; 3], lambda_w, t: 0 }
    }

    pub fn sum(&self) -> f64 {
        self.alpha.iter().sum()
    }
}

/// First update copies `eta`; later ones blend with rate `lambda_w`.
pub fn update_weights(w: &FusionWeights, eta: [f64; 3]) -> FusionWeights {
    let alpha = if w.t == 0 {
        eta
    } else {
        let l = w.lambda_w;
        let mut a = [0.0; 3];
        for i in 0..3 {
            a[i] = (1.0 - l) * w.alpha[i] + l * eta[i];
        }
        a
    };
    FusionWeights { alpha, lambda_w: w.lambda_w, t: w.t + 1 }
}

pub fn fuse_responses(maps: [&ResponseMap; 3], w: &FusionWeights) -> Result<ResponseMap> {
    let (rows, cols) = (maps[0].rows, maps[0].cols);
    for m in &maps[1..] {
        if m.rows != rows || m.cols != cols {
            return Err(Error::DimensionMismatch {
                expected: format!("{rows}x{cols}"),
                actual: format!("{}x{}", m.rows, m.cols),
            });
        }
    }
    let data = (0..rows * cols)
        .map(|i| w.alpha[0] * maps[0].data[i] + w.alpha[1] * maps[1].data[i] + w.alpha[2] * maps[2].data[i])
        .collect();
    ResponseMap::from_values(rows, cols, data)
}

/// KL of each response against an ideal Gaussian placed at its own peak.
pub fn response_kl(resp: &ResponseMap, sigma: f64) -> Result<f64> {
    let pred = normalize_response(resp);
    let ideal = ideal_response(resp.peak, resp.rows, resp.cols, sigma)?;
    kl_divergence(&ideal, &pred)
}
