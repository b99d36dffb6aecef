//! Overlap and center-distance metrics with success and precision curves.

use serde::{Deserialize, Serialize};

use crate::bbox::{center_distance, iou, BBox};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub sequence: String,
    pub frame: usize,
    pub predicted: BBox,
    pub groundtruth: BBox,
    pub iou: f64,
    pub distance: f64,
    pub elapsed_ms: f64,
}

impl EvalRecord {
    pub fn new(sequence: impl Into<String>, frame: usize, predicted: BBox, groundtruth: BBox, elapsed_ms: f64) -> Self {
        Self {
            sequence: sequence.into(),
            frame,
            predicted,
            groundtruth,
            iou: iou(&predicted, &groundtruth),
            distance: center_distance(&predicted, &groundtruth),
            elapsed_ms,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub thresholds: Vec<f64>,
    pub rates: Vec<f64>,
    /// Mean IoU for success curves, mean center distance for precision curves.
    pub mean: f64,
}

impl Curve {
    /// Rate at the given threshold, if it is on the grid.
    pub fn at(&self, threshold: f64) -> Option<f64> {
        self.thresholds.iter().position(|t| (t - threshold).abs() < 1e-9).map(|i| self.rates[i])
    }

    /// Mean rate over the threshold grid (area under the curve for a uniform grid).
    pub fn area(&self) -> f64 {
        self.rates.iter().sum::<f64>() / self.rates.len().max(1) as f64
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("threshold,rate\n");
        for (t, r) in self.thresholds.iter().zip(&self.rates) {
            s.push_str(&format!("{t},{r}\n"));
        }
        s
    }
}

/// 0, 0.05, ..., 1.
pub fn default_success_thresholds() -> Vec<f64> {
    (0..=20).map(|i| i as f64 / 20.0).collect()
}

/// 0, 1, ..., 50 pixels.
pub fn default_precision_thresholds() -> Vec<f64> {
    (0..=50).map(f64::from).collect()
}

/// Fraction of records with IoU strictly above each threshold.
pub fn success_curve(records: &[EvalRecord], thresholds: &[f64]) -> Result<Curve> {
    curve(records, thresholds, |r| r.iou, |v, t| v > t)
}

/// Fraction of records with center distance strictly below each threshold.
pub fn precision_curve(records: &[EvalRecord], thresholds: &[f64]) -> Result<Curve> {
    curve(records, thresholds, |r| r.distance, |v, t| v < t)
}

fn curve(records: &[EvalRecord], thresholds: &[f64], value: impl Fn(&EvalRecord) -> f64, pass: impl Fn(f64, f64) -> bool) -> Result<Curve> {
    if records.is_empty() {
        return Err(Error::EmptyRecords);
    }
    let n = records.len() as f64;
    let values: Vec<f64> = records.iter().map(value).collect();
    let rates = thresholds.iter().map(|&t| values.iter().filter(|&&v| pass(v, t)).count() as f64 / n).collect();
    Ok(Curve { thresholds: thresholds.to_vec(), rates, mean: values.iter().sum::<f64>() / n })
}

/// One row of the comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub method: String,
    pub frames: usize,
    pub average_overlap: f64,
    pub average_distance: f64,
    /// Area under the success curve.
    pub average_success: f64,
    /// Precision at 20 pixels.
    pub average_precision: f64,
    pub fps: f64,
}

pub const PRECISION_REPORT_PX: f64 = 20.0;

pub fn summarize(method: &str, records: &[EvalRecord]) -> Result<Summary> {
    let success = success_curve(records, &default_success_thresholds())?;
    let precision = precision_curve(records, &[PRECISION_REPORT_PX])?;
    let ms: f64 = records.iter().map(|r| r.elapsed_ms).sum();
    Ok(Summary {
        method: method.to_string(),
        frames: records.len(),
        average_overlap: success.mean,
        average_distance: precision.mean,
        average_success: success.area(),
        average_precision: precision.rates[0],
        fps: if ms > 0.0 { records.len() as f64 * 1e3 / ms } else { f64::INFINITY },
    })
}

/// Plain-text table, one row per method.
pub fn format_summary(rows: &[Summary]) -> String {
    let mut s = format!(
        "{:<10} {:>8} {:>16} {:>17} {:>16} {:>18} {:>9}\n",
        "method", "frames", "average overlap", "average distance", "average success", "average precision", "fps"
    );
    for r in rows {
        s.push_str(&format!(
            "{:<10} {:>8} {:>16.4} {:>17.2} {:>16.4} {:>18.4} {:>9.1}\n",
            r.method, r.frames, r.average_overlap, r.average_distance, r.average_success, r.average_precision, r.fps
        ));
    }
    s
}
