//! Evaluation protocol: per-frame records, curves, summaries, timing and zone alarms.

pub mod metrics;
pub mod synth;
pub mod zone;

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::media::Sequence;
use crate::tracker::{track_sequence, FrameResult, TrackerConfig};

pub use metrics::{
    default_precision_thresholds, default_success_thresholds, format_summary, precision_curve, success_curve, summarize,
    Curve, EvalRecord, Summary,
};

/// Tracks a sequence and scores every frame after the initial one.
pub fn evaluate_sequence(seq: &Sequence, config: &TrackerConfig) -> Result<(Vec<FrameResult>, Vec<EvalRecord>)> {
    let results = track_sequence(seq, config)?;
    let records = results
        .iter()
        .skip(1)
        .zip(seq.groundtruth.iter().skip(1))
        .map(|(r, gt)| EvalRecord::new(seq.name.clone(), r.frame, r.bbox, *gt, r.elapsed_ms))
        .collect();
    Ok((results, records))
}

pub fn mean_iou(records: &[EvalRecord]) -> f64 {
    records.iter().map(|r| r.iou).sum::<f64>() / records.len().max(1) as f64
}

pub fn mean_distance(records: &[EvalRecord]) -> f64 {
    records.iter().map(|r| r.distance).sum::<f64>() / records.len().max(1) as f64
}

/// Per-frame average stage costs over one run, in milliseconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub method: String,
    pub frames: usize,
    pub fps: f64,
    pub total_ms: f64,
    pub translation_ms: f64,
    pub scale_train_ms: f64,
    pub scale_predict_ms: f64,
    pub regression_ms: f64,
    pub update_ms: f64,
    /// Scale prediction time as a fraction of the whole step.
    pub scale_share: f64,
}

/// Aggregates step timings over runs; each run's initial frame is excluded since it only trains.
pub fn bench_report(method: &str, runs: &[Vec<FrameResult>]) -> BenchReport {
    let steps: Vec<&FrameResult> = runs.iter().flat_map(|r| r.iter().skip(1)).collect();
    let n = steps.len().max(1) as f64;
    let avg = |f: &dyn Fn(&FrameResult) -> f64| steps.iter().map(|r| f(r)).sum::<f64>() / n;
    let total = avg(&|r| r.elapsed_ms);
    let predict = avg(&|r| r.stages.scale_predict_ms);
    BenchReport {
        method: method.to_string(),
        frames: steps.len(),
        fps: if total > 0.0 { 1e3 / total } else { f64::INFINITY },
        total_ms: total,
        translation_ms: avg(&|r| r.stages.translation_ms),
        scale_train_ms: avg(&|r| r.stages.scale_train_ms),
        scale_predict_ms: predict,
        regression_ms: avg(&|r| r.stages.regression_ms),
        update_ms: avg(&|r| r.stages.update_ms),
        scale_share: if total > 0.0 { predict / total } else { 0.0 },
    }
}

pub fn format_bench(rows: &[BenchReport]) -> String {
    let mut s = format!(
        "{:<10} {:>7} {:>8} {:>10} {:>12} {:>14} {:>16} {:>11} {:>11}\n",
        "method", "frames", "fps", "total ms", "translation", "scale train", "scale predict", "regression", "scale %"
    );
    for r in rows {
        s.push_str(&format!(
            "{:<10} {:>7} {:>8.1} {:>10.3} {:>12.3} {:>14.3} {:>16.3} {:>11.3} {:>10.1}%\n",
            r.method,
            r.frames,
            r.fps,
            r.total_ms,
            r.translation_ms,
            r.scale_train_ms,
            r.scale_predict_ms,
            r.regression_ms,
            100.0 * r.scale_share
        ));
    }
    s
}

/// One JSON object per line.
pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    for item in items {
        serde_json::to_writer(&mut out, item).map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// Writes `success.csv` and `precision.csv` into `dir`.
pub fn write_curves(dir: &Path, records: &[EvalRecord]) -> Result<(Curve, Curve)> {
    let success = success_curve(records, &default_success_thresholds())?;
    let precision = precision_curve(records, &default_precision_thresholds())?;
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("success.csv"), success.to_csv())?;
    std::fs::write(dir.join("precision.csv"), precision.to_csv())?;
    Ok((success, precision))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bbox::BBox;
    use crate::tracker::StageTimes;

    fn result(frame: usize, total: f64, predict: f64) -> FrameResult {
        FrameResult {
            frame,
            bbox: BBox::new(10.0, 10.0, 4.0, 4.0),
            kl: [0.0; 3],
            weights: [1.0 / 3.0; 3],
            scale: 1.0,
            scale_raw: None,
            matches: 0,
            regression: [0.0; 4],
            peak: 1.0,
            elapsed_ms: total,
            stages: StageTimes { scale_predict_ms: predict, ..StageTimes::default() },
        }
    }

    #[test]
    fn bench_averages_skip_the_first_frame() {
        let r = bench_report("brcf", &[vec![result(1, 500.0, 0.0), result(2, 10.0, 2.0), result(3, 30.0, 4.0)]]);
        assert_eq!(r.frames, 2);
        assert_eq!(r.total_ms, 20.0);
        assert_eq!(r.fps, 50.0);
        assert_eq!(r.scale_predict_ms, 3.0);
        assert_eq!(r.scale_train_ms, 0.0);
        assert!((r.scale_share - 0.15).abs() < 1e-12);
        assert!(format_bench(&[r]).contains("scale predict"));
        let two = bench_report("kcf", &[vec![result(1, 900.0, 0.0), result(2, 10.0, 0.0)], vec![result(1, 900.0, 0.0), result(2, 30.0, 0.0)]]);
        assert_eq!((two.frames, two.total_ms), (2, 20.0));
    }

    #[test]
    fn writers_emit_lines_and_curves() {
        let dir = tempfile::tempdir().unwrap();
        let recs: Vec<EvalRecord> =
            (0..5).map(|i| EvalRecord::new("s", i + 2, BBox::new(i as f64, 0.0, 4.0, 4.0), BBox::new(0.0, 0.0, 4.0, 4.0), 1.0)).collect();
        write_jsonl(&dir.path().join("r.jsonl"), &recs).unwrap();
        let text = std::fs::read_to_string(dir.path().join("r.jsonl")).unwrap();
        assert_eq!(text.lines().count(), 5);
        let back: EvalRecord = serde_json::from_str(text.lines().nth(2).unwrap()).unwrap();
        assert_eq!(back, recs[2]);
        let (s, p) = write_curves(dir.path(), &recs).unwrap();
        assert_eq!(s.thresholds.len(), 21);
        assert_eq!(p.thresholds.len(), 51);
        assert_eq!(std::fs::read_to_string(dir.path().join("precision.csv")).unwrap().lines().count(), 52);
    }
}
