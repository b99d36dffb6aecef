//! Linear bounding-box regression on HOG features of a canonical patch.

use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bbox::{iou, BBox};
use crate::error::{Error, Result};
use crate::features::hog;
use crate::media::{sample_window, to_grayscale, Frame};

pub const HEADER: &str = "BRCF-REG-1";
pub const PATCH_SIDE: usize = 64;
pub const CELL: usize = 4;
/// Flattened HOG length of the canonical patch.
pub const FEATURE_DIM: usize = (PATCH_SIDE / CELL) * (PATCH_SIDE / CELL) * crate::features::HOG_CHANNELS;

const DIVERGENCE_RUN: usize = 10;
const SAMPLE_ATTEMPTS: usize = 2000;

/// `(t_x, t_y, t_w, t_h)` taking `s` onto `r`.
pub fn regression_targets(s: &BBox, r: &BBox) -> Result<[f64; 4]> {
    if !(s.w > 0.0 && s.h > 0.0 && r.w > 0.0 && r.h > 0.0) {
        return Err(Error::InvalidBox(format!("targets need positive sizes: {s:?} -> {r:?}")));
    }
    Ok([(r.x - s.x) / s.w, (r.y - s.y) / s.h, (r.w / s.w).ln(), (r.h / s.h).ln()])
}

/// Inverse of `regression_targets`. `literal` scales the centre offsets by the centre
/// coordinates instead of the box size.
pub fn apply_targets(s: &BBox, t: [f64; 4], literal: bool) -> BBox {
    let (kx, ky) = if literal { (s.x, s.y) } else { (s.w, s.h) };
    BBox::new(s.x + t[0] * kx, s.y + t[1] * ky, s.w * t[2].exp(), s.h * t[3].exp())
}

/// `n` boxes jittered around `r` (centre by up to 15% of the size, each side scaled within
/// `[0.85, 1.18]`), rejection-sampled until their IoU with `r` reaches `iou_min`.
pub fn sample_training_boxes(r: &BBox, n: usize, iou_min: f64, seed: u64) -> Result<Vec<BBox>> {
    r.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    let mut attempts = 0;
    while out.len() < n {
        if attempts >= SAMPLE_ATTEMPTS * n.max(1) {
            return Err(Error::SamplingFailed { attempts, iou_min });
        }
        attempts += 1;
        let b = BBox::new(
            r.x + rng.random_range(-0.15..=0.15) * r.w,
            r.y + rng.random_range(-0.15..=0.15) * r.h,
            r.w * rng.random_range(0.85..=1.18),
            r.h * rng.random_range(0.85..=1.18),
        );
        if iou(&b, r) >= iou_min {
            out.push(b);
        }
    }
    Ok(out)
}

/// Flattened HOG of the box resampled to the canonical gray patch.
pub fn box_features(frame: &Frame, b: &BBox) -> Result<Vec<f64>> {
    b.validate()?;
    let gray = if frame.channels == 1 { frame.clone() } else { to_grayscale(frame) };
    let patch = sample_window(&gray, b.center(), (b.w, b.h), (PATCH_SIDE, PATCH_SIDE))?;
    Ok(hog(&patch, CELL)?.data)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegressorParams {
    pub lambda: f64,
    /// Step size; `None` picks `1 / (2 (L + lambda))` from the data.
    pub lr: Option<f64>,
    pub iters: usize,
    pub fine_tune_iters: usize,
    pub iou_min: f64,
    /// Jittered boxes drawn around the first-frame box for fine-tuning.
    pub samples: usize,
    /// Bound on the log-size outputs.
    pub log_clamp: f64,
    pub literal: bool,
}

impl Default for RegressorParams {
    fn default() -> Self {
        Self { lambda: 1.0, lr: None, iters: 500, fine_tune_iters: 50, iou_min: 0.6, samples: 128, log_clamp: 0.4, literal: false }
    }
}

/// Dense row-major sample matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Samples {
    pub rows: usize,
    pub dim: usize,
    pub data: Vec<f64>,
}

impl Samples {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.is_empty() || dim == 0 {
            return Err(Error::InvalidArgument("no training samples".into()));
        }
        if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch { expected: dim.to_string(), actual: bad.len().to_string() });
        }
        Ok(Self { rows: rows.len(), dim, data: rows.concat() })
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    fn mul(&self, w: &[f64]) -> Vec<f64> {
        (0..self.rows).map(|i| dot(self.row(i), w)).collect()
    }

    fn mul_t(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (i, &vi) in v.iter().enumerate() {
            if vi != 0.0 {
                axpy(&mut out, vi, self.row(i));
            }
        }
        out
    }

    fn gram(&self) -> Vec<f64> {
        let n = self.rows;
        let mut g = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = dot(self.row(i), self.row(j));
                g[i * n + j] = v;
                g[j * n + i] = v;
            }
        }
        g
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += a * xi);
}

/// `sum_i (t_i - w.F_i)^2 + lambda |w|^2`
pub fn ridge_loss(f: &Samples, t: &[f64], w: &[f64], lambda: f64) -> f64 {
    let r: f64 = f.mul(w).iter().zip(t).map(|(p, y)| (p - y) * (p - y)).sum();
    r + lambda * dot(w, w)
}

/// `2 sum_i (w.F_i - t_i) F_i + 2 lambda w`
pub fn ridge_gradient(f: &Samples, t: &[f64], w: &[f64], lambda: f64) -> Vec<f64> {
    let resid: Vec<f64> = f.mul(w).iter().zip(t).map(|(p, y)| 2.0 * (p - y)).collect();
    let mut g = f.mul_t(&resid);
    axpy(&mut g, 2.0 * lambda, w);
    g
}

/// Largest eigenvalue of `F^T F` (equal to that of `F F^T`) by power iteration.
pub fn gram_spectral_norm(f: &Samples) -> f64 {
    // a uniform start would be orthogonal to everything once features are centred
    let mut v: Vec<f64> = (0..f.rows).map(|i| 1.0 + ((i * 7919) % 17) as f64 / 17.0).collect();
    let mut est = 0.0;
    for _ in 0..200 {
        let u = f.mul(&f.mul_t(&v));
        let n = dot(&u, &u).sqrt();
        if n == 0.0 {
            return 0.0;
        }
        let next = n;
        v = u.into_iter().map(|x| x / n).collect();
        if (next - est).abs() <= 1e-10 * next {
            return next;
        }
        est = next;
    }
    est
}

pub fn auto_lr(f: &Samples, lambda: f64) -> f64 {
    1.0 / (2.0 * (gram_spectral_norm(f) + lambda).max(1e-12))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BgdRun {
    pub weights: Vec<f64>,
    /// Loss before each iteration and after the last one.
    pub losses: Vec<f64>,
}

/// Batch gradient descent on the ridge objective starting from `w0`.
///
/// With fewer samples than dimensions the iterates are tracked as `beta * w0 + F^T a`,
/// which reproduces the primal updates at a per-iteration cost independent of the dimension.
pub fn bgd(f: &Samples, t: &[f64], w0: &[f64], lambda: f64, lr: f64, iters: usize) -> Result<BgdRun> {
    if t.len() != f.rows || w0.len() != f.dim {
        return Err(Error::DimensionMismatch {
            expected: format!("{} targets, {} weights", f.rows, f.dim),
            actual: format!("{} targets, {} weights", t.len(), w0.len()),
        });
    }
    if !(lr > 0.0) || !(lambda >= 0.0) {
        return Err(Error::InvalidArgument(format!("lr {lr}, lambda {lambda}")));
    }
    if f.rows < f.dim {
        bgd_dual(f, t, w0, lambda, lr, iters)
    } else {
        bgd_primal(f, t, w0, lambda, lr, iters)
    }
}

fn track_divergence(losses: &[f64], run: &mut usize, lr: f64) -> Result<()> {
    let n = losses.len();
    let last = losses[n - 1];
    if !last.is_finite() {
        return Err(Error::Diverged { suggested: lr / 10.0 });
    }
    if n >= 2 && last > losses[n - 2] {
        *run += 1;
        if *run >= DIVERGENCE_RUN {
            return Err(Error::Diverged { suggested: lr / 10.0 });
        }
    } else {
        *run = 0;
    }
    Ok(())
}

pub fn bgd_primal(f: &Samples, t: &[f64], w0: &[f64], lambda: f64, lr: f64, iters: usize) -> Result<BgdRun> {
    let mut w = w0.to_vec();
    let mut losses = Vec::with_capacity(iters + 1);
    let mut run = 0;
    for _ in 0..iters {
        losses.push(ridge_loss(f, t, &w, lambda));
        track_divergence(&losses, &mut run, lr)?;
        let g = ridge_gradient(f, t, &w, lambda);
        axpy(&mut w, -lr, &g);
    }
    losses.push(ridge_loss(f, t, &w, lambda));
    track_divergence(&losses, &mut run, lr)?;
    Ok(BgdRun { weights: w, losses })
}

pub fn bgd_dual(f: &Samples, t: &[f64], w0: &[f64], lambda: f64, lr: f64, iters: usize) -> Result<BgdRun> {
    let n = f.rows;
    let g = f.gram();
    let fw0 = f.mul(w0);
    let w0w0 = dot(w0, w0);
    let mut beta = 1.0;
    let mut a = vec![0.0; n];
    let eval = |beta: f64, a: &[f64]| -> (Vec<f64>, f64) {
        let ga: Vec<f64> = (0..n).map(|i| dot(&g[i * n..(i + 1) * n], a)).collect();
        let pred: Vec<f64> = (0..n).map(|i| beta * fw0[i] + ga[i]).collect();
        let resid: f64 = pred.iter().zip(t).map(|(p, y)| (p - y) * (p - y)).sum();
        let norm = beta * beta * w0w0 + 2.0 * beta * dot(&fw0, a) + dot(a, &ga);
        (pred, resid + lambda * norm)
    };
    let mut losses = Vec::with_capacity(iters + 1);
    let mut run = 0;
    let shrink = 1.0 - 2.0 * lr * lambda;
    for _ in 0..iters {
        let (pred, loss) = eval(beta, &a);
        losses.push(loss);
        track_divergence(&losses, &mut run, lr)?;
        beta *= shrink;
        for i in 0..n {
            a[i] = shrink * a[i] - 2.0 * lr * (pred[i] - t[i]);
        }
    }
    losses.push(eval(beta, &a).1);
    track_divergence(&losses, &mut run, lr)?;
    let mut w: Vec<f64> = w0.iter().map(|v| beta * v).collect();
    axpy(&mut w, 1.0, &f.mul_t(&a));
    Ok(BgdRun { weights: w, losses })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressorWeights {
    pub dim: usize,
    pub lambda: f64,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    /// `w_x, w_y, w_w, w_h`
    pub w: [Vec<f64>; 4],
}

/// Per-dimension mean and standard deviation; near-constant dimensions keep unit scale.
fn standardization(rows: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let dim = rows[0].len();
    let n = rows.len() as f64;
    let mut mean = vec![0.0; dim];
    for r in rows {
        axpy(&mut mean, 1.0 / n, r);
    }
    let mut var = vec![0.0; dim];
    for r in rows {
        for ((v, x), m) in var.iter_mut().zip(r).zip(&mean) {
            *v += (x - m) * (x - m) / n;
        }
    }
    let std = var.into_iter().map(|v| if v.sqrt() > 1e-8 { v.sqrt() } else { 1.0 }).collect();
    (mean, std)
}

impl RegressorWeights {
    pub fn zeros(dim: usize, lambda: f64) -> Self {
        Self { dim, lambda, mean: vec![0.0; dim], std: vec![1.0; dim], w: std::array::from_fn(|_| vec![0.0; dim]) }
    }

    pub fn standardize(&self, feature: &[f64]) -> Result<Vec<f64>> {
        if feature.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim.to_string(), actual: feature.len().to_string() });
        }
        Ok(feature.iter().zip(&self.mean).zip(&self.std).map(|((x, m), s)| (x - m) / s).collect())
    }

    /// Raw regression outputs `(w_x.F, w_y.F, w_w.F, w_h.F)`.
    pub fn predict(&self, feature: &[f64]) -> Result<[f64; 4]> {
        let z = self.standardize(feature)?;
        Ok(std::array::from_fn(|k| dot(&self.w[k], &z)))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut s = String::new();
        let line = |s: &mut String, key: &str, v: &[f64]| {
            s.push_str(key);
            for x in v {
                let _ = write!(s, " {x:?}");
            }
            s.push('\n');
        };
        let _ = writeln!(s, "{HEADER}");
        let _ = writeln!(s, "dim {}", self.dim);
        let _ = writeln!(s, "lambda {:?}", self.lambda);
        line(&mut s, "mean", &self.mean);
        line(&mut s, "std", &self.std);
        for (key, w) in ["wx", "wy", "ww", "wh"].iter().zip(&self.w) {
            line(&mut s, key, w);
        }
        std::fs::write(path, s)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let err = |line: usize, message: String| Error::Parse { location: format!("{}:{line}", path.display()), message };
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == HEADER => {}
            _ => return Err(err(1, format!("expected header {HEADER}"))),
        }
        let mut fields = std::collections::HashMap::new();
        for (i, l) in lines {
            let mut parts = l.split_whitespace();
            let Some(key) = parts.next() else { continue };
            let vals = parts.map(|p| p.parse::<f64>().map_err(|e| err(i + 1, format!("{key}: {e}")))).collect::<Result<Vec<f64>>>()?;
            fields.insert(key.to_string(), vals);
        }
        let mut take = |key: &str| fields.remove(key).ok_or_else(|| err(0, format!("missing field {key}")));
        let dim = take("dim")?.first().copied().ok_or_else(|| err(0, "empty dim".into()))? as usize;
        let lambda = take("lambda")?.first().copied().ok_or_else(|| err(0, "empty lambda".into()))?;
        let mean = take("mean")?;
        let std = take("std")?;
        let w = [take("wx")?, take("wy")?, take("ww")?, take("wh")?];
        if mean.len() != dim || std.len() != dim || w.iter().any(|v| v.len() != dim) {
            return Err(err(0, format!("vector lengths do not match dim {dim}")));
        }
        Ok(Self { dim, lambda, mean, std, w })
    }
}

/// Standardizes the features, then runs one gradient descent per target component.
/// `init` warm-starts from existing weights and keeps their standardization.
pub fn train_regressor(
    features: &[Vec<f64>],
    targets: &[[f64; 4]],
    params: &RegressorParams,
    iters: usize,
    init: Option<&RegressorWeights>,
) -> Result<RegressorWeights> {
    if features.len() != targets.len() || features.is_empty() {
        return Err(Error::InvalidArgument(format!("{} feature rows for {} targets", features.len(), targets.len())));
    }
    let (mean, std) = match init {
        Some(w) => (w.mean.clone(), w.std.clone()),
        None => standardization(features),
    };
    let dim = mean.len();
    let proto = RegressorWeights { dim, lambda: params.lambda, mean, std, w: std::array::from_fn(|_| Vec::new()) };
    let rows = features.iter().map(|f| proto.standardize(f)).collect::<Result<Vec<_>>>()?;
    let samples = Samples::from_rows(&rows)?;
    let lr = params.lr.unwrap_or_else(|| auto_lr(&samples, params.lambda));
    let mut w: [Vec<f64>; 4] = std::array::from_fn(|_| Vec::new());
    for k in 0..4 {
        let t: Vec<f64> = targets.iter().map(|t| t[k]).collect();
        let zero = vec![0.0; dim];
        let start = init.map_or(&zero, |i| &i.w[k]);
        w[k] = bgd(&samples, &t, start, params.lambda, lr, iters)?.weights;
    }
    Ok(RegressorWeights { w, ..proto })
}

/// Jittered samples around `gt` plus `gt` itself, as features and targets.
pub fn training_pairs(frame: &Frame, gt: &BBox, n: usize, iou_min: f64, seed: u64) -> Result<(Vec<Vec<f64>>, Vec<[f64; 4]>)> {
    let mut boxes = vec![*gt];
    boxes.extend(sample_training_boxes(gt, n, iou_min, seed)?);
    let mut feats = Vec::with_capacity(boxes.len());
    let mut targets = Vec::with_capacity(boxes.len());
    for b in &boxes {
        feats.push(box_features(frame, b)?);
        targets.push(regression_targets(b, gt)?);
    }
    Ok((feats, targets))
}

/// Offline training on annotated frames of several sequences: `frames` evenly spaced
/// annotated frames per sequence, `per_frame` jittered boxes around each.
pub fn pretrain_regressor(
    sequences: &[crate::media::Sequence],
    params: &RegressorParams,
    frames: usize,
    per_frame: usize,
    seed: u64,
) -> Result<RegressorWeights> {
    let mut feats = Vec::new();
    let mut targets = Vec::new();
    for (si, seq) in sequences.iter().enumerate() {
        let n = seq.groundtruth.len().min(seq.len());
        let k = frames.clamp(1, n);
        for j in 0..k {
            let idx = j * n / k;
            let s = seed.wrapping_add((si * 7919 + idx) as u64);
            let (f, t) = training_pairs(&seq.frame(idx)?, &seq.groundtruth[idx], per_frame, params.iou_min, s)?;
            feats.extend(f);
            targets.extend(t);
        }
    }
    train_regressor(&feats, &targets, params, params.iters, None)
}

/// Refines `pre` with the regressor; log-size outputs are clamped to `params.log_clamp`.
pub fn apply_regressor(weights: &RegressorWeights, feature: &[f64], pre: &BBox, params: &RegressorParams) -> Result<(BBox, [f64; 4])> {
    let mut s = weights.predict(feature)?;
    s[2] = s[2].clamp(-params.log_clamp, params.log_clamp);
    s[3] = s[3].clamp(-params.log_clamp, params.log_clamp);
    Ok((apply_targets(pre, s, params.literal), s))
}
