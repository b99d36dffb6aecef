//! Per-frame tracking loop: three correlation filters fused by reliability, keypoint
//! scale pre-estimation, box regression, then model and weight updates. The plain KCF
//! baseline runs the same loop with every extension switched off.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::bbox::BBox;
use crate::cf::{detect, update_model, CfParams, FilterModel, FilterTrainer, ResponseMap, UpdateRule};
use crate::error::{Error, Result};
use crate::features::{color_hist, hog, lbp_hist, FeatureMap};
use crate::fusion::{compute_frame_weights, fuse_responses, response_kl, update_weights, FusionWeights};
use crate::media::{sample_window, Frame, Patch};
use crate::regression::{apply_regressor, box_features, train_regressor, training_pairs, RegressorParams, RegressorWeights};
use crate::scale::{
    estimate_scale, estimate_scale_spread, extract_features, keypoint_weights, match_keypoints, surf_integral, weighted_centroid, Descriptor,
    Keypoint, Match, ResponseGeometry, ScaleEstimate, MIN_IMAGE_SIDE,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Brcf,
    Kcf,
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "brcf" => Ok(Mode::Brcf),
            "kcf" => Ok(Mode::Kcf),
            other => Err(Error::InvalidArgument(format!("unknown mode {other:?} (expected brcf or kcf)"))),
        }
    }
}

/// How matched keypoints turn into a scale factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScaleMethod {
    /// Distance of the weighted keypoint centroid from the target center.
    Centroid,
    /// Weighted mean distance of the keypoints from the target center.
    Spread,
}

/// Local-region radius setting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PCells {
    /// Derived from the padding: `floor(P / cell)` on the model grid.
    Auto,
    /// Keep every circular shift.
    Full,
    Fixed(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackerConfig {
    pub mode: Mode,
    pub cell_size: usize,
    pub padding_factor: f64,
    /// Longest side of the resampled search window, in pixels.
    pub template_size: usize,
    pub sigma_k: f64,
    pub sigma_label_factor: f64,
    pub lambda: f64,
    pub alpha: f64,
    pub update_rule: UpdateRule,
    pub lambda_w: f64,
    pub p_cells: PCells,
    pub color_bins: usize,
    pub surf_threshold: f64,
    pub surf_max_points: usize,
    pub upright: bool,
    pub ratio_test: f64,
    pub scale_clamp: (f64, f64),
    pub scale_method: ScaleMethod,
    /// Smallest usable previous-frame offset from the center, pixels.
    pub scale_min_offset: f64,
    pub regressor: Option<PathBuf>,
    pub regression: RegressorParams,
    pub seed: u64,
    pub use_mask: bool,
    pub use_fusion: bool,
    pub use_scale: bool,
    pub use_regression: bool,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Brcf,
            cell_size: 4,
            padding_factor: 0.75,
            template_size: 128,
            sigma_k: 0.5,
            sigma_label_factor: 0.1,
            lambda: 1e-4,
            alpha: 0.02,
            update_rule: UpdateRule::Convex,
            lambda_w: 0.025,
            p_cells: PCells::Auto,
            color_bins: 4,
            surf_threshold: 4e-4,
            surf_max_points: 100,
            upright: false,
            ratio_test: 0.7,
            scale_clamp: (0.8, 1.25),
            scale_method: ScaleMethod::Spread,
            scale_min_offset: crate::scale::MIN_DENOMINATOR,
            regressor: None,
            regression: RegressorParams::default(),
            seed: 0,
            use_mask: true,
            use_fusion: true,
            use_scale: true,
            use_regression: true,
        }
    }
}

fn parse_bool(v: &str) -> Option<bool> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" | "on" => Some(true),
        "false" | "0" | "no" | "off" => Some(false),
        _ => None,
    }
}

impl TrackerConfig {
    pub fn kcf() -> Self {
        Self { mode: Mode::Kcf, ..Self::default() }
    }

    /// Parses `key = value` lines over the defaults. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| Error::Parse { location: format!("config line {}", i + 1), message };
            let (key, value) = line.split_once('=').ok_or_else(|| err(format!("expected key = value, got {line:?}")))?;
            let (key, value) = (key.trim(), value.trim());
            cfg.set(key, value).map_err(|e| err(e.to_string()))?;
        }
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
            v.parse().map_err(|_| Error::InvalidArgument(format!("{key}: cannot parse {v:?}")))
        }
        let flag = |v: &str| parse_bool(v).ok_or_else(|| Error::InvalidArgument(format!("{key}: expected a boolean, got {v:?}")));
        match key {
            "mode" => self.mode = value.parse()?,
            "cell_size" => self.cell_size = num(key, value)?,
            "padding_factor" => self.padding_factor = num(key, value)?,
            "template_size" => self.template_size = num(key, value)?,
            "sigma_k" => self.sigma_k = num(key, value)?,
            "sigma_label_factor" => self.sigma_label_factor = num(key, value)?,
            "lambda" => self.lambda = num(key, value)?,
            "alpha" => self.alpha = num(key, value)?,
            "update_rule" => {
                self.update_rule = match value {
                    "convex" => UpdateRule::Convex,
                    "additive" => UpdateRule::Additive,
                    _ => return Err(Error::InvalidArgument(format!("update_rule: {value:?}"))),
                }
            }
            "lambda_w" => self.lambda_w = num(key, value)?,
            "P_cells" | "p_cells" => {
                self.p_cells = match value {
                    "auto" => PCells::Auto,
                    "full" => PCells::Full,
                    v => PCells::Fixed(num(key, v)?),
                }
            }
            "color_bins" => self.color_bins = num(key, value)?,
            "surf_threshold" => self.surf_threshold = num(key, value)?,
            "surf_max_points" => self.surf_max_points = num(key, value)?,
            "upright" => self.upright = flag(value)?,
            "ratio_test" => self.ratio_test = num(key, value)?,
            "scale_clamp" => {
                let (lo, hi) = value.split_once(',').ok_or_else(|| Error::InvalidArgument("scale_clamp: expected lo,hi".into()))?;
                self.scale_clamp = (num(key, lo.trim())?, num(key, hi.trim())?);
            }
            "scale_method" => {
                self.scale_method = match value {
                    "centroid" => ScaleMethod::Centroid,
                    "spread" => ScaleMethod::Spread,
                    _ => return Err(Error::InvalidArgument(format!("scale_method: {value:?}"))),
                }
            }
            "scale_min_offset" => self.scale_min_offset = num(key, value)?,
            "regressor" => self.regressor = (!value.is_empty()).then(|| PathBuf::from(value)),
            "reg_lambda" => self.regression.lambda = num(key, value)?,
            "reg_lr" => self.regression.lr = if value == "auto" { None } else { Some(num(key, value)?) },
            "reg_iters" => self.regression.iters = num(key, value)?,
            "reg_finetune_iters" => self.regression.fine_tune_iters = num(key, value)?,
            "reg_samples" => self.regression.samples = num(key, value)?,
            "reg_iou_min" => self.regression.iou_min = num(key, value)?,
            "reg_clamp" => self.regression.log_clamp = num(key, value)?,
            "reg_literal" => self.regression.literal = flag(value)?,
            "seed" => self.seed = num(key, value)?,
            "use_mask" => self.use_mask = flag(value)?,
            "use_fusion" => self.use_fusion = flag(value)?,
            "use_scale" => self.use_scale = flag(value)?,
            "use_regression" => self.use_regression = flag(value)?,
            _ => return Err(Error::InvalidArgument(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.cell_size == 0 || self.template_size < 4 * self.cell_size {
            return bad(format!("cell_size {} / template_size {}", self.cell_size, self.template_size));
        }
        if !(self.padding_factor >= 0.0) || !(self.sigma_k > 0.0) || !(self.sigma_label_factor > 0.0) || !(self.lambda > 0.0) {
            return bad("padding_factor, sigma_k, sigma_label_factor and lambda must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.alpha) || !(0.0..=1.0).contains(&self.lambda_w) {
            return bad(format!("alpha {} and lambda_w {} must lie in [0, 1]", self.alpha, self.lambda_w));
        }
        if !(self.scale_clamp.0 > 0.0 && self.scale_clamp.0 <= 1.0 && self.scale_clamp.1 >= 1.0) {
            return bad(format!("scale_clamp {:?}", self.scale_clamp));
        }
        if self.color_bins == 0 || self.color_bins > 16 {
            return bad(format!("color_bins {}", self.color_bins));
        }
        Ok(())
    }

    /// Whether each extension is active once the mode is taken into account.
    fn active(&self) -> [bool; 4] {
        match self.mode {
            Mode::Kcf => [false; 4],
            Mode::Brcf => [self.use_mask, self.use_fusion, self.use_scale, self.use_regression],
        }
    }
}

/// Wall-clock milliseconds spent in each stage of one step.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimes {
    pub translation_ms: f64,
    pub scale_train_ms: f64,
    pub scale_predict_ms: f64,
    pub regression_ms: f64,
    pub update_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameResult {
    pub frame: usize,
    pub bbox: BBox,
    /// HOG, colour, LBP; zero for inactive models.
    pub kl: [f64; 3],
    pub weights: [f64; 3],
    pub scale: f64,
    pub scale_raw: Option<f64>,
    pub matches: usize,
    pub regression: [f64; 4],
    pub peak: f64,
    pub elapsed_ms: f64,
    pub stages: StageTimes,
}

/// Fixed resampling geometry chosen at initialization.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Geometry {
    rows: usize,
    cols: usize,
    /// Search window size divided by box size, per axis.
    window_ratio: (f64, f64),
}

impl Geometry {
    fn patch_size(&self, cell: usize) -> (usize, usize) {
        (self.cols * cell, self.rows * cell)
    }

    fn window(&self, b: &BBox) -> (f64, f64) {
        (b.w * self.window_ratio.0, b.h * self.window_ratio.1)
    }
}

struct KeypointCache {
    points: Vec<Keypoint>,
    descriptors: Vec<Descriptor>,
}

pub struct Tracker {
    pub config: TrackerConfig,
    pub bbox: BBox,
    pub weights: FusionWeights,
    pub regressor: Option<RegressorWeights>,
    pub t: usize,
    frame_size: (usize, usize, usize),
    geom: Geometry,
    trainer: FilterTrainer,
    models: Vec<FilterModel>,
    keypoints: Option<KeypointCache>,
    sigma_label: f64,
    active: [bool; 4],
}

impl std::fmt::Debug for Tracker {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Tracker").field("bbox", &self.bbox).field("t", &self.t).field("weights", &self.weights).finish()
    }
}

/// Extracted features for one window: the model inputs and the gray patch.
struct WindowFeatures {
    maps: Vec<FeatureMap>,
}

impl Tracker {
    pub fn init(frame: &Frame, bbox: BBox, config: TrackerConfig) -> Result<Self> {
        config.validate()?;
        bbox.validate()?;
        if bbox.w < 2.0 || bbox.h < 2.0 || bbox.x < 0.0 || bbox.y < 0.0 || bbox.x > frame.width as f64 || bbox.y > frame.height as f64 {
            return Err(Error::InvalidBox(format!("initial box {bbox:?} outside {}x{} frame", frame.width, frame.height)));
        }
        let active = config.active();
        let cell = config.cell_size;
        let pad = (config.padding_factor * (bbox.w * bbox.h).sqrt()).round();
        let (win_w, win_h) = (bbox.w + 2.0 * pad, bbox.h + 2.0 * pad);
        let z = (config.template_size as f64 / win_w.max(win_h)).min(1.0);
        let cols = ((win_w * z) / cell as f64).floor() as usize;
        let rows = ((win_h * z) / cell as f64).floor() as usize;
        if rows < 3 || cols < 3 {
            return Err(Error::PatchTooSmall(format!("search window {win_w}x{win_h} gives a {rows}x{cols} cell grid")));
        }
        let geom = Geometry { rows, cols, window_ratio: (win_w / bbox.w, win_h / bbox.h) };
        let target_cells = ((bbox.w * z / cell as f64) * (bbox.h * z / cell as f64)).sqrt();
        let sigma_label = config.sigma_label_factor * target_cells.max(1.0);
        let p_cells = if !active[0] {
            None
        } else {
            let cap = (rows.min(cols) - 1) / 2;
            match config.p_cells {
                PCells::Full => None,
                PCells::Fixed(p) => Some(p.clamp(1, cap)),
                PCells::Auto => Some(((pad * z / cell as f64).floor() as usize).clamp(1, cap)),
            }
        };
        let params = CfParams {
            lambda: config.lambda,
            sigma_k: config.sigma_k,
            learning_rate: config.alpha,
            p_cells,
            update_rule: config.update_rule,
        };
        let label = crate::cf::gaussian_label(rows, cols, sigma_label)?;
        let trainer = FilterTrainer::new(&label, params)?;

        let mut tracker = Self {
            weights: FusionWeights { alpha: [1.0 / 3.0; 3], lambda_w: config.lambda_w, t: 1 },
            config,
            bbox,
            regressor: None,
            t: 1,
            frame_size: (frame.width, frame.height, frame.channels),
            geom,
            trainer,
            models: Vec::new(),
            keypoints: None,
            sigma_label,
            active,
        };
        if !active[1] {
            tracker.weights.alpha = [1.0, 0.0, 0.0];
        }
        let feats = tracker.features(frame, &bbox)?;
        tracker.models = feats.maps.iter().map(|m| tracker.trainer.train(m)).collect::<Result<_>>()?;

        if active[3] {
            let reg = &tracker.config.regression;
            let pre = match &tracker.config.regressor {
                Some(path) => Some(RegressorWeights::load(path)?),
                None => None,
            };
            let (f, t) = training_pairs(frame, &bbox, reg.samples, reg.iou_min, tracker.config.seed)?;
            tracker.regressor = Some(train_regressor(&f, &t, reg, reg.fine_tune_iters, pre.as_ref())?);
        }
        if active[2] {
            let (points, descriptors) = tracker.keypoints_at(frame, bbox.center(), tracker.geom.window(&bbox))?;
            tracker.keypoints = Some(KeypointCache { points, descriptors });
        }
        Ok(tracker)
    }

    pub fn sigma_label(&self) -> f64 {
        self.sigma_label
    }

    pub fn grid(&self) -> (usize, usize) {
        (self.geom.rows, self.geom.cols)
    }

    pub fn p_cells(&self) -> Option<usize> {
        self.trainer.params.p_cells
    }

    fn sample(&self, frame: &Frame, center: (f64, f64), window: (f64, f64)) -> Result<Patch> {
        sample_window(frame, center, window, self.geom.patch_size(self.config.cell_size))
    }

    fn features(&self, frame: &Frame, b: &BBox) -> Result<WindowFeatures> {
        let patch = self.sample(frame, b.center(), self.geom.window(b))?;
        let cell = self.config.cell_size;
        let mut maps = vec![hog(&patch, cell)?];
        if self.active[1] {
            let gray = if patch.channels == 1 { patch.clone() } else { patch.to_gray() };
            let rgb = if patch.channels == 3 {
                patch
            } else {
                Patch { channels: 3, data: gray.data.iter().flat_map(|&v| [v, v, v]).collect(), ..gray.clone() }
            };
            maps.push(color_hist(&rgb, cell, self.config.color_bins)?);
            maps.push(lbp_hist(&gray, cell)?);
        }
        for m in &mut maps {
            m.apply_cosine_window();
        }
        Ok(WindowFeatures { maps })
    }

    /// Keypoints and descriptors of the gray search window, positions in frame pixels.
    fn keypoints_at(&self, frame: &Frame, center: (f64, f64), window: (f64, f64)) -> Result<(Vec<Keypoint>, Vec<Descriptor>)> {
        let patch = self.sample(frame, center, window)?;
        let gray = if patch.channels == 1 { patch } else { patch.to_gray() };
        if gray.width < MIN_IMAGE_SIDE || gray.height < MIN_IMAGE_SIDE {
            return Ok((Vec::new(), Vec::new()));
        }
        let integral = surf_integral(&gray.as_frame())?;
        let (mut kps, descs) = extract_features(&integral, self.config.surf_threshold, self.config.surf_max_points, self.config.upright)?;
        for k in &mut kps {
            let (fx, fy) = gray.to_frame(k.x + 0.5, k.y + 0.5);
            k.x = fx;
            k.y = fy;
            k.scale *= gray.scale.0;
        }
        Ok((kps, descs))
    }

    fn check_frame(&self, frame: &Frame) -> Result<()> {
        if (frame.width, frame.height, frame.channels) != self.frame_size {
            return Err(Error::DimensionMismatch {
                expected: format!("{}x{}x{}", self.frame_size.0, self.frame_size.1, self.frame_size.2),
                actual: format!("{}x{}x{}", frame.width, frame.height, frame.channels),
            });
        }
        Ok(())
    }

    /// Runs one frame of the configured tracker and updates the state.
    pub fn step(&mut self, frame: &Frame) -> Result<FrameResult> {
        self.check_frame(frame)?;
        let start = Instant::now();
        let mut stages = StageTimes::default();
        let frame_no = self.t + 1;
        let prev = self.bbox;
        let window = self.geom.window(&prev);

        // translation
        let feats = self.features(frame, &prev)?;
        let responses = self.models.iter().zip(&feats.maps).map(|(m, z)| detect(m, z)).collect::<Result<Vec<_>>>()?;
        let mut kl = [0.0; 3];
        let fused = if self.active[1] {
            for (k, r) in kl.iter_mut().zip(&responses) {
                *k = response_kl(r, self.sigma_label)?;
            }
            fuse_responses([&responses[0], &responses[1], &responses[2]], &self.weights)?
        } else {
            responses[0].clone()
        };
        let (dy, dx) = fused.subcell_peak();
        let (cell_w, cell_h) = (window.0 / self.geom.cols as f64, window.1 / self.geom.rows as f64);
        let moved = prev.translated(dx * cell_w, dy * cell_h);
        stages.translation_ms = ms(start);

        // scale pre-estimation
        let t_scale = Instant::now();
        let estimate = if self.active[2] {
            self.pre_estimate_scale(frame, &prev, &moved, window, &fused, (cell_w, cell_h))?
        } else {
            ScaleEstimate::identity(0)
        };
        let pre = moved.scaled(estimate.scale, estimate.scale);
        stages.scale_predict_ms = ms(t_scale);

        // box regression
        let t_reg = Instant::now();
        let (refined, deltas) = match (&self.regressor, self.active[3]) {
            (Some(reg), true) => {
                let f = box_features(frame, &pre)?;
                apply_regressor(reg, &f, &pre, &self.config.regression)?
            }
            _ => (pre, [0.0; 4]),
        };
        stages.regression_ms = ms(t_reg);

        let final_box = self.clamp_box(refined, frame_no)?;

        // model and weight updates at the final box
        let t_upd = Instant::now();
        let feats = self.features(frame, &final_box)?;
        for (model, x) in self.models.iter_mut().zip(&feats.maps) {
            let fresh = self.trainer.train(x)?;
            update_model(model, &fresh, false);
        }
        if self.active[1] {
            self.weights = update_weights(&self.weights, compute_frame_weights(kl));
        }
        stages.update_ms = ms(t_upd);

        self.bbox = final_box;
        self.t = frame_no;
        Ok(FrameResult {
            frame: frame_no,
            bbox: final_box,
            kl,
            weights: self.weights.alpha,
            scale: estimate.scale,
            scale_raw: estimate.raw,
            matches: estimate.matches,
            regression: deltas,
            peak: fused.peak_value,
            elapsed_ms: ms(start),
            stages,
        })
    }

    /// The baseline step; identical to `step` when the tracker runs in KCF mode.
    pub fn step_kcf_baseline(&mut self, frame: &Frame) -> Result<FrameResult> {
        if self.config.mode != Mode::Kcf {
            return Err(Error::InvalidArgument("tracker was not initialized in kcf mode".into()));
        }
        self.step(frame)
    }

    fn pre_estimate_scale(
        &mut self,
        frame: &Frame,
        prev: &BBox,
        moved: &BBox,
        window: (f64, f64),
        fused: &ResponseMap,
        cell: (f64, f64),
    ) -> Result<ScaleEstimate> {
        let (points, descriptors) = self.keypoints_at(frame, moved.center(), window)?;
        let cache = self.keypoints.replace(KeypointCache { points, descriptors }).expect("keypoint cache set at init");
        let latest = self.keypoints.as_ref().expect("just stored");
        let pairs: Vec<Match> = match_keypoints(&cache.descriptors, &latest.descriptors, self.config.ratio_test);
        if pairs.len() < crate::scale::MIN_MATCHES {
            return Ok(ScaleEstimate::identity(pairs.len()));
        }
        let (sx, sy) = (moved.x - prev.x, moved.y - prev.y);
        let geom = ResponseGeometry { center: prev.center(), cell };
        let p_pts: Vec<(f64, f64)> = pairs.iter().map(|m| (cache.points[m.prev].x, cache.points[m.prev].y)).collect();
        let l_pts: Vec<(f64, f64)> = pairs.iter().map(|m| (latest.points[m.next].x, latest.points[m.next].y)).collect();
        let shifted: Vec<(f64, f64)> = p_pts.iter().map(|&(x, y)| (x + sx, y + sy)).collect();
        let w_p = keypoint_weights(fused, &shifted, &geom);
        let w_l = keypoint_weights(fused, &l_pts, &geom);
        let clamp = self.config.scale_clamp;
        if self.config.scale_method == ScaleMethod::Spread {
            let w: Vec<f64> = w_p.iter().zip(&w_l).map(|(a, b)| (a * b).sqrt()).collect();
            let min = self.config.scale_min_offset;
            return Ok(estimate_scale_spread(&p_pts, prev.center(), &l_pts, moved.center(), &w, min, clamp));
        }
        let m_p = weighted_centroid(&p_pts, &w_p)?;
        let m_l = weighted_centroid(&l_pts, &w_l)?;
        let den = (m_p.0 - prev.center().0).hypot(m_p.1 - prev.center().1);
        if den < self.config.scale_min_offset {
            return Ok(ScaleEstimate::identity(pairs.len()));
        }
        Ok(estimate_scale(m_p, prev.center(), m_l, moved.center(), pairs.len(), clamp))
    }

    /// Keeps the centre inside the frame and the size within the frame; fails on collapse.
    fn clamp_box(&self, b: BBox, frame_no: usize) -> Result<BBox> {
        let (fw, fh) = (self.frame_size.0 as f64, self.frame_size.1 as f64);
        if !b.is_valid() || b.w < 2.0 || b.h < 2.0 {
            return Err(Error::TrackingFailure { frame: frame_no, reason: format!("box collapsed to {b:?}") });
        }
        Ok(BBox::new(b.x.clamp(0.0, fw), b.y.clamp(0.0, fh), b.w.min(fw), b.h.min(fh)))
    }
}

fn ms(since: Instant) -> f64 {
    since.elapsed().as_secs_f64() * 1e3
}

/// Runs a tracker over every frame of a sequence; the first result is the initial box.
pub fn track_sequence(seq: &crate::media::Sequence, config: &TrackerConfig) -> Result<Vec<FrameResult>> {
    let first = seq.frame(0)?;
    let init_box = *seq.groundtruth.first().ok_or(Error::NoFrames(PathBuf::from(&seq.name)))?;
    let start = Instant::now();
    let mut tracker = Tracker::init(&first, init_box, config.clone())?;
    let mut out = vec![FrameResult {
        frame: 1,
        bbox: init_box,
        kl: [0.0; 3],
        weights: tracker.weights.alpha,
        scale: 1.0,
        scale_raw: None,
        matches: 0,
        regression: [0.0; 4],
        peak: 1.0,
        elapsed_ms: ms(start),
        stages: StageTimes::default(),
    }];
    for i in 1..seq.len() {
        let frame = seq.frame(i)?;
        out.push(tracker.step(&frame)?);
    }
    Ok(out)
}
