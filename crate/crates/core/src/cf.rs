//! Kernelized correlation filter: Gaussian labels, kernel correlation in the Fourier domain,
//! ridge-regression training, detection, model update and local-region shift masking.
//!
//! All 2-D maps use the wrap-around layout: index `(0, 0)` is the zero shift, index `r`
//! stands for shift `r` when `r <= n / 2` and for `r - n` otherwise.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::features::FeatureMap;

/// Cached forward/inverse plans for one `rows x cols` grid.
#[derive(Clone)]
pub struct Fft2d {
    rows: usize,
    cols: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Fft2d {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Fft2d({}x{})", self.rows, self.cols)
    }
}

impl Fft2d {
    pub fn new(rows: usize, cols: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            rows,
            cols,
            row_fwd: planner.plan_fft_forward(cols),
            row_inv: planner.plan_fft_inverse(cols),
            col_fwd: planner.plan_fft_forward(rows),
            col_inv: planner.plan_fft_inverse(rows),
        }
    }

    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn run(&self, buf: &mut [Complex64], row: &Arc<dyn Fft<f64>>, col: &Arc<dyn Fft<f64>>) {
        debug_assert_eq!(buf.len(), self.len());
        row.process(buf);
        let (r, c) = (self.rows, self.cols);
        let mut t = vec![Complex64::new(0.0, 0.0); r * c];
        for i in 0..r {
            for j in 0..c {
                t[j * r + i] = buf[i * c + j];
            }
        }
        col.process(&mut t);
        for i in 0..r {
            for j in 0..c {
                buf[i * c + j] = t[j * r + i];
            }
        }
    }

    /// Unnormalized forward transform in place.
    pub fn forward(&self, buf: &mut [Complex64]) {
        self.run(buf, &self.row_fwd, &self.col_fwd);
    }

    /// Inverse transform in place, scaled by `1 / (rows * cols)`.
    pub fn inverse(&self, buf: &mut [Complex64]) {
        self.run(buf, &self.row_inv, &self.col_inv);
        let s = 1.0 / self.len() as f64;
        buf.iter_mut().for_each(|v| *v *= s);
    }

    pub fn forward_real(&self, values: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward(&mut buf);
        buf
    }
}

/// Multi-channel spectrum of a real map; channels are stored one after another.
#[derive(Debug, Clone)]
pub struct SpectrumMap {
    pub rows: usize,
    pub cols: usize,
    pub channels: usize,
    pub data: Vec<Complex64>,
}

impl SpectrumMap {
    pub fn of(fft: &Fft2d, map: &FeatureMap) -> Self {
        let n = map.plane_len();
        let mut data = Vec::with_capacity(map.data.len());
        for ch in 0..map.channels {
            data.extend(map.channel(ch).iter().map(|&v| Complex64::new(v, 0.0)));
            fft.forward(&mut data[ch * n..(ch + 1) * n]);
        }
        Self { rows: map.rows, cols: map.cols, channels: map.channels, data }
    }

    pub fn channel(&self, ch: usize) -> &[Complex64] {
        let n = self.rows * self.cols;
        &self.data[ch * n..(ch + 1) * n]
    }

    /// Spatial squared norm via Parseval.
    pub fn energy(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum::<f64>() / (self.rows * self.cols) as f64
    }
}

/// Signed shift represented by wrap-around index `i` on an axis of length `n`.
#[inline]
pub fn shift_offset(i: usize, n: usize) -> i64 {
    if i <= n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

/// Gaussian regression targets over circular shifts, peak 1 at the zero shift.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelMap {
    pub rows: usize,
    pub cols: usize,
    pub sigma: f64,
    pub data: Vec<f64>,
}

impl LabelMap {
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }
}

pub fn gaussian_label(rows: usize, cols: usize, sigma: f64) -> Result<LabelMap> {
    if rows == 0 || cols == 0 || !(sigma > 0.0) {
        return Err(Error::InvalidArgument(format!("label {rows}x{cols}, sigma {sigma}")));
    }
    let mut data = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        let dy = shift_offset(r, rows) as f64;
        for c in 0..cols {
            let dx = shift_offset(c, cols) as f64;
            data.push((-(dx * dx + dy * dy) / (2.0 * sigma * sigma)).exp());
        }
    }
    Ok(LabelMap { rows, cols, sigma, data })
}

/// Zeroes every entry whose shift lies outside `[-p_cells, p_cells]` on either axis.
pub fn apply_local_region_mask(values: &mut [f64], rows: usize, cols: usize, p_cells: usize) -> Result<()> {
    if 2 * p_cells + 1 > rows.min(cols) {
        return Err(Error::WindowTooLarge { p_cells, rows, cols });
    }
    debug_assert_eq!(values.len(), rows * cols);
    let p = p_cells as i64;
    for r in 0..rows {
        let inside_r = shift_offset(r, rows).abs() <= p;
        for c in 0..cols {
            if !inside_r || shift_offset(c, cols).abs() > p {
                values[r * cols + c] = 0.0;
            }
        }
    }
    Ok(())
}

pub fn mask_label(label: &LabelMap, p_cells: usize) -> Result<LabelMap> {
    let mut out = label.clone();
    apply_local_region_mask(&mut out.data, label.rows, label.cols, p_cells)?;
    Ok(out)
}

/// Gaussian kernel correlation of two spectra; returns the spatial kernel map.
fn gaussian_correlation(fft: &Fft2d, x: &SpectrumMap, z: &SpectrumMap, sigma: f64) -> Vec<f64> {
    let n = x.rows * x.cols;
    let mut acc = vec![Complex64::new(0.0, 0.0); n];
    for ch in 0..x.channels {
        for ((a, xv), zv) in acc.iter_mut().zip(x.channel(ch)).zip(z.channel(ch)) {
            *a += xv.conj() * zv;
        }
    }
    fft.inverse(&mut acc);
    let xx = x.energy();
    let zz = z.energy();
    let denom = sigma * sigma * (n * x.channels) as f64;
    acc.iter().map(|v| (-((xx + zz - 2.0 * v.re).max(0.0)) / denom).exp()).collect()
}

fn check_same(x: &FeatureMap, z: &FeatureMap) -> Result<()> {
    if !x.same_shape(z) {
        return Err(Error::DimensionMismatch {
            expected: format!("{}x{}x{}", x.rows, x.cols, x.channels),
            actual: format!("{}x{}x{}", z.rows, z.cols, z.channels),
        });
    }
    Ok(())
}

/// Spatial Gaussian kernel map `k(d) = exp(-|x - z shifted by d|^2 / (sigma^2 N))`, evaluated
/// for all circular shifts at once through the FFT.
pub fn kernel_correlation(x: &FeatureMap, z: &FeatureMap, sigma: f64) -> Result<Vec<f64>> {
    check_same(x, z)?;
    let fft = Fft2d::new(x.rows, x.cols);
    Ok(gaussian_correlation(&fft, &SpectrumMap::of(&fft, x), &SpectrumMap::of(&fft, z), sigma))
}

/// How `update_model` blends a freshly trained model into the running one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UpdateRule {
    /// `c <- (1 - a) c + a c_t`
    #[default]
    Convex,
    /// `c <- c + a c_t`; the template still uses the convex blend.
    Additive,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CfParams {
    pub lambda: f64,
    pub sigma_k: f64,
    pub learning_rate: f64,
    /// Local-region radius in cells; `None` keeps every circular shift.
    pub p_cells: Option<usize>,
    pub update_rule: UpdateRule,
}

impl Default for CfParams {
    fn default() -> Self {
        Self { lambda: 1e-4, sigma_k: 0.5, learning_rate: 0.02, p_cells: None, update_rule: UpdateRule::Convex }
    }
}

/// One trained sub-model.
#[derive(Debug, Clone)]
pub struct FilterModel {
    pub params: CfParams,
    pub c_hat: Vec<Complex64>,
    pub x_hat: SpectrumMap,
    pub y_hat: Vec<Complex64>,
    fft: Fft2d,
}

impl FilterModel {
    pub fn rows(&self) -> usize {
        self.x_hat.rows
    }

    pub fn cols(&self) -> usize {
        self.x_hat.cols
    }

    /// Dual coefficients in the spatial domain.
    pub fn spatial_coefficients(&self) -> Vec<f64> {
        let mut c = self.c_hat.clone();
        self.fft.inverse(&mut c);
        c.iter().map(|v| v.re).collect()
    }
}

/// Trains filters for a fixed grid, reusing the FFT plan and the (masked) label spectrum.
#[derive(Debug, Clone)]
pub struct FilterTrainer {
    pub params: CfParams,
    pub label: LabelMap,
    fft: Fft2d,
    y_hat: Vec<Complex64>,
}

impl FilterTrainer {
    pub fn new(label: &LabelMap, params: CfParams) -> Result<Self> {
        if !(params.lambda > 0.0) || !(params.sigma_k > 0.0) || !(0.0..=1.0).contains(&params.learning_rate) {
            return Err(Error::InvalidArgument(format!("invalid filter parameters {params:?}")));
        }
        let fft = Fft2d::new(label.rows, label.cols);
        let label = match params.p_cells {
            Some(p) => mask_label(label, p)?,
            None => label.clone(),
        };
        let y_hat = fft.forward_real(&label.data);
        Ok(Self { params, label, fft, y_hat })
    }

    pub fn fft(&self) -> &Fft2d {
        &self.fft
    }

    fn check_grid(&self, x: &FeatureMap) -> Result<()> {
        if x.rows != self.label.rows || x.cols != self.label.cols {
            return Err(Error::DimensionMismatch {
                expected: format!("{}x{}", self.label.rows, self.label.cols),
                actual: format!("{}x{}", x.rows, x.cols),
            });
        }
        Ok(())
    }

    /// Solves `c_hat = y_hat / (k_hat_xx + lambda)` with the local-region mask applied to
    /// the spatial kernel map.
    pub fn train(&self, x: &FeatureMap) -> Result<FilterModel> {
        self.check_grid(x)?;
        let x_hat = SpectrumMap::of(&self.fft, x);
        self.train_spectrum(x_hat)
    }

    fn train_spectrum(&self, x_hat: SpectrumMap) -> Result<FilterModel> {
        let (rows, cols) = (x_hat.rows, x_hat.cols);
        let mut kxx = gaussian_correlation(&self.fft, &x_hat, &x_hat, self.params.sigma_k);
        if let Some(p) = self.params.p_cells {
            apply_local_region_mask(&mut kxx, rows, cols, p)?;
        }
        let k_hat = self.fft.forward_real(&kxx);
        let lambda = self.params.lambda;
        let c_hat = self
            .y_hat
            .iter()
            .zip(&k_hat)
            .map(|(y, k)| {
                // a masked kernel spectrum can dip below zero; clamp it so |denominator| >= lambda
                let d = Complex64::new(k.re.max(0.0) + lambda, k.im);
                debug_assert!(d.norm() >= lambda);
                y / d
            })
            .collect();
        Ok(FilterModel { params: self.params, c_hat, x_hat, y_hat: self.y_hat.clone(), fft: self.fft.clone() })
    }

    pub fn detect(&self, model: &FilterModel, z: &FeatureMap) -> Result<ResponseMap> {
        detect(model, z)
    }
}

pub fn train_filter(x: &FeatureMap, label: &LabelMap, params: CfParams) -> Result<FilterModel> {
    FilterTrainer::new(label, params)?.train(x)
}

/// Real response map with its argmax.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseMap {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
    pub peak: (usize, usize),
    pub peak_value: f64,
    /// Largest imaginary magnitude discarded by taking the real part.
    pub imag_residue: f64,
}

impl ResponseMap {
    pub fn from_values(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols || data.is_empty() {
            return Err(Error::DimensionMismatch { expected: format!("{rows}x{cols}"), actual: format!("{}", data.len()) });
        }
        let (idx, &peak_value) = data
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
            .expect("non-empty");
        Ok(Self { rows, cols, peak: (idx / cols, idx % cols), peak_value, data, imag_residue: 0.0 })
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    /// Value at a signed shift, wrapping around the grid.
    pub fn at_shift(&self, dy: i64, dx: i64) -> f64 {
        let r = dy.rem_euclid(self.rows as i64) as usize;
        let c = dx.rem_euclid(self.cols as i64) as usize;
        self.get(r, c)
    }

    /// Argmax as a signed shift `(dy, dx)` in cells.
    pub fn peak_shift(&self) -> (i64, i64) {
        (shift_offset(self.peak.0, self.rows), shift_offset(self.peak.1, self.cols))
    }

    /// Argmax refined to sub-cell precision by a 1-D parabola fit along each axis.
    pub fn subcell_peak(&self) -> (f64, f64) {
        let (dy, dx) = self.peak_shift();
        let center = self.peak_value;
        let refine = |minus: f64, plus: f64| {
            let denom = minus - 2.0 * center + plus;
            if denom < 0.0 {
                (0.5 * (minus - plus) / denom).clamp(-0.5, 0.5)
            } else {
                0.0
            }
        };
        let oy = if self.rows >= 3 { refine(self.at_shift(dy - 1, dx), self.at_shift(dy + 1, dx)) } else { 0.0 };
        let ox = if self.cols >= 3 { refine(self.at_shift(dy, dx - 1), self.at_shift(dy, dx + 1)) } else { 0.0 };
        (dy as f64 + oy, dx as f64 + ox)
    }
}

/// Response `IFFT(k_hat_xz * c_hat)`; its argmax is the translation of `z` relative to the
/// model template.
pub fn detect(model: &FilterModel, z: &FeatureMap) -> Result<ResponseMap> {
    let x = &model.x_hat;
    if z.rows != x.rows || z.cols != x.cols || z.channels != x.channels {
        return Err(Error::DimensionMismatch {
            expected: format!("{}x{}x{}", x.rows, x.cols, x.channels),
            actual: format!("{}x{}x{}", z.rows, z.cols, z.channels),
        });
    }
    let fft = &model.fft;
    let z_hat = SpectrumMap::of(fft, z);
    let kxz = gaussian_correlation(fft, x, &z_hat, model.params.sigma_k);
    let mut resp: Vec<Complex64> = fft.forward_real(&kxz).iter().zip(&model.c_hat).map(|(k, c)| k * c).collect();
    fft.inverse(&mut resp);
    let imag_residue = resp.iter().map(|v| v.im.abs()).fold(0.0, f64::max);
    let mut map = ResponseMap::from_values(x.rows, x.cols, resp.iter().map(|v| v.re).collect())?;
    map.imag_residue = imag_residue;
    Ok(map)
}

/// Blends a freshly trained model into `model`. The first frame replaces it wholesale.
pub fn update_model(model: &mut FilterModel, fresh: &FilterModel, first_frame: bool) {
    if first_frame {
        *model = fresh.clone();
        return;
    }
    let a = model.params.learning_rate;
    match model.params.update_rule {
        UpdateRule::Convex => {
            for (c, n) in model.c_hat.iter_mut().zip(&fresh.c_hat) {
                *c = *c * (1.0 - a) + n * a;
            }
        }
        UpdateRule::Additive => {
            for (c, n) in model.c_hat.iter_mut().zip(&fresh.c_hat) {
                *c += n * a;
            }
        }
    }
    for (x, n) in model.x_hat.data.iter_mut().zip(&fresh.x_hat.data) {
        *x = *x * (1.0 - a) + n * a;
    }
}
