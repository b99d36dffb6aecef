//! Per-cell feature maps extracted from image patches.
//!
//! Every extractor produces a [`FeatureMap`] on the same cell grid
//! (`floor(height / cell) x floor(width / cell)`) so that correlation responses
//! from different features can be summed point-wise.

mod color;
mod hog;
mod lbp;

pub use color::color_hist;
pub use hog::{hog, HOG_CHANNELS};
pub use lbp::{lbp_code, lbp_hist, uniform_index, LBP_CHANNELS};

use crate::error::{Error, Result};

/// Real-valued `rows x cols x channels` grid; each channel is stored row-major and
/// channels are stored one after another.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    pub rows: usize,
    pub cols: usize,
    pub channels: usize,
    pub cell_size: usize,
    pub data: Vec<f64>,
}

impl FeatureMap {
    pub fn zeros(rows: usize, cols: usize, channels: usize, cell_size: usize) -> Self {
        Self { rows, cols, channels, cell_size, data: vec![0.0; rows * cols * channels] }
    }

    pub fn from_vec(rows: usize, cols: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols * channels {
            return Err(Error::DimensionMismatch {
                expected: format!("{rows}x{cols}x{channels}"),
                actual: format!("{} values", data.len()),
            });
        }
        Ok(Self { rows, cols, channels, cell_size: 1, data })
    }

    #[inline]
    pub fn plane_len(&self) -> usize {
        self.rows * self.cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize, ch: usize) -> f64 {
        self.data[ch * self.plane_len() + row * self.cols + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, ch: usize, v: f64) {
        let n = self.plane_len();
        self.data[ch * n + row * self.cols + col] = v;
    }

    pub fn channel(&self, ch: usize) -> &[f64] {
        let n = self.plane_len();
        &self.data[ch * n..(ch + 1) * n]
    }

    /// Sum over channels at one cell.
    pub fn cell_sum(&self, row: usize, col: usize) -> f64 {
        (0..self.channels).map(|c| self.get(row, col, c)).sum()
    }

    pub fn same_shape(&self, other: &FeatureMap) -> bool {
        self.rows == other.rows && self.cols == other.cols && self.channels == other.channels
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { data: self.data.iter().map(|v| v * factor).collect(), ..self.clone() }
    }

    /// Concatenates the channels of several maps sharing one grid.
    pub fn stack(maps: &[&FeatureMap]) -> Result<Self> {
        let first = maps.first().ok_or_else(|| Error::InvalidArgument("nothing to stack".into()))?;
        let mut data = Vec::new();
        let mut channels = 0;
        for m in maps {
            if m.rows != first.rows || m.cols != first.cols {
                return Err(Error::DimensionMismatch {
                    expected: format!("{}x{}", first.rows, first.cols),
                    actual: format!("{}x{}", m.rows, m.cols),
                });
            }
            data.extend_from_slice(&m.data);
            channels += m.channels;
        }
        Ok(Self { rows: first.rows, cols: first.cols, channels, cell_size: first.cell_size, data })
    }

    /// Multiplies every channel by a separable Hann window.
    pub fn apply_cosine_window(&mut self) {
        let wr = hann(self.rows);
        let wc = hann(self.cols);
        let n = self.plane_len();
        for ch in 0..self.channels {
            let plane = &mut self.data[ch * n..(ch + 1) * n];
            for (r, row) in plane.chunks_exact_mut(self.cols).enumerate() {
                for (c, v) in row.iter_mut().enumerate() {
                    *v *= wr[r] * wc[c];
                }
            }
        }
    }
}

/// Symmetric Hann window, zero at both ends (all ones for `n <= 2`).
pub fn hann(n: usize) -> Vec<f64> {
    if n <= 2 {
        return vec![1.0; n];
    }
    (0..n)
        .map(|i| 0.5 * (1.0 - (2.0 * std::f64::consts::PI * i as f64 / (n - 1) as f64).cos()))
        .collect()
}

fn grid_dims(height: usize, width: usize, cell_size: usize) -> Result<(usize, usize)> {
    if cell_size == 0 {
        return Err(Error::InvalidArgument("cell size must be positive".into()));
    }
    let rows = height / cell_size;
    let cols = width / cell_size;
    if rows == 0 || cols == 0 {
        return Err(Error::PatchTooSmall(format!("{width}x{height} patch with cell size {cell_size}")));
    }
    Ok((rows, cols))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hann_shape() {
        let w = hann(9);
        assert_eq!(w[0], 0.0);
        assert!((w[4] - 1.0).abs() < 1e-15);
        assert!((w[8]).abs() < 1e-15);
        assert!((w[2] - w[6]).abs() < 1e-15);
    }

    #[test]
    fn cosine_window_zeroes_border() {
        let mut m = FeatureMap { rows: 5, cols: 6, channels: 2, cell_size: 4, data: vec![1.0; 60] };
        m.apply_cosine_window();
        for ch in 0..2 {
            for c in 0..6 {
                assert_eq!(m.get(0, c, ch), 0.0);
            }
            assert!(m.get(2, 3, ch) > 0.5);
        }
    }
}
