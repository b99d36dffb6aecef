//! 31-channel Felzenszwalb HOG: 18 contrast-sensitive orientations, 9 contrast-insensitive
//! orientations and 4 gradient-energy (texture) channels per cell.

use std::f64::consts::PI;

use super::{grid_dims, FeatureMap};
use crate::error::Result;
use crate::media::Patch;

pub const HOG_CHANNELS: usize = 31;
const ORIENTATIONS: usize = 18;
const TRUNCATION: f64 = 0.2;
const NORM_EPS: f64 = 1e-4;
// 1 / sqrt(18)
const TEXTURE_SCALE: f64 = 0.2357;

/// Per-pixel gradient orientation bin (0..18) and magnitude. Multi-channel patches use the
/// channel with the strongest gradient. Neighbors outside the patch are edge-replicated.
pub(crate) fn pixel_gradient(patch: &Patch, r: usize, c: usize) -> (usize, f64) {
    let (w, h) = (patch.width, patch.height);
    let (cl, cr) = (c.saturating_sub(1), (c + 1).min(w - 1));
    let (ru, rd) = (r.saturating_sub(1), (r + 1).min(h - 1));
    let mut best = (0.0, 0.0, -1.0);
    for k in 0..patch.channels {
        let dx = (patch.get(r, cr, k) as f64 - patch.get(r, cl, k) as f64) / 255.0;
        let dy = (patch.get(rd, c, k) as f64 - patch.get(ru, c, k) as f64) / 255.0;
        let m2 = dx * dx + dy * dy;
        if m2 > best.2 {
            best = (dx, dy, m2);
        }
    }
    let (dx, dy, m2) = best;
    if m2 <= 0.0 {
        return (0, 0.0);
    }
    let angle = dy.atan2(dx).rem_euclid(2.0 * PI);
    let bin = (angle / (2.0 * PI / ORIENTATIONS as f64)).round() as usize % ORIENTATIONS;
    (bin, m2.sqrt())
}

/// Computes the HOG map on a `floor(h/cell) x floor(w/cell)` grid.
pub fn hog(patch: &Patch, cell_size: usize) -> Result<FeatureMap> {
    let (rows, cols) = grid_dims(patch.height, patch.width, cell_size)?;
    let plane = rows * cols;
    let cs = cell_size as f64;

    // orientation histograms with bilinear spatial interpolation
    let mut hist = vec![0.0; plane * ORIENTATIONS];
    for r in 0..patch.height {
        let yp = (r as f64 + 0.5) / cs - 0.5;
        let iy = yp.floor() as i64;
        let vy0 = yp - iy as f64;
        for c in 0..patch.width {
            let (bin, mag) = pixel_gradient(patch, r, c);
            if mag == 0.0 {
                continue;
            }
            let xp = (c as f64 + 0.5) / cs - 0.5;
            let ix = xp.floor() as i64;
            let vx0 = xp - ix as f64;
            for (dy, wy) in [(0i64, 1.0 - vy0), (1, vy0)] {
                let y = iy + dy;
                if y < 0 || y >= rows as i64 || wy == 0.0 {
                    continue;
                }
                for (dx, wx) in [(0i64, 1.0 - vx0), (1, vx0)] {
                    let x = ix + dx;
                    if x < 0 || x >= cols as i64 || wx == 0.0 {
                        continue;
                    }
                    hist[(y as usize * cols + x as usize) * ORIENTATIONS + bin] += mag * wy * wx;
                }
            }
        }
    }

    // gradient energy per cell from contrast-insensitive sums
    let energy: Vec<f64> = hist
        .chunks_exact(ORIENTATIONS)
        .map(|h| (0..9).map(|o| (h[o] + h[o + 9]).powi(2)).sum())
        .collect();
    let e = |y: i64, x: i64| -> f64 {
        let y = y.clamp(0, rows as i64 - 1) as usize;
        let x = x.clamp(0, cols as i64 - 1) as usize;
        energy[y * cols + x]
    };

    let mut map = FeatureMap::zeros(rows, cols, HOG_CHANNELS, cell_size);
    for y in 0..rows {
        for x in 0..cols {
            let (yi, xi) = (y as i64, x as i64);
            let block = |dy: i64, dx: i64| {
                1.0 / (e(yi, xi) + e(yi + dy, xi) + e(yi, xi + dx) + e(yi + dy, xi + dx) + NORM_EPS).sqrt()
            };
            let norms = [block(1, 1), block(-1, 1), block(1, -1), block(-1, -1)];
            let h = &hist[(y * cols + x) * ORIENTATIONS..(y * cols + x + 1) * ORIENTATIONS];
            let idx = y * cols + x;
            let mut texture = [0.0; 4];
            for o in 0..ORIENTATIONS {
                let mut sum = 0.0;
                for (k, n) in norms.iter().enumerate() {
                    let v = (h[o] * n).min(TRUNCATION);
                    sum += v;
                    texture[k] += v;
                }
                map.data[o * plane + idx] = 0.5 * sum;
            }
            for o in 0..9 {
                let folded = h[o] + h[o + 9];
                let sum: f64 = norms.iter().map(|n| (folded * n).min(TRUNCATION)).sum();
                map.data[(ORIENTATIONS + o) * plane + idx] = 0.5 * sum;
            }
            for (k, t) in texture.iter().enumerate() {
                map.data[(27 + k) * plane + idx] = TEXTURE_SCALE * t;
            }
        }
    }
    Ok(map)
}
