use super::{grid_dims, FeatureMap};
use crate::error::{Error, Result};
use crate::media::Patch;

/// Per-cell joint RGB histogram with `bins_per_channel^3` channels, each cell summing to 1.
pub fn color_hist(patch: &Patch, cell_size: usize, bins_per_channel: usize) -> Result<FeatureMap> {
    if patch.channels != 3 {
        return Err(Error::ColorRequired(format!("color histogram on a {}-channel patch", patch.channels)));
    }
    if bins_per_channel == 0 || bins_per_channel > 256 {
        return Err(Error::InvalidArgument(format!("bins_per_channel = {bins_per_channel}")));
    }
    let (rows, cols) = grid_dims(patch.height, patch.width, cell_size)?;
    let b = bins_per_channel;
    let channels = b * b * b;
    let mut map = FeatureMap::zeros(rows, cols, channels, cell_size);
    let plane = rows * cols;
    let weight = 1.0 / (cell_size * cell_size) as f64;
    for r in 0..rows * cell_size {
        for c in 0..cols * cell_size {
            let q = |k: usize| patch.get(r, c, k) as usize * b / 256;
            let bin = (q(0) * b + q(1)) * b + q(2);
            map.data[bin * plane + (r / cell_size) * cols + c / cell_size] += weight;
        }
    }
    Ok(map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bbox::BBox;

    fn patch(w: usize, h: usize, data: Vec<u8>) -> Patch {
        Patch {
            width: w,
            height: h,
            channels: 3,
            data,
            origin: (0.0, 0.0),
            scale: (1.0, 1.0),
            source: BBox::new(w as f64 / 2.0, h as f64 / 2.0, w as f64, h as f64),
            padding: 0.0,
        }
    }

    #[test]
    fn single_color_is_one_hot() {
        let p = patch(8, 8, [200u8, 10, 90].repeat(64));
        let m = color_hist(&p, 4, 4).unwrap();
        assert_eq!((m.rows, m.cols, m.channels), (2, 2, 64));
        let bin = (3 * 4) * 4 + 1;
        for r in 0..2 {
            for c in 0..2 {
                for ch in 0..64 {
                    let expect = if ch == bin { 1.0 } else { 0.0 };
                    assert_eq!(m.get(r, c, ch), expect);
                }
            }
        }
    }

    #[test]
    fn checkerboard_splits_evenly() {
        let mut data = Vec::new();
        for r in 0..4 {
            for c in 0..4 {
                if (r + c) % 2 == 0 {
                    data.extend_from_slice(&[0, 0, 0]);
                } else {
                    data.extend_from_slice(&[255, 255, 255]);
                }
            }
        }
        let m = color_hist(&patch(4, 4, data), 4, 4).unwrap();
        // counting oracle: 8 black pixels -> bin 0, 8 white pixels -> bin 63
        assert_eq!(m.get(0, 0, 0), 0.5);
        assert_eq!(m.get(0, 0, 63), 0.5);
        assert_eq!(m.cell_sum(0, 0), 1.0);
    }

    #[test]
    fn random_cells_sum_to_one() {
        let data: Vec<u8> = (0..24 * 20 * 3).map(|i| ((i * 7919) % 251) as u8).collect();
        let m = color_hist(&patch(24, 20, data), 4, 4).unwrap();
        for r in 0..m.rows {
            for c in 0..m.cols {
                assert!((m.cell_sum(r, c) - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn gray_input_rejected() {
        let mut p = patch(4, 4, vec![0; 16]);
        p.channels = 1;
        assert!(matches!(color_hist(&p, 4, 4), Err(Error::ColorRequired(_))));
    }

    #[test]
    fn shift_by_one_cell_shifts_cells() {
        let px = |r: usize, c: usize| [((r * 37 + c * 11) % 256) as u8, ((r * r + 3 * c) % 256) as u8, ((c * c + 7 * r) % 256) as u8];
        let base = patch(32, 32, (0..32 * 32).flat_map(|i| px(i / 32, i % 32)).collect());
        let shifted = patch(32, 32, (0..32 * 32).flat_map(|i| px(i / 32 + 4, i % 32)).collect());
        let (a, b) = (color_hist(&base, 4, 4).unwrap(), color_hist(&shifted, 4, 4).unwrap());
        for ch in 0..64 {
            for r in 0..7 {
                for c in 0..8 {
                    assert_eq!(a.get(r + 1, c, ch), b.get(r, c, ch));
                }
            }
        }
    }
}
