use std::sync::OnceLock;

use super::{grid_dims, FeatureMap};
use crate::error::{Error, Result};
use crate::media::Patch;

/// 58 uniform patterns plus one bin for all non-uniform codes.
pub const LBP_CHANNELS: usize = 59;

// clockwise from the top-left neighbor
const NEIGHBORS: [(i64, i64); 8] = [(-1, -1), (-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1)];

/// LBP(8,1) code of an interior pixel: bit `i` is set when neighbor `i` is `>=` the center.
pub fn lbp_code(patch: &Patch, r: usize, c: usize) -> u8 {
    let center = patch.get(r, c, 0);
    let mut code = 0u8;
    for (i, (dr, dc)) in NEIGHBORS.iter().enumerate() {
        let v = patch.get((r as i64 + dr) as usize, (c as i64 + dc) as usize, 0);
        code |= ((v >= center) as u8) << i;
    }
    code
}

/// Histogram bin of a code: uniform codes (at most two circular bit transitions) are numbered
/// 0..58 in ascending code order, everything else maps to 58.
pub fn uniform_index(code: u8) -> usize {
    static TABLE: OnceLock<[u8; 256]> = OnceLock::new();
    let table = TABLE.get_or_init(|| {
        let mut t = [0u8; 256];
        let mut next = 0u8;
        for code in 0..=255u8 {
            if (code ^ code.rotate_right(1)).count_ones() <= 2 {
                t[code as usize] = next;
                next += 1;
            } else {
                t[code as usize] = 58;
            }
        }
        debug_assert_eq!(next, 58);
        t
    });
    table[code as usize] as usize
}

/// Per-cell histogram of uniform LBP codes; border pixels are skipped and each cell sums to 1.
pub fn lbp_hist(patch: &Patch, cell_size: usize) -> Result<FeatureMap> {
    if patch.channels != 1 {
        return Err(Error::InvalidArgument(format!("LBP needs a gray patch, got {} channels", patch.channels)));
    }
    if patch.width < 3 || patch.height < 3 {
        return Err(Error::PatchTooSmall(format!("{}x{} patch for LBP", patch.width, patch.height)));
    }
    let (rows, cols) = grid_dims(patch.height, patch.width, cell_size)?;
    let plane = rows * cols;
    let mut map = FeatureMap::zeros(rows, cols, LBP_CHANNELS, cell_size);
    let mut counts = vec![0usize; plane];
    for r in 1..(rows * cell_size).min(patch.height - 1) {
        for c in 1..(cols * cell_size).min(patch.width - 1) {
            let cell = (r / cell_size) * cols + c / cell_size;
            map.data[uniform_index(lbp_code(patch, r, c)) * plane + cell] += 1.0;
            counts[cell] += 1;
        }
    }
    for (cell, &n) in counts.iter().enumerate() {
        if n == 0 {
            // cell made only of border pixels
            for ch in 0..LBP_CHANNELS {
                map.data[ch * plane + cell] = 1.0 / LBP_CHANNELS as f64;
            }
        } else {
            let inv = 1.0 / n as f64;
            for ch in 0..LBP_CHANNELS {
                map.data[ch * plane + cell] *= inv;
            }
        }
    }
    Ok(map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bbox::BBox;

    fn gray_patch(w: usize, h: usize, data: Vec<u8>) -> Patch {
        Patch {
            width: w,
            height: h,
            channels: 1,
            data,
            origin: (0.0, 0.0),
            scale: (1.0, 1.0),
            source: BBox::new(0.0, 0.0, w as f64, h as f64),
            padding: 0.0,
        }
    }

    #[test]
    fn uniform_table() {
        let uniform: Vec<u8> = (0..=255u8).filter(|&c| uniform_index(c) < 58).collect();
        assert_eq!(uniform.len(), 58);
        assert_eq!(uniform_index(0), 0);
        assert_eq!(uniform_index(255), 57);
        assert_eq!(uniform_index(0b0101_0101), 58);
    }

    #[test]
    fn constant_patch_maps_to_all_ones_code() {
        let p = gray_patch(12, 12, vec![77; 144]);
        // direct comparison oracle: every neighbor equals the center, so all 8 bits are set
        assert_eq!(lbp_code(&p, 5, 5), 255);
        let m = lbp_hist(&p, 4).unwrap();
        let bin = uniform_index(255);
        for r in 0..3 {
            for c in 0..3 {
                assert_eq!(m.get(r, c, bin), 1.0);
            }
        }
    }

    #[test]
    fn dimensions_and_normalization() {
        let data: Vec<u8> = (0..1600).map(|i| ((i * 2654435761u64 as usize) >> 7) as u8).collect();
        let m = lbp_hist(&gray_patch(40, 40, data), 4).unwrap();
        assert_eq!((m.rows, m.cols, m.channels), (10, 10, 59));
        for r in 0..10 {
            for c in 0..10 {
                assert!((m.cell_sum(r, c) - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn explicit_code() {
        #[rustfmt::skip]
        let p = gray_patch(3, 3, vec![
            6, 11, 14,
            9, 10, 10,
            19, 0, 22,
        ]);
        // neighbors clockwise from top-left: 6 11 14 10 22 0 19 9 -> bits 1,2,3,4,6
        assert_eq!(lbp_code(&p, 1, 1), 0b0101_1110);
    }

    #[test]
    fn too_small() {
        assert!(lbp_hist(&gray_patch(2, 2, vec![0; 4]), 1).is_err());
    }

    #[test]
    fn shift_by_one_cell_shifts_interior() {
        let px = |r: usize, c: usize| ((r * 31 + c * c * 7 + (r * c) % 13) % 256) as u8;
        let base = gray_patch(40, 40, (0..1600).map(|i| px(i / 40, i % 40)).collect());
        let shifted = gray_patch(40, 40, (0..1600).map(|i| px(i / 40, i % 40 + 4)).collect());
        let (a, b) = (lbp_hist(&base, 4).unwrap(), lbp_hist(&shifted, 4).unwrap());
        // cells touching the border differ because border pixels are skipped
        for ch in 0..LBP_CHANNELS {
            for r in 1..9 {
                for c in 1..8 {
                    assert!((a.get(r, c + 1, ch) - b.get(r, c, ch)).abs() < 1e-12);
                }
            }
        }
    }
}
