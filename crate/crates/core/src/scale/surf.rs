//! Fast-Hessian keypoint detection and Haar-wavelet description on integral images.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::media::{Frame, IntegralImage};

pub const DESCRIPTOR_LEN: usize = 64;
/// Smallest box-filter footprint used by the pyramid.
pub const MIN_IMAGE_SIDE: usize = 15;

const OCTAVES: usize = 3;
const INTERVALS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Keypoint {
    pub x: f64,
    pub y: f64,
    pub scale: f64,
    pub response: f64,
    pub orientation: f64,
    /// Sign of the Hessian trace; bright blobs on dark are `false`.
    pub laplacian_positive: bool,
    /// Set when the orientation window left the image and orientation fell back to 0.
    pub border_clipped: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Descriptor(pub [f64; DESCRIPTOR_LEN]);

impl Descriptor {
    pub fn distance(&self, other: &Descriptor) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn cosine(&self, other: &Descriptor) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum::<f64>() / (self.norm() * other.norm())
    }
}

/// Integral image over intensities scaled to `[0, 1]`, as the detector threshold expects.
pub fn surf_integral(gray: &Frame) -> Result<IntegralImage> {
    if gray.channels != 1 {
        return Err(Error::InvalidFrame(format!("keypoints need a gray image, got {} channels", gray.channels)));
    }
    let values: Vec<f64> = gray.data.iter().map(|&v| v as f64 / 255.0).collect();
    Ok(IntegralImage::from_values(gray.width, gray.height, &values))
}

#[inline]
fn box_sum(img: &IntegralImage, row: i64, col: i64, rows: i64, cols: i64) -> f64 {
    img.rect_sum_replicated(row, col, row + rows, col + cols)
}

/// Horizontal Haar response of side `s` centred at `(row, col)`: right half minus left half.
#[inline]
fn haar_x(img: &IntegralImage, row: i64, col: i64, s: i64) -> f64 {
    box_sum(img, row - s / 2, col, s, s / 2) - box_sum(img, row - s / 2, col - s / 2, s, s / 2)
}

#[inline]
fn haar_y(img: &IntegralImage, row: i64, col: i64, s: i64) -> f64 {
    box_sum(img, row, col - s / 2, s / 2, s) - box_sum(img, row - s / 2, col - s / 2, s / 2, s)
}

/// Even Haar side closest to `size`, at least 2.
fn even_size(size: f64) -> i64 {
    (2.0 * (size / 2.0).round()).max(2.0) as i64
}

/// Haar responses whose window centre lies nearest to the continuous point `(x, y)`.
#[inline]
fn haar_at(img: &IntegralImage, x: f64, y: f64, s: i64) -> (f64, f64) {
    let (row, col) = ((y + 0.5).round() as i64, (x + 0.5).round() as i64);
    (haar_x(img, row, col, s), haar_y(img, row, col, s))
}

fn filter_size(octave: usize, interval: usize) -> usize {
    3 * ((1 << (octave + 1)) * (interval + 1) + 1)
}

/// Determinant-of-Hessian responses of one pyramid layer sampled every `step` pixels.
struct Layer {
    rows: usize,
    cols: usize,
    step: usize,
    filter: usize,
    response: Vec<f64>,
    laplacian: Vec<bool>,
}

impl Layer {
    /// Only cells at least `margin` away from every edge are evaluated; the rest stay 0
    /// and are never read by the detector.
    fn build(img: &IntegralImage, filter: usize, step: usize, margin: usize) -> Self {
        let rows = img.height.div_ceil(step);
        let cols = img.width.div_ceil(step);
        let w = filter as i64;
        let b = (w - 1) / 2;
        let l = w / 3;
        let inv_area = 1.0 / (w * w) as f64;
        let mut response = vec![0.0; rows * cols];
        let mut laplacian = vec![false; rows * cols];
        for ar in margin..rows.saturating_sub(margin) {
            let r = (ar * step) as i64;
            for ac in margin..cols.saturating_sub(margin) {
                let c = (ac * step) as i64;
                let dxx = box_sum(img, r - l + 1, c - b, 2 * l - 1, w) - 3.0 * box_sum(img, r - l + 1, c - l / 2, 2 * l - 1, l);
                let dyy = box_sum(img, r - b, c - l + 1, w, 2 * l - 1) - 3.0 * box_sum(img, r - l / 2, c - l + 1, l, 2 * l - 1);
                let dxy = box_sum(img, r - l, c + 1, l, l) + box_sum(img, r + 1, c - l, l, l)
                    - box_sum(img, r - l, c - l, l, l)
                    - box_sum(img, r + 1, c + 1, l, l);
                let (dxx, dyy, dxy) = (dxx * inv_area, dyy * inv_area, dxy * inv_area);
                response[ar * cols + ac] = dxx * dyy - 0.81 * dxy * dxy;
                laplacian[ar * cols + ac] = dxx + dyy >= 0.0;
            }
        }
        Self { rows, cols, step, filter, response, laplacian }
    }

    #[inline]
    fn at(&self, r: usize, c: usize) -> f64 {
        self.response[r * self.cols + c]
    }
}

/// Solves a 3x3 system by Cramer's rule; `None` when singular.
fn solve3(m: [[f64; 3]; 3], v: [f64; 3]) -> Option<[f64; 3]> {
    let det = |a: [[f64; 3]; 3]| {
        a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
            + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
    };
    let d = det(m);
    if d.abs() < 1e-300 || !d.is_finite() {
        return None;
    }
    let mut out = [0.0; 3];
    for (k, slot) in out.iter_mut().enumerate() {
        let mut a = m;
        for i in 0..3 {
            a[i][k] = v[i];
        }
        *slot = det(a) / d;
    }
    Some(out)
}

/// Local maxima of the approximated Hessian determinant over a 3-octave, 4-interval
/// box-filter pyramid, refined to sub-pixel/sub-scale positions. Returns the strongest
/// `max_points` with orientation left at 0.
pub fn detect_keypoints(img: &IntegralImage, threshold: f64, max_points: usize) -> Result<Vec<Keypoint>> {
    if img.width < MIN_IMAGE_SIDE || img.height < MIN_IMAGE_SIDE {
        return Err(Error::PatchTooSmall(format!(
            "keypoint detection needs at least {MIN_IMAGE_SIDE}x{MIN_IMAGE_SIDE}, got {}x{}",
            img.width, img.height
        )));
    }
    let mut out = Vec::new();
    for octave in 0..OCTAVES {
        let step = 1 << octave;
        let (rows, cols) = (img.height.div_ceil(step), img.width.div_ceil(step));
        let border = |mid: usize| ((filter_size(octave, mid + 1) + 1) / (2 * step)).max(1);
        let usable = |mid: usize| rows > 2 * border(mid) + 1 && cols > 2 * border(mid) + 1;
        if !(1..INTERVALS - 1).any(usable) {
            continue;
        }
        // each layer is read one cell beyond the borders of the triples it belongs to
        let layers: Vec<Layer> = (0..INTERVALS)
            .map(|i| {
                let margin = (i.saturating_sub(1)..=(i + 1).min(INTERVALS - 2))
                    .filter(|&m| m >= 1 && usable(m))
                    .map(|m| border(m) - 1)
                    .min()
                    .unwrap_or(usize::MAX / 2);
                Layer::build(img, filter_size(octave, i), step, margin)
            })
            .collect();
        for mid in 1..INTERVALS - 1 {
            let (b, m, t) = (&layers[mid - 1], &layers[mid], &layers[mid + 1]);
            let border = border(mid);
            if !usable(mid) {
                continue;
            }
            for r in border.max(1)..m.rows - border.max(1) {
                for c in border.max(1)..m.cols - border.max(1) {
                    let v = m.at(r, c);
                    if v < threshold || !is_local_max(v, r, c, [b, m, t]) {
                        continue;
                    }
                    if let Some(kp) = interpolate(r, c, b, m, t) {
                        out.push(kp);
                    }
                }
            }
        }
    }
    out.sort_by(|a, b| b.response.total_cmp(&a.response).then(a.y.total_cmp(&b.y)).then(a.x.total_cmp(&b.x)));
    out.truncate(max_points);
    Ok(out)
}

fn is_local_max(v: f64, r: usize, c: usize, layers: [&Layer; 3]) -> bool {
    for (li, layer) in layers.iter().enumerate() {
        for rr in r - 1..=r + 1 {
            for cc in c - 1..=c + 1 {
                if li == 1 && rr == r && cc == c {
                    continue;
                }
                if layer.at(rr, cc) >= v {
                    return false;
                }
            }
        }
    }
    true
}

fn interpolate(r: usize, c: usize, b: &Layer, m: &Layer, t: &Layer) -> Option<Keypoint> {
    let v = m.at(r, c);
    let dx = (m.at(r, c + 1) - m.at(r, c - 1)) / 2.0;
    let dy = (m.at(r + 1, c) - m.at(r - 1, c)) / 2.0;
    let ds = (t.at(r, c) - b.at(r, c)) / 2.0;
    let dxx = m.at(r, c + 1) + m.at(r, c - 1) - 2.0 * v;
    let dyy = m.at(r + 1, c) + m.at(r - 1, c) - 2.0 * v;
    let dss = t.at(r, c) + b.at(r, c) - 2.0 * v;
    let dxy = (m.at(r + 1, c + 1) - m.at(r + 1, c - 1) - m.at(r - 1, c + 1) + m.at(r - 1, c - 1)) / 4.0;
    let dxs = (t.at(r, c + 1) - t.at(r, c - 1) - b.at(r, c + 1) + b.at(r, c - 1)) / 4.0;
    let dys = (t.at(r + 1, c) - t.at(r - 1, c) - b.at(r + 1, c) + b.at(r - 1, c)) / 4.0;
    let h = [[dxx, dxy, dxs], [dxy, dyy, dys], [dxs, dys, dss]];
    let o = solve3(h, [-dx, -dy, -ds])?;
    if o.iter().any(|v| v.abs() >= 0.5) {
        return None;
    }
    let step = m.step as f64;
    let filter_step = (m.filter - b.filter) as f64;
    Some(Keypoint {
        x: (c as f64 + o[0]) * step,
        y: (r as f64 + o[1]) * step,
        scale: 0.1333 * (m.filter as f64 + o[2] * filter_step),
        response: v + 0.5 * (dx * o[0] + dy * o[1] + ds * o[2]),
        orientation: 0.0,
        laplacian_positive: m.laplacian[r * m.cols + c],
        border_clipped: false,
    })
}

fn gaussian(x: f64, y: f64, sigma: f64) -> f64 {
    (-(x * x + y * y) / (2.0 * sigma * sigma)).exp() / (TAU * sigma * sigma)
}

/// Dominant direction of Gaussian-weighted Haar responses, found with a sliding
/// `pi / 3` sector over a disc of radius `6 * scale`.
pub fn assign_orientation(img: &IntegralImage, kp: &Keypoint) -> Keypoint {
    let s = kp.scale;
    let haar = even_size(4.0 * s);
    let reach = 6.0 * s + haar as f64;
    let mut out = *kp;
    if kp.y - reach < 0.0 || kp.x - reach < 0.0 || kp.y + reach >= img.height as f64 || kp.x + reach >= img.width as f64 {
        out.orientation = 0.0;
        out.border_clipped = true;
        return out;
    }
    let mut samples = Vec::with_capacity(113);
    for i in -6i64..=6 {
        for j in -6i64..=6 {
            if i * i + j * j >= 36 {
                continue;
            }
            let g = gaussian(i as f64, j as f64, 2.5);
            let (rx, ry) = haar_at(img, kp.x + i as f64 * s, kp.y + j as f64 * s, haar);
            let (rx, ry) = (g * rx, g * ry);
            samples.push((ry.atan2(rx).rem_euclid(TAU), rx, ry));
        }
    }
    let mut best = (0.0, 0.0);
    let mut a1 = 0.0;
    while a1 < TAU {
        let a2 = (a1 + PI / 3.0).rem_euclid(TAU);
        let (mut sx, mut sy) = (0.0, 0.0);
        for &(ang, rx, ry) in &samples {
            let inside = if a1 < a2 { ang > a1 && ang < a2 } else { ang > a1 || ang < a2 };
            if inside {
                sx += rx;
                sy += ry;
            }
        }
        if sx * sx + sy * sy > best.0 {
            best.0 = sx * sx + sy * sy;
            best.1 = sy.atan2(sx).rem_euclid(TAU);
        }
        a1 += 0.15;
    }
    out.orientation = if best.1 >= TAU { 0.0 } else { best.1 };
    out.border_clipped = false;
    out
}

/// 4x4 grid of `(sum dx, sum dy, sum |dx|, sum |dy|)` over a `20 * scale` window rotated to
/// the keypoint orientation, Gaussian weighted and L2-normalized.
pub fn describe_keypoint(img: &IntegralImage, kp: &Keypoint) -> Descriptor {
    let s = kp.scale;
    let (co, si) = (kp.orientation.cos(), kp.orientation.sin());
    let haar = even_size(2.0 * s);
    let mut desc = [0.0; DESCRIPTOR_LEN];
    let mut k = 0;
    for sub_v in 0..4 {
        for sub_u in 0..4 {
            let mut acc = [0.0; 4];
            for sv in 0..5 {
                for su in 0..5 {
                    // sample centre in the keypoint frame, units of scale
                    let u = -10.0 + 5.0 * sub_u as f64 + su as f64 + 0.5;
                    let v = -10.0 + 5.0 * sub_v as f64 + sv as f64 + 0.5;
                    let px = kp.x + s * (u * co - v * si);
                    let py = kp.y + s * (u * si + v * co);
                    let g = gaussian(u, v, 3.3);
                    let (dx, dy) = haar_at(img, px, py, haar);
                    let ru = g * (dx * co + dy * si);
                    let rv = g * (-dx * si + dy * co);
                    acc[0] += ru;
                    acc[1] += rv;
                    acc[2] += ru.abs();
                    acc[3] += rv.abs();
                }
            }
            desc[k..k + 4].copy_from_slice(&acc);
            k += 4;
        }
    }
    let norm = desc.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        desc.iter_mut().for_each(|v| *v /= norm);
    }
    Descriptor(desc)
}

/// Detects, orients and describes keypoints. With `upright` the orientation stays 0.
pub fn extract_features(
    img: &IntegralImage,
    threshold: f64,
    max_points: usize,
    upright: bool,
) -> Result<(Vec<Keypoint>, Vec<Descriptor>)> {
    let mut kps = detect_keypoints(img, threshold, max_points)?;
    if !upright {
        kps = kps.iter().map(|k| assign_orientation(img, k)).collect();
    }
    let descs = kps.iter().map(|k| describe_keypoint(img, k)).collect();
    Ok((kps, descs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn render(w: usize, h: usize, f: impl Fn(f64, f64) -> f64) -> Frame {
        let mut data = Vec::with_capacity(w * h);
        for y in 0..h {
            for x in 0..w {
                data.push(f(x as f64, y as f64).round().clamp(0.0, 255.0) as u8);
            }
        }
        Frame::new(w, h, 1, data).unwrap()
    }

    fn blob(cx: f64, cy: f64, sigma: f64) -> impl Fn(f64, f64) -> f64 {
        move |x, y| 40.0 + 200.0 * (-((x - cx).powi(2) + (y - cy).powi(2)) / (2.0 * sigma * sigma)).exp()
    }

    /// Smooth texture made of random Gaussian bumps, optionally rotated about `(cx, cy)`.
    fn texture(seed: u64, cx: f64, cy: f64, angle: f64) -> impl Fn(f64, f64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bumps: Vec<(f64, f64, f64, f64)> = (0..40)
            .map(|_| {
                (rng.random_range(-40.0..40.0), rng.random_range(-40.0..40.0), rng.random_range(3.0..7.0), rng.random_range(-90.0..90.0))
            })
            .collect();
        move |x, y| {
            // sample the unrotated texture at the inversely rotated point
            let (dx, dy) = (x - cx, y - cy);
            let (c, s) = (angle.cos(), angle.sin());
            let (u, v) = (c * dx + s * dy, -s * dx + c * dy);
            128.0 + bumps.iter().map(|&(bx, by, sg, a)| a * (-((u - bx).powi(2) + (v - by).powi(2)) / (2.0 * sg * sg)).exp()).sum::<f64>()
        }
    }

    #[test]
    fn constant_image_has_no_keypoints() {
        let img = surf_integral(&Frame::filled(64, 64, 1, 120).unwrap()).unwrap();
        assert!(detect_keypoints(&img, 1e-4, 100).unwrap().is_empty());
        let tiny = surf_integral(&Frame::filled(14, 30, 1, 0).unwrap()).unwrap();
        assert!(detect_keypoints(&tiny, 1e-4, 100).is_err());
    }

    #[test]
    fn blob_centres_are_localized() {
        for sigma in [3.0, 4.0, 5.5, 8.0] {
            let (cx, cy) = (64.3, 61.7);
            let img = surf_integral(&render(128, 128, blob(cx, cy, sigma))).unwrap();
            let kps = detect_keypoints(&img, 1e-4, 50).unwrap();
            assert!(!kps.is_empty(), "sigma {sigma}");
            let k = kps[0];
            let err = ((k.x - cx).powi(2) + (k.y - cy).powi(2)).sqrt();
            assert!(err < 2.0, "sigma {sigma}: error {err}");
            assert!(kps.len() <= 50);
            // a dominant single response: nothing else comes close
            assert!(kps.iter().skip(1).all(|o| o.response < 0.5 * k.response || ((o.x - cx).hypot(o.y - cy) < 2.0)));
        }
    }

    #[test]
    fn max_points_truncates() {
        let img = surf_integral(&render(96, 96, texture(3, 48.0, 48.0, 0.0))).unwrap();
        let all = detect_keypoints(&img, 1e-5, 1000).unwrap();
        assert!(all.len() > 5);
        let few = detect_keypoints(&img, 1e-5, 5).unwrap();
        assert_eq!(few.len(), 5);
        assert_eq!(few[..], all[..5]);
    }

    #[test]
    fn orientation_follows_quarter_turn() {
        let base = render(120, 120, texture(5, 60.0, 60.0, 0.0));
        // rot(x, y) = (H - 1 - y, x)
        let mut rot = base.clone();
        for y in 0..120 {
            for x in 0..120 {
                rot.data[x * 120 + (119 - y)] = base.data[y * 120 + x];
            }
        }
        let (ia, ib) = (surf_integral(&base).unwrap(), surf_integral(&rot).unwrap());
        let (ka, da) = extract_features(&ia, 1e-4, 40, false).unwrap();
        let (kb, db) = extract_features(&ib, 1e-4, 40, false).unwrap();
        let pairs = crate::scale::match_keypoints(&da, &db, 0.7);
        let mut checked = 0;
        for m in pairs {
            let (a, b) = (&ka[m.prev], &kb[m.next]);
            if a.border_clipped || b.border_clipped || (b.x - (119.0 - a.y)).hypot(b.y - a.x) > 1.5 {
                continue;
            }
            assert!((0.0..TAU).contains(&a.orientation));
            let diff = (b.orientation - a.orientation - PI / 2.0 + PI).rem_euclid(TAU) - PI;
            assert!(diff.abs() < 10f64.to_radians(), "orientation diff {}", diff.to_degrees());
            checked += 1;
        }
        assert!(checked >= 5, "only {checked} keypoints compared");
    }

    #[test]
    fn descriptor_is_unit_and_deterministic() {
        let img = surf_integral(&render(96, 96, texture(7, 48.0, 48.0, 0.0))).unwrap();
        let (kps, descs) = extract_features(&img, 1e-4, 20, false).unwrap();
        assert!(!kps.is_empty());
        for (k, d) in kps.iter().zip(&descs) {
            assert!((d.norm() - 1.0).abs() < 1e-9);
            assert!(d.0.iter().all(|v| v.is_finite()));
            assert_eq!(describe_keypoint(&img, k), *d);
        }
    }

    #[test]
    fn descriptor_survives_rotation() {
        let angle = 30f64.to_radians();
        let a = render(160, 160, texture(11, 80.0, 80.0, 0.0));
        let b = render(160, 160, texture(11, 80.0, 80.0, angle));
        let (ia, ib) = (surf_integral(&a).unwrap(), surf_integral(&b).unwrap());
        let mut cosines = Vec::new();
        for k in detect_keypoints(&ia, 1e-4, 10).unwrap() {
            let (dx, dy) = (k.x - 80.0, k.y - 80.0);
            if dx.hypot(dy) > 25.0 {
                continue;
            }
            let moved = Keypoint { x: 80.0 + angle.cos() * dx - angle.sin() * dy, y: 80.0 + angle.sin() * dx + angle.cos() * dy, ..k };
            let (oa, ob) = (assign_orientation(&ia, &k), assign_orientation(&ib, &moved));
            cosines.push(describe_keypoint(&ia, &oa).cosine(&describe_keypoint(&ib, &ob)));
        }
        assert!(!cosines.is_empty());
        let good = cosines.iter().filter(|c| **c > 0.8).count();
        assert!(good * 10 >= cosines.len() * 8, "cosines {cosines:?}");
    }

    #[test]
    fn symmetric_blob_self_matches_under_any_orientation() {
        let img = surf_integral(&render(96, 96, blob(48.0, 48.0, 5.0))).unwrap();
        let k = detect_keypoints(&img, 1e-4, 1).unwrap()[0];
        let oriented = assign_orientation(&img, &k);
        assert!((0.0..TAU).contains(&oriented.orientation));
        for angle in [0.0, 1.0, 2.5, 4.0] {
            let d1 = describe_keypoint(&img, &Keypoint { orientation: angle, ..k });
            let d2 = describe_keypoint(&img, &Keypoint { orientation: angle, ..k });
            assert_eq!(d1, d2);
            assert!(d1.cosine(&describe_keypoint(&img, &oriented)) > 0.9);
        }
    }
}
