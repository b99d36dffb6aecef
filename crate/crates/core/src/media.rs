//! Frames, sequences, patch extraction and integral images.

use std::fs;
use std::path::{Path, PathBuf};

use crate::bbox::BBox;
use crate::error::{Error, Result};

/// An 8-bit image with 1 (gray) or 3 (RGB) interleaved channels, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub data: Vec<u8>,
}

impl Frame {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidFrame(format!("empty frame {width}x{height}")));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidFrame(format!("unsupported channel count {channels}")));
        }
        if data.len() != width * height * channels {
            return Err(Error::InvalidFrame(format!(
                "data length {} != {width}x{height}x{channels}",
                data.len()
            )));
        }
        Ok(Self { width, height, channels, data })
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: u8) -> Result<Self> {
        Self::new(width, height, channels, vec![value; width * height * channels])
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize, ch: usize) -> u8 {
        self.data[(row * self.width + col) * self.channels + ch]
    }

    /// Pixel read with edge replication for out-of-range coordinates.
    #[inline]
    pub fn get_clamped(&self, row: i64, col: i64, ch: usize) -> u8 {
        let r = row.clamp(0, self.height as i64 - 1) as usize;
        let c = col.clamp(0, self.width as i64 - 1) as usize;
        self.get(r, c, ch)
    }

    pub fn same_size(&self, other: &Frame) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub fn from_dynamic(img: image::DynamicImage) -> Result<Self> {
        use image::DynamicImage as D;
        match img {
            D::ImageLuma8(g) => {
                let (w, h) = g.dimensions();
                Self::new(w as usize, h as usize, 1, g.into_raw())
            }
            other => {
                let rgb = other.to_rgb8();
                let (w, h) = rgb.dimensions();
                Self::new(w as usize, h as usize, 3, rgb.into_raw())
            }
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let img = image::open(path).map_err(|e| Error::Decode { path: path.to_path_buf(), message: e.to_string() })?;
        Self::from_dynamic(img)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let color = if self.channels == 1 { image::ExtendedColorType::L8 } else { image::ExtendedColorType::Rgb8 };
        image::save_buffer(path, &self.data, self.width as u32, self.height as u32, color)
            .map_err(|e| Error::Decode { path: path.to_path_buf(), message: e.to_string() })
    }
}

/// BT.601 luminance, rounded to the nearest integer. Gray frames pass through unchanged.
pub fn to_grayscale(frame: &Frame) -> Frame {
    if frame.channels == 1 {
        return frame.clone();
    }
    let data = frame
        .data
        .chunks_exact(3)
        .map(|p| (0.299 * p[0] as f64 + 0.587 * p[1] as f64 + 0.114 * p[2] as f64).round().min(255.0) as u8)
        .collect();
    Frame { width: frame.width, height: frame.height, channels: 1, data }
}

/// Where the frames of a sequence come from.
#[derive(Debug, Clone)]
pub enum FrameStore {
    Files(Vec<PathBuf>),
    Memory(Vec<Frame>),
}

/// An ordered list of frames with per-frame ground truth.
#[derive(Debug, Clone)]
pub struct Sequence {
    pub name: String,
    pub frames: FrameStore,
    /// One box per annotated frame; index 0 is always present.
    pub groundtruth: Vec<BBox>,
    pub frame_rate: f64,
}

impl Sequence {
    pub fn in_memory(name: impl Into<String>, frames: Vec<Frame>, groundtruth: Vec<BBox>) -> Result<Self> {
        if frames.is_empty() {
            return Err(Error::InvalidFrame("sequence without frames".into()));
        }
        if groundtruth.is_empty() || groundtruth.len() > frames.len() {
            return Err(Error::InvalidArgument(format!(
                "ground truth length {} incompatible with {} frames",
                groundtruth.len(),
                frames.len()
            )));
        }
        Ok(Self { name: name.into(), frames: FrameStore::Memory(frames), groundtruth, frame_rate: 25.0 })
    }

    pub fn len(&self) -> usize {
        match &self.frames {
            FrameStore::Files(p) => p.len(),
            FrameStore::Memory(f) => f.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Decodes (or clones) frame `index`.
    pub fn frame(&self, index: usize) -> Result<Frame> {
        match &self.frames {
            FrameStore::Files(paths) => {
                let p = paths
                    .get(index)
                    .ok_or_else(|| Error::InvalidArgument(format!("frame index {index} out of range")))?;
                Frame::load(p)
            }
            FrameStore::Memory(frames) => frames
                .get(index)
                .cloned()
                .ok_or_else(|| Error::InvalidArgument(format!("frame index {index} out of range"))),
        }
    }

    /// Writes the sequence in the on-disk layout read by [`load_sequence`].
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        let img_dir = dir.join("img");
        fs::create_dir_all(&img_dir)?;
        for i in 0..self.len() {
            self.frame(i)?.save(&img_dir.join(format!("{:05}.png", i + 1)))?;
        }
        let mut gt = String::new();
        for b in &self.groundtruth {
            gt.push_str(&format!("{},{},{},{}\n", b.left(), b.top(), b.w, b.h));
        }
        fs::write(dir.join(GROUNDTRUTH_FILE), gt)?;
        Ok(())
    }
}

pub const GROUNDTRUTH_FILE: &str = "groundtruth_rect.txt";
const IMAGE_EXTENSIONS: [&str; 5] = ["png", "ppm", "pgm", "pnm", "pbm"];

fn parse_box_line(line: &str, location: &str) -> Result<BBox> {
    let fields: Vec<f64> = line
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::Parse { location: location.to_string(), message: e.to_string() })?;
    if fields.len() != 4 {
        return Err(Error::Parse {
            location: location.to_string(),
            message: format!("expected 4 fields, found {}", fields.len()),
        });
    }
    let b = BBox::from_corner(fields[0], fields[1], fields[2], fields[3]);
    b.validate().map_err(|_| Error::Parse { location: location.to_string(), message: "non-positive box size".into() })?;
    Ok(b)
}

/// Reads `img/` (lexicographic order) and `groundtruth_rect.txt` (top-left `x,y,w,h` per line).
pub fn load_sequence(dir: &Path) -> Result<Sequence> {
    if !dir.is_dir() {
        return Err(Error::MissingDirectory(dir.to_path_buf()));
    }
    let img_dir = dir.join("img");
    let mut paths: Vec<PathBuf> = match fs::read_dir(&img_dir) {
        Ok(rd) => rd
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                p.extension()
                    .and_then(|e| e.to_str())
                    .is_some_and(|e| IMAGE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
            })
            .collect(),
        Err(_) => Vec::new(),
    };
    if paths.is_empty() {
        return Err(Error::NoFrames(dir.to_path_buf()));
    }
    paths.sort();

    let gt_path = dir.join(GROUNDTRUTH_FILE);
    let text = fs::read_to_string(&gt_path).map_err(|_| Error::MissingGroundTruth(dir.to_path_buf()))?;
    let mut groundtruth = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        match parse_box_line(line, &format!("{}:{}", gt_path.display(), i + 1)) {
            Ok(b) => groundtruth.push(b),
            // frames after the first may be unannotated; stop at the first gap
            Err(e) if groundtruth.is_empty() => return Err(e),
            Err(_) => break,
        }
    }
    if groundtruth.is_empty() {
        return Err(Error::MissingGroundTruth(dir.to_path_buf()));
    }
    groundtruth.truncate(paths.len());

    let first = Frame::load(&paths[0])?;
    let b0 = groundtruth[0];
    if b0.left() < 0.0 || b0.top() < 0.0 || b0.right() > first.width as f64 || b0.bottom() > first.height as f64 {
        return Err(Error::InvalidBox(format!(
            "first ground-truth box {b0:?} outside {}x{} frame",
            first.width, first.height
        )));
    }

    let name = dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    Ok(Sequence { name, frames: FrameStore::Files(paths), groundtruth, frame_rate: 25.0 })
}

/// A pixel grid cut from a frame, with its mapping back to frame coordinates.
#[derive(Debug, Clone)]
pub struct Patch {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub data: Vec<u8>,
    /// Frame coordinate of the patch's top-left corner.
    pub origin: (f64, f64),
    /// Frame pixels per patch pixel along x and y.
    pub scale: (f64, f64),
    pub source: BBox,
    pub padding: f64,
}

impl Patch {
    #[inline]
    pub fn get(&self, row: usize, col: usize, ch: usize) -> u8 {
        self.data[(row * self.width + col) * self.channels + ch]
    }

    /// Maps a continuous patch coordinate to frame coordinates.
    pub fn to_frame(&self, px: f64, py: f64) -> (f64, f64) {
        (self.origin.0 + px * self.scale.0, self.origin.1 + py * self.scale.1)
    }

    /// Maps a frame coordinate into continuous patch coordinates.
    pub fn from_frame(&self, fx: f64, fy: f64) -> (f64, f64) {
        ((fx - self.origin.0) / self.scale.0, (fy - self.origin.1) / self.scale.1)
    }

    pub fn as_frame(&self) -> Frame {
        Frame { width: self.width, height: self.height, channels: self.channels, data: self.data.clone() }
    }

    pub fn to_gray(&self) -> Patch {
        let g = to_grayscale(&self.as_frame());
        Patch { channels: 1, data: g.data, ..self.clone() }
    }
}

/// Crops `(TW + 2P) x (TH + 2P)` pixels around the box center, replicating edge pixels
/// outside the frame. `TW`/`TH` are the box size rounded to whole pixels.
pub fn extract_patch(frame: &Frame, bbox: &BBox, padding: usize) -> Result<Patch> {
    if !(bbox.w >= 1.0 && bbox.h >= 1.0) || !bbox.is_valid() {
        return Err(Error::InvalidBox(format!("box too small for extraction: {bbox:?}")));
    }
    let tw = bbox.w.round() as usize;
    let th = bbox.h.round() as usize;
    let left = (bbox.x - tw as f64 / 2.0).round() as i64 - padding as i64;
    let top = (bbox.y - th as f64 / 2.0).round() as i64 - padding as i64;
    let (pw, ph) = (tw + 2 * padding, th + 2 * padding);
    let ch = frame.channels;
    let mut data = Vec::with_capacity(pw * ph * ch);
    for r in 0..ph as i64 {
        for c in 0..pw as i64 {
            for k in 0..ch {
                data.push(frame.get_clamped(top + r, left + c, k));
            }
        }
    }
    Ok(Patch {
        width: pw,
        height: ph,
        channels: ch,
        data,
        origin: (left as f64, top as f64),
        scale: (1.0, 1.0),
        source: *bbox,
        padding: padding as f64,
    })
}

/// Bilinearly resamples the `window_w x window_h` frame region centered at `(cx, cy)` onto an
/// `out_w x out_h` grid, with edge replication outside the frame.
pub fn sample_window(
    frame: &Frame,
    center: (f64, f64),
    window: (f64, f64),
    out: (usize, usize),
) -> Result<Patch> {
    let (window_w, window_h) = window;
    let (out_w, out_h) = out;
    if !(window_w > 0.0 && window_h > 0.0) || out_w == 0 || out_h == 0 {
        return Err(Error::InvalidBox(format!("degenerate sampling window {window_w}x{window_h}")));
    }
    let sx = window_w / out_w as f64;
    let sy = window_h / out_h as f64;
    let ox = center.0 - window_w / 2.0;
    let oy = center.1 - window_h / 2.0;
    let ch = frame.channels;
    let mut data = vec![0u8; out_w * out_h * ch];

    let xs: Vec<(i64, f64)> = (0..out_w)
        .map(|j| {
            let u = ox + (j as f64 + 0.5) * sx - 0.5;
            (u.floor() as i64, u - u.floor())
        })
        .collect();
    for i in 0..out_h {
        let v = oy + (i as f64 + 0.5) * sy - 0.5;
        let r0 = v.floor() as i64;
        let fy = v - v.floor();
        for (j, &(c0, fx)) in xs.iter().enumerate() {
            for k in 0..ch {
                let p00 = frame.get_clamped(r0, c0, k) as f64;
                let p01 = frame.get_clamped(r0, c0 + 1, k) as f64;
                let p10 = frame.get_clamped(r0 + 1, c0, k) as f64;
                let p11 = frame.get_clamped(r0 + 1, c0 + 1, k) as f64;
                let top = p00 + (p01 - p00) * fx;
                let bot = p10 + (p11 - p10) * fx;
                data[(i * out_w + j) * ch + k] = (top + (bot - top) * fy).round().clamp(0.0, 255.0) as u8;
            }
        }
    }
    Ok(Patch {
        width: out_w,
        height: out_h,
        channels: ch,
        data,
        origin: (ox, oy),
        scale: (sx, sy),
        source: BBox::new(center.0, center.1, window_w, window_h),
        padding: 0.0,
    })
}

/// Summed-area table of a single-channel image: entry `(i, j)` is the sum of all pixels
/// strictly above and left of `(i, j)`; row 0 and column 0 are zero.
#[derive(Debug, Clone)]
pub struct IntegralImage {
    pub width: usize,
    pub height: usize,
    table: Vec<f64>,
}

impl IntegralImage {
    /// Builds the table from raw values (row-major, `width * height`).
    pub fn from_values(width: usize, height: usize, values: &[f64]) -> Self {
        assert_eq!(values.len(), width * height);
        let stride = width + 1;
        let mut table = vec![0.0; stride * (height + 1)];
        for r in 0..height {
            let mut row_sum = 0.0;
            for c in 0..width {
                row_sum += values[r * width + c];
                table[(r + 1) * stride + c + 1] = table[r * stride + c + 1] + row_sum;
            }
        }
        Self { width, height, table }
    }

    #[inline]
    pub fn at(&self, row: usize, col: usize) -> f64 {
        self.table[row * (self.width + 1) + col]
    }

    /// Sum over rows `[r0, r1)` and columns `[c0, c1)`, which must lie inside the image.
    #[inline]
    pub fn rect_sum(&self, r0: usize, c0: usize, r1: usize, c1: usize) -> f64 {
        self.at(r1, c1) - self.at(r0, c1) - self.at(r1, c0) + self.at(r0, c0)
    }

    /// Rectangle sum over an edge-replicated extension of the image. Rows and columns
    /// outside the image count as copies of the nearest border row/column.
    #[inline]
    pub fn rect_sum_replicated(&self, r0: i64, c0: i64, r1: i64, c1: i64) -> f64 {
        if r1 <= r0 || c1 <= c0 {
            return 0.0;
        }
        if r0 >= 0 && c0 >= 0 && r1 <= self.height as i64 && c1 <= self.width as i64 {
            return self.rect_sum(r0 as usize, c0 as usize, r1 as usize, c1 as usize);
        }
        let rows = segments(r0, r1, self.height as i64);
        let cols = segments(c0, c1, self.width as i64);
        let mut total = 0.0;
        for &(ra, rb, rm) in rows.iter().flatten() {
            for &(ca, cb, cm) in cols.iter().flatten() {
                total += rm * cm * self.rect_sum(ra, ca, rb, cb);
            }
        }
        total
    }
}

/// Splits `[a, b)` into (image range, multiplicity) pieces under edge replication.
#[inline]
fn segments(a: i64, b: i64, n: i64) -> [Option<(usize, usize, f64)>; 3] {
    let before = (b.min(0) - a).max(0);
    let after = (b - a.max(n)).max(0);
    let lo = a.clamp(0, n);
    let hi = b.clamp(0, n);
    [
        (before > 0).then_some((0, 1, before as f64)),
        (hi > lo).then_some((lo as usize, hi as usize, 1.0)),
        (after > 0).then_some(((n - 1) as usize, n as usize, after as f64)),
    ]
}

/// Integral image of a single-channel frame (raw 0..255 values).
pub fn integral_image(gray: &Frame) -> Result<IntegralImage> {
    if gray.channels != 1 {
        return Err(Error::InvalidFrame(format!("integral image needs 1 channel, got {}", gray.channels)));
    }
    let values: Vec<f64> = gray.data.iter().map(|&v| v as f64).collect();
    Ok(IntegralImage::from_values(gray.width, gray.height, &values))
}
