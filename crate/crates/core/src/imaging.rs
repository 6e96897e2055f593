//! Frame and clip data model, frame-sequence I/O, and the raster
//! primitives shared by the simulators (grayscale, bilinear resize,
//! center crop).
//!
//! Frame directories hold `NNNNNN.png` 8-bit RGB files indexed from zero.
//! Disparity directories use the same naming with 16-bit grayscale PNGs,
//! where `value / 65535` is the disparity.

use std::fs;
use std::path::{Path, PathBuf};

use image::{ImageBuffer, Luma, Rgb};

use crate::error::{Error, Result};

pub const FRAME_EXT: &str = "png";

/// Rec.601 luma weights.
pub const LUMA_WEIGHTS: [f64; 3] = [0.299, 0.587, 0.114];

/// Normalized RGB raster, row-major, three channels per pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Frame {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        check_dims(width, height)?;
        if data.len() != width * height * 3 {
            return Err(Error::Dimensions(format!(
                "{}x{} frame needs {} values, got {}",
                width,
                height,
                width * height * 3,
                data.len()
            )));
        }
        if let Some(v) = data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidValue(format!(
                "pixel value {v} outside [0, 1]"
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// Frame filled with one color.
    pub fn filled(width: usize, height: usize, rgb: [f64; 3]) -> Result<Self> {
        let data = (0..width * height).flat_map(|_| rgb).collect();
        Self::new(width, height, data)
    }

    /// Builds a frame from a per-pixel function; values are clamped to [0, 1].
    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> [f64; 3],
    ) -> Result<Self> {
        check_dims(width, height)?;
        let mut data = Vec::with_capacity(width * height * 3);
        for y in 0..height {
            for x in 0..width {
                data.extend(f(x, y).map(|c| c.clamp(0.0, 1.0)));
            }
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// Wraps data produced by internal arithmetic, clamping into [0, 1].
    pub(crate) fn from_raw_clamped(width: usize, height: usize, mut data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), width * height * 3);
        for v in &mut data {
            *v = v.clamp(0.0, 1.0);
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn pixel(&self, x: usize, y: usize) -> [f64; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    /// Applies a per-channel map and clamps the result into [0, 1].
    pub fn map_channels(&self, f: impl Fn(usize, f64) -> f64) -> Frame {
        let data = self
            .data
            .iter()
            .enumerate()
            .map(|(i, &v)| f(i % 3, v))
            .collect();
        Frame::from_raw_clamped(self.width, self.height, data)
    }

    /// Rounds every value through the 8-bit representation used on disk.
    pub fn quantized(&self) -> Frame {
        let data = self
            .data
            .iter()
            .map(|&v| quantize_u8(v) as f64 / 255.0)
            .collect();
        Frame {
            width: self.width,
            height: self.height,
            data,
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        self.data.iter().map(|&v| quantize_u8(v)).collect()
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }
}

/// Single-channel raster in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct GrayFrame {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

impl GrayFrame {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::Dimensions(format!(
                "{}x{} plane needs {} values, got {}",
                width,
                height,
                width * height,
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    /// Mean absolute difference against another plane of the same size.
    pub fn mean_abs_diff(&self, other: &GrayFrame) -> Result<f64> {
        if (self.width, self.height) != (other.width, other.height) {
            return Err(Error::Dimensions(format!(
                "cannot compare {}x{} with {}x{}",
                self.width, self.height, other.width, other.height
            )));
        }
        let sum: f64 = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .sum();
        Ok(sum / self.data.len() as f64)
    }
}

/// Per-pixel disparity in [0, 1]; larger is nearer.
#[derive(Debug, Clone, PartialEq)]
pub struct DisparityMap {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl DisparityMap {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        check_dims(width, height)?;
        if values.len() != width * height {
            return Err(Error::Dimensions(format!(
                "{}x{} disparity map needs {} values, got {}",
                width,
                height,
                width * height,
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidValue(format!(
                "disparity {v} outside [0, 1]"
            )));
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }

    pub fn uniform(width: usize, height: usize, d: f64) -> Result<Self> {
        Self::new(width, height, vec![d; width * height])
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                values.push(f(x, y).clamp(0.0, 1.0));
            }
        }
        Self::new(width, height, values)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    pub fn center_crop(&self, crop_w: usize, crop_h: usize) -> Result<DisparityMap> {
        let (x0, y0) = crop_origin(self.width, self.height, crop_w, crop_h)?;
        let mut values = Vec::with_capacity(crop_w * crop_h);
        for y in y0..y0 + crop_h {
            values.extend_from_slice(&self.values[y * self.width + x0..y * self.width + x0 + crop_w]);
        }
        Ok(DisparityMap {
            width: crop_w,
            height: crop_h,
            values,
        })
    }

    /// Nearest-neighbour resize with half-pixel-center alignment.
    pub fn resize_nearest(&self, new_w: usize, new_h: usize) -> Result<DisparityMap> {
        check_dims(new_w, new_h)?;
        let sx = self.width as f64 / new_w as f64;
        let sy = self.height as f64 / new_h as f64;
        let mut values = Vec::with_capacity(new_w * new_h);
        for y in 0..new_h {
            let src_y = (((y as f64 + 0.5) * sy).floor() as usize).min(self.height - 1);
            for x in 0..new_w {
                let src_x = (((x as f64 + 0.5) * sx).floor() as usize).min(self.width - 1);
                values.push(self.get(src_x, src_y));
            }
        }
        Ok(DisparityMap {
            width: new_w,
            height: new_h,
            values,
        })
    }
}

/// Rescales a clip's disparity maps jointly so the clip spans [0, 1].
/// A clip with constant disparity maps to all zeros.
pub fn normalize_disparities(maps: &mut [DisparityMap]) {
    let (lo, hi) = maps
        .iter()
        .flat_map(|m| m.values.iter())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let span = hi - lo;
    for m in maps {
        for v in &mut m.values {
            *v = if span > 0.0 {
                ((*v - lo) / span).clamp(0.0, 1.0)
            } else {
                0.0
            };
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VideoClip {
    frames: Vec<Frame>,
    pub fps: f64,
}

impl VideoClip {
    pub fn new(frames: Vec<Frame>, fps: f64) -> Result<Self> {
        let Some(first) = frames.first() else {
            return Err(Error::Dimensions("a clip needs at least one frame".into()));
        };
        let dims = first.dims();
        if let Some((index, f)) = frames.iter().enumerate().find(|(_, f)| f.dims() != dims) {
            return Err(Error::FrameMismatch {
                index,
                expected: dims,
                found: f.dims(),
            });
        }
        Ok(Self { frames, fps })
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn into_frames(self) -> Vec<Frame> {
        self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.frames[0].dims()
    }

    /// Frames `start..end` as a new clip.
    pub fn slice(&self, start: usize, end: usize) -> Result<VideoClip> {
        if start >= end || end > self.frames.len() {
            return Err(Error::Dimensions(format!(
                "invalid frame range {start}..{end} for clip of length {}",
                self.frames.len()
            )));
        }
        VideoClip::new(self.frames[start..end].to_vec(), self.fps)
    }
}

fn check_dims(width: usize, height: usize) -> Result<()> {
    if width < 2 || height < 2 {
        return Err(Error::Dimensions(format!(
            "{width}x{height} is below the 2x2 minimum"
        )));
    }
    Ok(())
}

/// round-half-up of `c * 255`, clamped to a byte.
#[inline]
pub fn quantize_u8(c: f64) -> u8 {
    (c * 255.0 + 0.5).floor().clamp(0.0, 255.0) as u8
}

pub fn frame_file_name(index: usize) -> String {
    format!("{index:06}.{FRAME_EXT}")
}

/// Lists `NNNNNN.png` files in `dir`, checking indices run 0..n without gaps.
fn indexed_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut indexed = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let is_frame = path.extension().and_then(|e| e.to_str()) == Some(FRAME_EXT);
        let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("");
        if is_frame && stem.len() == 6 && stem.bytes().all(|b| b.is_ascii_digit()) {
            indexed.push((stem.parse::<usize>().expect("six ascii digits"), path));
        }
    }
    indexed.sort_by_key(|(i, _)| *i);
    for (expected, (index, _)) in indexed.iter().enumerate() {
        if *index != expected {
            return Err(Error::MissingFrame {
                dir: dir.to_path_buf(),
                expected,
            });
        }
    }
    if indexed.is_empty() {
        return Err(Error::MissingFrame {
            dir: dir.to_path_buf(),
            expected: 0,
        });
    }
    Ok(indexed.into_iter().map(|(_, p)| p).collect())
}

fn image_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Image {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

pub fn load_frame(path: &Path) -> Result<Frame> {
    let img = image::open(path).map_err(|e| image_err(path, e))?.to_rgb8();
    let (w, h) = (img.width() as usize, img.height() as usize);
    let data = img.into_raw().into_iter().map(|b| b as f64 / 255.0).collect();
    Frame::new(w, h, data)
}

pub fn save_frame(frame: &Frame, path: &Path) -> Result<()> {
    let buf: ImageBuffer<Rgb<u8>, _> =
        ImageBuffer::from_raw(frame.width as u32, frame.height as u32, frame.to_bytes())
            .expect("buffer length matches dimensions");
    buf.save(path).map_err(|e| image_err(path, e))
}

/// Loads a frame directory. Frames are ordered by index; bytes map to
/// `b / 255`.
pub fn load_clip(dir: &Path) -> Result<VideoClip> {
    let files = indexed_files(dir)?;
    let mut frames = Vec::with_capacity(files.len());
    for (index, path) in files.iter().enumerate() {
        let frame = load_frame(path)?;
        if let Some(first) = frames.first().map(Frame::dims) {
            if frame.dims() != first {
                return Err(Error::FrameMismatch {
                    index,
                    expected: first,
                    found: frame.dims(),
                });
            }
        }
        frames.push(frame);
    }
    VideoClip::new(frames, 24.0)
}

/// Writes every frame as `NNNNNN.png`, creating the directory if needed.
pub fn save_clip(clip: &VideoClip, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (i, frame) in clip.frames().iter().enumerate() {
        save_frame(frame, &dir.join(frame_file_name(i)))?;
    }
    Ok(())
}

pub fn load_disparities(dir: &Path) -> Result<Vec<DisparityMap>> {
    let files = indexed_files(dir)?;
    let mut maps: Vec<DisparityMap> = Vec::with_capacity(files.len());
    for (index, path) in files.iter().enumerate() {
        let img = image::open(path).map_err(|e| image_err(path, e))?.to_luma16();
        let (w, h) = (img.width() as usize, img.height() as usize);
        if let Some(first) = maps.first().map(DisparityMap::dims) {
            if (w, h) != first {
                return Err(Error::FrameMismatch {
                    index,
                    expected: first,
                    found: (w, h),
                });
            }
        }
        let values = img.into_raw().into_iter().map(|v| v as f64 / 65535.0).collect();
        maps.push(DisparityMap::new(w, h, values)?);
    }
    Ok(maps)
}

pub fn save_disparities(maps: &[DisparityMap], dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (i, m) in maps.iter().enumerate() {
        let raw: Vec<u16> = m
            .values
            .iter()
            .map(|&v| (v * 65535.0 + 0.5).floor().clamp(0.0, 65535.0) as u16)
            .collect();
        let buf: ImageBuffer<Luma<u16>, _> =
            ImageBuffer::from_raw(m.width as u32, m.height as u32, raw)
                .expect("buffer length matches dimensions");
        let path = dir.join(frame_file_name(i));
        buf.save(&path).map_err(|e| image_err(&path, e))?;
    }
    Ok(())
}

/// Rec.601 luma per pixel.
pub fn to_grayscale(frame: &Frame) -> GrayFrame {
    let data = frame
        .data
        .chunks_exact(3)
        .map(|p| {
            (LUMA_WEIGHTS[0] * p[0] + LUMA_WEIGHTS[1] * p[1] + LUMA_WEIGHTS[2] * p[2])
                .clamp(0.0, 1.0)
        })
        .collect();
    GrayFrame {
        width: frame.width,
        height: frame.height,
        data,
    }
}

/// Bilinear resize with half-pixel-center alignment and edge clamping.
pub fn resize_bilinear(frame: &Frame, new_w: usize, new_h: usize) -> Result<Frame> {
    check_dims(new_w, new_h)?;
    if (new_w, new_h) == frame.dims() {
        return Ok(frame.clone());
    }
    let xs = axis_taps(frame.width, new_w);
    let ys = axis_taps(frame.height, new_h);
    let mut data = Vec::with_capacity(new_w * new_h * 3);
    for &(y0, y1, fy) in &ys {
        for &(x0, x1, fx) in &xs {
            let p00 = frame.pixel(x0, y0);
            let p10 = frame.pixel(x1, y0);
            let p01 = frame.pixel(x0, y1);
            let p11 = frame.pixel(x1, y1);
            for c in 0..3 {
                let top = p00[c] + (p10[c] - p00[c]) * fx;
                let bottom = p01[c] + (p11[c] - p01[c]) * fx;
                data.push(top + (bottom - top) * fy);
            }
        }
    }
    Ok(Frame::from_raw_clamped(new_w, new_h, data))
}

/// Source taps (i0, i1, frac) for each destination index along one axis.
fn axis_taps(src: usize, dst: usize) -> Vec<(usize, usize, f64)> {
    let scale = src as f64 / dst as f64;
    (0..dst)
        .map(|i| {
            let s = ((i as f64 + 0.5) * scale - 0.5).clamp(0.0, (src - 1) as f64);
            let i0 = s.floor() as usize;
            let i1 = (i0 + 1).min(src - 1);
            (i0, i1, s - i0 as f64)
        })
        .collect()
}

fn crop_origin(width: usize, height: usize, crop_w: usize, crop_h: usize) -> Result<(usize, usize)> {
    if crop_w < 2 || crop_h < 2 || crop_w > width || crop_h > height {
        return Err(Error::Dimensions(format!(
            "cannot crop {width}x{height} to {crop_w}x{crop_h}"
        )));
    }
    Ok(((width - crop_w) / 2, (height - crop_h) / 2))
}

/// Centered crop; odd margins leave the extra pixel on the right/bottom.
pub fn center_crop(frame: &Frame, crop_w: usize, crop_h: usize) -> Result<Frame> {
    let (x0, y0) = crop_origin(frame.width, frame.height, crop_w, crop_h)?;
    let mut data = Vec::with_capacity(crop_w * crop_h * 3);
    for y in y0..y0 + crop_h {
        let start = (y * frame.width + x0) * 3;
        data.extend_from_slice(&frame.data[start..start + crop_w * 3]);
    }
    Ok(Frame {
        width: crop_w,
        height: crop_h,
        data,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn gradient(w: usize, h: usize) -> Frame {
        Frame::from_fn(w, h, |x, y| {
            [
                x as f64 / (w - 1) as f64,
                y as f64 / (h - 1) as f64,
                ((x + y) % 3) as f64 / 2.0,
            ]
        })
        .unwrap()
    }

    #[test]
    fn frame_rejects_bad_inputs() {
        assert!(Frame::new(1, 4, vec![0.0; 12]).is_err());
        assert!(Frame::new(2, 2, vec![0.0; 11]).is_err());
        assert!(Frame::new(2, 2, vec![1.5; 12]).is_err());
    }

    #[test]
    fn quantization_rounds_half_up() {
        assert_eq!(quantize_u8(1.0), 255);
        assert_eq!(quantize_u8(0.5), 128);
        assert_eq!(quantize_u8(0.0), 0);
        assert_eq!(quantize_u8(128.0 / 255.0), 128);
    }

    #[test]
    fn grayscale_weights() {
        let f = Frame::new(2, 2, [[1.0, 1.0, 1.0], [0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.5; 3]].concat())
            .unwrap();
        let g = to_grayscale(&f);
        assert!((g.data[0] - 1.0).abs() < 1e-12);
        assert_eq!(g.data[1], 0.0);
        assert!((g.data[2] - 0.299).abs() < 1e-12);
        assert!((g.data[3] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn resize_identity_and_constant() {
        let f = gradient(7, 5);
        assert_eq!(resize_bilinear(&f, 7, 5).unwrap(), f);
        let c = Frame::filled(9, 6, [0.5; 3]).unwrap();
        for (w, h) in [(2, 2), (4, 17), (30, 3)] {
            let r = resize_bilinear(&c, w, h).unwrap();
            assert!(r.data().iter().all(|v| (v - 0.5).abs() < 1e-12));
        }
        assert!(resize_bilinear(&c, 1, 4).is_err());
    }

    #[test]
    fn checkerboard_upsample_matches_naive_bilinear() {
        let f = Frame::new(2, 2, [[0.0; 3], [1.0; 3], [1.0; 3], [0.0; 3]].concat()).unwrap();
        let r = resize_bilinear(&f, 4, 4).unwrap();
        // naive oracle: sample position clamped, explicit four-tap blend
        let src = [[0.0, 1.0], [1.0, 0.0]];
        for y in 0..4 {
            for x in 0..4 {
                let sx = ((x as f64 + 0.5) * 0.5 - 0.5).max(0.0).min(1.0);
                let sy = ((y as f64 + 0.5) * 0.5 - 0.5).max(0.0).min(1.0);
                let expect = src[0][0] * (1.0 - sx) * (1.0 - sy)
                    + src[0][1] * sx * (1.0 - sy)
                    + src[1][0] * (1.0 - sx) * sy
                    + src[1][1] * sx * sy;
                assert!((r.pixel(x, y)[0] - expect).abs() < 1e-6, "({x},{y})");
            }
        }
        // corners replicate, centre row/col hits 0.5
        assert_eq!(r.pixel(0, 0)[0], 0.0);
        assert!((r.pixel(1, 1)[0] - 0.375).abs() < 1e-12);
    }

    #[test]
    fn crop_offsets() {
        let f = gradient(6, 6);
        assert_eq!(center_crop(&f, 6, 6).unwrap(), f);
        let c = center_crop(&f, 4, 4).unwrap();
        assert_eq!(c.pixel(0, 0), f.pixel(1, 1));
        assert_eq!(c.pixel(3, 3), f.pixel(4, 4));
        let f5 = gradient(5, 5);
        let c5 = center_crop(&f5, 4, 4).unwrap();
        assert_eq!(c5.pixel(0, 0), f5.pixel(0, 0));
        assert_eq!(c5.pixel(3, 3), f5.pixel(3, 3));
        assert!(center_crop(&f, 7, 4).is_err());
        assert!(center_crop(&f, 1, 4).is_err());
    }

    #[test]
    fn clip_requires_uniform_dims() {
        let a = Frame::filled(4, 4, [0.0; 3]).unwrap();
        let b = Frame::filled(5, 4, [0.0; 3]).unwrap();
        match VideoClip::new(vec![a.clone(), a, b], 24.0) {
            Err(Error::FrameMismatch { index, .. }) => assert_eq!(index, 2),
            other => panic!("unexpected {other:?}"),
        }
        assert!(VideoClip::new(vec![], 24.0).is_err());
    }

    #[test]
    fn disparity_normalization_spans_unit_interval() {
        let mut maps = vec![
            DisparityMap::uniform(2, 2, 0.2).unwrap(),
            DisparityMap::new(2, 2, vec![0.2, 0.4, 0.6, 0.3]).unwrap(),
        ];
        normalize_disparities(&mut maps);
        assert_eq!(maps[0].values(), &[0.0; 4]);
        assert!((maps[1].values()[2] - 1.0).abs() < 1e-12);
        assert!((maps[1].values()[1] - 0.5).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn resize_stays_within_input_range(
            w in 2usize..9, h in 2usize..9, nw in 2usize..20, nh in 2usize..20,
            seed in any::<u64>()
        ) {
            let mut s = seed;
            let f = Frame::from_fn(w, h, |_, _| {
                s = crate::rng::splitmix64(s);
                let v = (s >> 11) as f64 / (1u64 << 53) as f64;
                [v, 1.0 - v, v * v]
            }).unwrap();
            let r = resize_bilinear(&f, nw, nh).unwrap();
            for c in 0..3 {
                let chan = |fr: &Frame| fr.data().iter().skip(c).step_by(3).copied().collect::<Vec<_>>();
                let src = chan(&f);
                let lo = src.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = src.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                for v in chan(&r) {
                    prop_assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
                }
            }
        }

        #[test]
        fn grayscale_of_gray_is_identity(v in 0.0f64..=1.0) {
            let g = to_grayscale(&Frame::filled(2, 2, [v; 3]).unwrap());
            prop_assert!((g.data[0] - v).abs() < 1e-12);
        }
    }
}
