//! Scatter-based bokeh driven by the circle of confusion.
//!
//! Every source pixel spreads its color uniformly over a hard-edged disk of
//! radius `r = 60 K |d - d_f|` pixels. The disk is the set of pixel centers
//! within distance `r`; its full (unclipped) pixel count normalizes the
//! per-pixel weight so each source scatters a total weight of one. Disk
//! parts outside the frame are dropped.
//!
//! Occlusion is handled with disparity layers. Pixels are binned into
//! `layers` uniform disparity bins and scattered bin by bin from far
//! (small disparity) to near. Each bin produces a color and weight buffer;
//! the running accumulators are attenuated by `1 - min(layer_weight, 1)`
//! before the bin is added, so a fully covering near layer hides what is
//! behind it and a partially covering one lets the rest show through.
//! The output is the accumulated color divided by the accumulated weight.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::{DisparityMap, Frame, VideoClip};
use crate::signals::PhotoSignal;

/// Physical blur range that the normalized `K` in [0, 1] maps onto.
pub const MAX_COC_RADIUS: f64 = 60.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BokehConfig {
    /// Number of uniform disparity bins used for occlusion ordering.
    pub layers: usize,
}

impl Default for BokehConfig {
    fn default() -> Self {
        Self { layers: 8 }
    }
}

/// Per-pixel circle-of-confusion radius in pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct CoCMap {
    pub width: usize,
    pub height: usize,
    pub radii: Vec<f64>,
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::InvalidValue(format!("{name} = {v} outside [0, 1]")));
    }
    Ok(())
}

pub fn coc_map(disp: &DisparityMap, k: f64, focus: f64) -> Result<CoCMap> {
    check_unit("K", k)?;
    check_unit("d_f", focus)?;
    let k_phys = MAX_COC_RADIUS * k;
    Ok(CoCMap {
        width: disp.width(),
        height: disp.height(),
        radii: disp.values().iter().map(|d| k_phys * (d - focus).abs()).collect(),
    })
}

/// Disparity bin of `d` for `layers` uniform bins over [0, 1].
pub fn layer_of(d: f64, layers: usize) -> usize {
    ((d * layers as f64).floor() as usize).min(layers - 1)
}

/// Row spans of a disk: for each `dy` in `-R..=R`, the half width of the
/// covered pixel run. Returns `(reach, half_widths)`.
fn disk_spans(r: f64) -> (i64, Vec<i64>) {
    let reach = r.floor() as i64;
    let r2 = r * r;
    let spans = (-reach..=reach)
        .map(|dy| {
            let rem = r2 - (dy * dy) as f64;
            // largest dx with dx^2 + dy^2 <= r^2
            let mut h = rem.sqrt().floor() as i64;
            while ((h + 1) * (h + 1)) as f64 <= rem {
                h += 1;
            }
            while h > 0 && (h * h) as f64 > rem {
                h -= 1;
            }
            h
        })
        .collect();
    (reach, spans)
}

/// Scatter buffers for one layer: (r, g, b, weight) per pixel.
struct LayerBuffers {
    width: usize,
    // Row-wise difference arrays, width + 1 entries per row.
    diff: Vec<[f64; 4]>,
}

impl LayerBuffers {
    fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            diff: vec![[0.0; 4]; (width + 1) * height],
        }
    }

    fn scatter(&mut self, x: usize, y: usize, r: f64, rgb: [f64; 3], height: usize) {
        let (reach, spans) = disk_spans(r);
        let count: i64 = spans.iter().map(|h| 2 * h + 1).sum();
        let w = 1.0 / count as f64;
        let contrib = [rgb[0] * w, rgb[1] * w, rgb[2] * w, w];
        let stride = self.width + 1;
        for (dy, &h) in (-reach..=reach).zip(&spans) {
            let ty = y as i64 + dy;
            if ty < 0 || ty >= height as i64 {
                continue;
            }
            let x0 = (x as i64 - h).max(0) as usize;
            let x1 = ((x as i64 + h).min(self.width as i64 - 1) + 1) as usize;
            let row = ty as usize * stride;
            for c in 0..4 {
                self.diff[row + x0][c] += contrib[c];
                self.diff[row + x1][c] -= contrib[c];
            }
        }
    }

    /// Resolves the difference arrays into per-pixel sums.
    fn resolve(self, height: usize) -> Vec<[f64; 4]> {
        let stride = self.width + 1;
        let mut out = Vec::with_capacity(self.width * height);
        for y in 0..height {
            let mut run = [0.0; 4];
            for x in 0..self.width {
                let d = self.diff[y * stride + x];
                for c in 0..4 {
                    run[c] += d[c];
                }
                out.push(run);
            }
        }
        out
    }
}

pub fn render_bokeh(frame: &Frame, disp: &DisparityMap, k: f64, focus: f64) -> Result<Frame> {
    render_bokeh_with(frame, disp, k, focus, &BokehConfig::default())
}

pub fn render_bokeh_with(
    frame: &Frame,
    disp: &DisparityMap,
    k: f64,
    focus: f64,
    cfg: &BokehConfig,
) -> Result<Frame> {
    if frame.dims() != disp.dims() {
        return Err(Error::Dimensions(format!(
            "frame is {:?} but disparity is {:?}",
            frame.dims(),
            disp.dims()
        )));
    }
    if cfg.layers == 0 {
        return Err(Error::Config("bokeh layers must be at least 1".into()));
    }
    let coc = coc_map(disp, k, focus)?;
    if k == 0.0 {
        return Ok(frame.clone());
    }
    let (w, h) = frame.dims();

    let mut by_layer: Vec<Vec<usize>> = vec![Vec::new(); cfg.layers];
    for (i, &d) in disp.values().iter().enumerate() {
        by_layer[layer_of(d, cfg.layers)].push(i);
    }

    let mut acc = vec![[0.0f64; 4]; w * h];
    for members in by_layer.iter().filter(|m| !m.is_empty()) {
        let mut buf = LayerBuffers::new(w, h);
        for &i in members {
            buf.scatter(i % w, i / w, coc.radii[i], frame.pixel(i % w, i / w), h);
        }
        for (a, l) in acc.iter_mut().zip(buf.resolve(h)) {
            let alpha = l[3].clamp(0.0, 1.0);
            for c in 0..4 {
                a[c] = a[c] * (1.0 - alpha) + l[c].max(0.0);
            }
        }
    }

    let data = acc
        .iter()
        .flat_map(|a| {
            let wsum = a[3];
            [a[0] / wsum, a[1] / wsum, a[2] / wsum]
        })
        .collect();
    Ok(Frame::from_raw_clamped(w, h, data))
}

/// Renders frame `i` with `(K_i, d_f_i)`; frames with `K_i = 0` pass through.
pub fn render_bokeh_clip(
    clip: &VideoClip,
    disparities: &[DisparityMap],
    signal: &PhotoSignal,
    cfg: &BokehConfig,
) -> Result<VideoClip> {
    if signal.len() != clip.len() {
        return Err(Error::LengthMismatch(format!(
            "signal has {} frames, clip has {}",
            signal.len(),
            clip.len()
        )));
    }
    if disparities.len() != clip.len() {
        return Err(Error::LengthMismatch(format!(
            "{} disparity maps for {} frames",
            disparities.len(),
            clip.len()
        )));
    }
    let frames = clip
        .frames()
        .par_iter()
        .zip(disparities)
        .enumerate()
        .map(|(i, (f, d))| {
            let p = signal.get(i);
            render_bokeh_with(f, d, p.blur, p.focus, cfg)
        })
        .collect::<Result<Vec<_>>>()?;
    VideoClip::new(frames, clip.fps)
}
