//! Color temperature: black-body Kelvin-to-RGB on the 0-255 scale and the
//! relative control `T` in [-1, 1].
//!
//! The channel formulas are written in hundreds of Kelvin (`t = K / 100`):
//!
//! * `t <= 66`: `(255, 99.47 ln t - 161.12, 138.52 ln(t - 10) - 305.04)`
//! * `t > 88`: `(329.07 (t - 60)^-0.1933, 288.12 (t - 60)^-0.1155, 255)`
//! * in between, each channel is the equal-weight average of the two
//!   outer-band expressions evaluated at `t`.
//!
//! Each channel is clamped to [0, 255] after evaluation. The equal-weight
//! blend jumps at both band edges (about 11 levels in red at 6600 K and
//! about 41 at 8800 K); [`BlendMode::Linear`] is a continuous alternative
//! that fades between the outer bands across 6600-8800 K.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::{Frame, VideoClip};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum BlendMode {
    /// Fixed 0.5/0.5 mixture inside 6600-8800 K.
    #[default]
    Equal,
    /// Weight moves linearly from the warm band at 6600 K to the cool band
    /// at 8800 K.
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ColorTempConfig {
    pub temp_base: f64,
    pub temp_min: f64,
    pub temp_max: f64,
    pub blend: BlendMode,
}

impl Default for ColorTempConfig {
    fn default() -> Self {
        Self {
            temp_base: 6500.0,
            temp_min: 2000.0,
            temp_max: 10000.0,
            blend: BlendMode::Equal,
        }
    }
}

impl ColorTempConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.temp_min < self.temp_base && self.temp_base < self.temp_max) {
            return Err(Error::Config(format!(
                "color needs temp_min < temp_base < temp_max, got {} {} {}",
                self.temp_min, self.temp_base, self.temp_max
            )));
        }
        if self.temp_min < 1100.0 {
            // ln(t - 10) needs t > 10 hundred Kelvin
            return Err(Error::Config("color temp_min must be at least 1100 K".into()));
        }
        Ok(())
    }
}

/// Target Kelvin for relative control `T`.
pub fn temp_from_control(t: f64, cfg: &ColorTempConfig) -> Result<f64> {
    if !(-1.0..=1.0).contains(&t) {
        return Err(Error::InvalidValue(format!("T = {t} outside [-1, 1]")));
    }
    let base = cfg.temp_base;
    Ok(if t < 0.0 {
        base + (base - cfg.temp_min) * t
    } else {
        base + (cfg.temp_max - base) * t
    })
}

const WARM_EDGE: f64 = 66.0;
const COOL_EDGE: f64 = 88.0;

fn warm_band(t: f64) -> [f64; 3] {
    [
        255.0,
        99.47 * t.ln() - 161.12,
        138.52 * (t - 10.0).ln() - 305.04,
    ]
}

fn cool_band(t: f64) -> [f64; 3] {
    [
        329.07 * (t - 60.0).powf(-0.1933),
        288.12 * (t - 60.0).powf(-0.1155),
        255.0,
    ]
}

/// Black-body RGB (0-255 scale, clamped) for `kelvin` in [2000, 10000].
pub fn kelvin_to_rgb(kelvin: f64) -> Result<[f64; 3]> {
    kelvin_to_rgb_with(kelvin, BlendMode::Equal)
}

pub fn kelvin_to_rgb_with(kelvin: f64, blend: BlendMode) -> Result<[f64; 3]> {
    if !(2000.0..=10000.0).contains(&kelvin) {
        return Err(Error::InvalidValue(format!(
            "temperature {kelvin} K outside [2000, 10000]"
        )));
    }
    let t = kelvin / 100.0;
    let raw = if t <= WARM_EDGE {
        // the warm band's G and B carry max(0, .)
        warm_band(t)
    } else if t <= COOL_EDGE {
        match blend {
            BlendMode::Equal => {
                let (warm, cool) = (warm_band(t), cool_band(t));
                [0, 1, 2].map(|c| 0.5 * (warm[c] + cool[c]))
            }
            BlendMode::Linear => {
                let u = (t - WARM_EDGE) / (COOL_EDGE - WARM_EDGE);
                let warm = warm_band(WARM_EDGE).map(clamp255);
                let cool = cool_band(COOL_EDGE).map(clamp255);
                [0, 1, 2].map(|c| (1.0 - u) * warm[c] + u * cool[c])
            }
        }
    } else {
        cool_band(t)
    };
    Ok(raw.map(clamp255))
}

fn clamp255(v: f64) -> f64 {
    v.clamp(0.0, 255.0)
}

/// Per-channel gains `RGB_target / RGB_base`.
pub fn temperature_gains(t: f64, cfg: &ColorTempConfig) -> Result<[f64; 3]> {
    let base = kelvin_to_rgb_with(cfg.temp_base, cfg.blend)?;
    let target = kelvin_to_rgb_with(temp_from_control(t, cfg)?, cfg.blend)?;
    if let Some(c) = base.iter().position(|&v| v <= 0.0) {
        return Err(Error::InvalidValue(format!(
            "base temperature {} K has a zero channel {c}",
            cfg.temp_base
        )));
    }
    Ok([0, 1, 2].map(|c| target[c] / base[c]))
}

pub fn apply_color_temperature(frame: &Frame, t: f64, cfg: &ColorTempConfig) -> Result<Frame> {
    let gains = temperature_gains(t, cfg)?;
    if gains == [1.0; 3] {
        return Ok(frame.clone());
    }
    Ok(frame.map_channels(|c, v| v * gains[c]))
}

pub fn apply_color_clip(clip: &VideoClip, temps: &[f64], cfg: &ColorTempConfig) -> Result<VideoClip> {
    if temps.len() != clip.len() {
        return Err(Error::LengthMismatch(format!(
            "{} temperature values for {} frames",
            temps.len(),
            clip.len()
        )));
    }
    let frames = clip
        .frames()
        .iter()
        .zip(temps)
        .map(|(f, &t)| apply_color_temperature(f, t, cfg))
        .collect::<Result<Vec<_>>>()?;
    VideoClip::new(frames, clip.fps)
}
