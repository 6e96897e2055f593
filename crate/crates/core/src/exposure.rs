//! Shutter-speed exposure through an electron-count sensor model.
//!
//! A normalized channel value `c` is read as `E_s = c * fwc` collected
//! electrons. The shutter control scales it by `M(S) = 2^(eps * S)`; the
//! result is clipped at the full-well capacity and mapped back so that
//! `fwc` is full scale.
//!
//! The noisy path treats the scaled count as a Poisson mean (plus the
//! dark-current term `qe * mu_dark`), clips the sample at `fwc`, then adds
//! Gaussian read noise. Each sample draws from its own ChaCha8 stream keyed
//! by `(seed, frame, pixel, channel)` through [`crate::rng::derive_key`].

use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::{Frame, VideoClip};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SensorConfig {
    /// Full-well capacity in electrons.
    pub fwc: f64,
    /// Stops of exposure per unit of shutter control.
    pub epsilon: f64,
    /// Quantum efficiency, only used to scale the dark-current term.
    pub qe: f64,
    /// Dark current, electrons.
    pub mu_dark: f64,
    /// Read-noise standard deviation, electrons.
    pub sigma_read: f64,
}

impl Default for SensorConfig {
    fn default() -> Self {
        Self {
            fwc: 10_000.0,
            epsilon: 3.0,
            qe: 0.6,
            mu_dark: 0.0,
            sigma_read: 2.0,
        }
    }
}

impl SensorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.fwc > 0.0 && self.epsilon > 0.0 && self.sigma_read >= 0.0) {
            return Err(Error::Config(
                "sensor needs fwc > 0, epsilon > 0, sigma_read >= 0".into(),
            ));
        }
        if !(self.qe > 0.0 && self.qe <= 1.0) || self.mu_dark < 0.0 {
            return Err(Error::Config("sensor needs qe in (0, 1] and mu_dark >= 0".into()));
        }
        Ok(())
    }
}

fn check_shutter(s: f64) -> Result<()> {
    if !(-1.0..=1.0).contains(&s) {
        return Err(Error::InvalidValue(format!("S = {s} outside [-1, 1]")));
    }
    Ok(())
}

/// `2^(epsilon * S)`.
pub fn exposure_multiplier(s: f64, epsilon: f64) -> f64 {
    (epsilon * s).exp2()
}

/// Deterministic exposure change: scale, clip at full well, rescale.
pub fn apply_exposure(frame: &Frame, s: f64, cfg: &SensorConfig) -> Result<Frame> {
    check_shutter(s)?;
    if s == 0.0 {
        return Ok(frame.clone());
    }
    let m = exposure_multiplier(s, cfg.epsilon);
    let fwc = cfg.fwc;
    Ok(frame.map_channels(|_, c| {
        let target = c * fwc * m;
        target.min(fwc) / fwc
    }))
}

/// Mean number of electrons the noisy path draws for channel value `c`.
pub fn poisson_mean(c: f64, s: f64, cfg: &SensorConfig) -> f64 {
    c * cfg.fwc * exposure_multiplier(s, cfg.epsilon) + cfg.qe * cfg.mu_dark
}

/// Reads out one sample: Poisson collection, full-well clip, read noise.
/// Returned in electrons (not clipped below zero).
pub fn sample_readout(mean: f64, cfg: &SensorConfig, key: u64) -> f64 {
    let mut rng = rng::stream(key, &[]);
    let collected = if mean > 0.0 {
        Poisson::new(mean).expect("finite positive mean").sample(&mut rng)
    } else {
        0.0
    };
    let clipped = collected.min(cfg.fwc);
    if cfg.sigma_read > 0.0 {
        clipped + Normal::new(0.0, cfg.sigma_read).expect("valid sigma").sample(&mut rng)
    } else {
        clipped
    }
}

/// Noisy exposure change for frame number `frame_index` of a clip.
pub fn apply_exposure_noisy(
    frame: &Frame,
    s: f64,
    cfg: &SensorConfig,
    seed: u64,
    frame_index: usize,
) -> Result<Frame> {
    check_shutter(s)?;
    let (w, h) = frame.dims();
    let data = frame
        .data()
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            let key = rng::derive_key(seed, &[frame_index as u64, (i / 3) as u64, (i % 3) as u64]);
            sample_readout(poisson_mean(c, s, cfg), cfg, key) / cfg.fwc
        })
        .collect();
    Ok(Frame::from_raw_clamped(w, h, data))
}

pub fn apply_exposure_clip(clip: &VideoClip, shutter: &[f64], cfg: &SensorConfig) -> Result<VideoClip> {
    if shutter.len() != clip.len() {
        return Err(Error::LengthMismatch(format!(
            "{} shutter values for {} frames",
            shutter.len(),
            clip.len()
        )));
    }
    let frames = clip
        .frames()
        .iter()
        .zip(shutter)
        .map(|(f, &s)| apply_exposure(f, s, cfg))
        .collect::<Result<Vec<_>>>()?;
    VideoClip::new(frames, clip.fps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::quantize_u8;

    #[test]
    fn multiplier_values() {
        assert_eq!(exposure_multiplier(0.0, 3.0), 1.0);
        assert_eq!(exposure_multiplier(1.0, 1.0), 2.0);
        assert_eq!(exposure_multiplier(-1.0, 2.0), 0.25);
    }

    #[test]
    fn deterministic_examples() {
        let cfg = SensorConfig { epsilon: 1.0, ..Default::default() };
        let f = Frame::filled(2, 2, [128.0 / 255.0, 100.0 / 255.0, 0.0]).unwrap();
        assert_eq!(apply_exposure(&f, 0.0, &cfg).unwrap(), f);
        let bright = apply_exposure(&f, 1.0, &cfg).unwrap();
        assert_eq!(bright.pixel(0, 0)[0], 1.0);
        assert_eq!(quantize_u8(bright.pixel(0, 0)[0]), 255);
        let dark = apply_exposure(&f, -1.0, &cfg).unwrap();
        assert!((dark.pixel(0, 0)[1] - 50.0 / 255.0).abs() < 1e-12);
        assert_eq!(quantize_u8(dark.pixel(0, 0)[1]), 50);
        assert_eq!(dark.pixel(1, 1)[2], 0.0);
        assert!(apply_exposure(&f, 1.5, &cfg).is_err());
    }

    #[test]
    fn clipping_is_idempotent_at_full_scale() {
        let cfg = SensorConfig::default();
        let f = Frame::filled(3, 3, [1.0, 0.9, 0.6]).unwrap();
        let once = apply_exposure(&f, 1.0, &cfg).unwrap();
        let twice = apply_exposure(&once, 1.0, &cfg).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn zero_mean_without_read_noise_is_black() {
        let cfg = SensorConfig { sigma_read: 0.0, ..Default::default() };
        let f = Frame::filled(4, 4, [0.0; 3]).unwrap();
        for seed in 0..5 {
            let out = apply_exposure_noisy(&f, 0.7, &cfg, seed, 0).unwrap();
            assert!(out.data().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn noisy_path_is_reproducible() {
        let cfg = SensorConfig::default();
        let f = Frame::filled(8, 8, [0.3, 0.5, 0.7]).unwrap();
        let a = apply_exposure_noisy(&f, 0.2, &cfg, 11, 3).unwrap();
        let b = apply_exposure_noisy(&f, 0.2, &cfg, 11, 3).unwrap();
        assert_eq!(a, b);
        let c = apply_exposure_noisy(&f, 0.2, &cfg, 11, 4).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn config_validation() {
        assert!(SensorConfig::default().validate().is_ok());
        assert!(SensorConfig { fwc: 0.0, ..Default::default() }.validate().is_err());
        assert!(SensorConfig { qe: 1.5, ..Default::default() }.validate().is_err());
    }
}
