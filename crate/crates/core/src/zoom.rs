//! Zoom by focal length: the crop that matches the narrower field of view,
//! resized back to the source resolution.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::{center_crop, resize_bilinear, DisparityMap, Frame};

/// Which diagonal enters the field-of-view formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiagonalMode {
    /// Physical sensor diagonal in millimetres (`OpticsConfig::sensor_diag`).
    SensorDiag,
    /// Image diagonal in pixels, `sqrt(h^2 + w^2)`, mixed with focal lengths
    /// in millimetres. Gives crop ratios close to one.
    PixelDiag,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OpticsConfig {
    /// Assumed focal length of the source video, mm.
    pub f_source: f64,
    /// Focal length reached at `f = 1`, mm.
    pub f_max: f64,
    /// Full-frame sensor diagonal, mm.
    pub sensor_diag: f64,
    pub mode: DiagonalMode,
}

impl Default for OpticsConfig {
    fn default() -> Self {
        Self {
            f_source: 24.0,
            f_max: 70.0,
            sensor_diag: 43.266,
            mode: DiagonalMode::SensorDiag,
        }
    }
}

impl OpticsConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.f_source > 0.0 && self.f_source < self.f_max) {
            return Err(Error::Config(format!(
                "optics needs 0 < f_source < f_max, got {} and {}",
                self.f_source, self.f_max
            )));
        }
        if !(self.sensor_diag > 0.0) {
            return Err(Error::Config("optics sensor_diag must be positive".into()));
        }
        Ok(())
    }
}

/// Maps the normalized control onto `[f_source, f_max]` millimetres.
pub fn focal_denormalize(f_norm: f64, cfg: &OpticsConfig) -> Result<f64> {
    if !(0.0..=1.0).contains(&f_norm) {
        return Err(Error::InvalidValue(format!("f = {f_norm} outside [0, 1]")));
    }
    Ok(cfg.f_source + f_norm * (cfg.f_max - cfg.f_source))
}

/// Field of view in radians, `2 atan(diag / 2f)`.
pub fn fov(diag: f64, focal: f64) -> f64 {
    2.0 * (diag / (2.0 * focal)).atan()
}

/// Ratio `FoV_target / FoV_source` for a normalized focal length.
pub fn fov_ratio(height: usize, width: usize, f_norm: f64, cfg: &OpticsConfig) -> Result<f64> {
    let target = focal_denormalize(f_norm, cfg)?;
    let diag = match cfg.mode {
        DiagonalMode::SensorDiag => cfg.sensor_diag,
        DiagonalMode::PixelDiag => ((height * height + width * width) as f64).sqrt(),
    };
    Ok(fov(diag, target) / fov(diag, cfg.f_source))
}

/// Crop size `(h', w')` = round(ratio * (h, w)), each at least 2.
pub fn crop_dims(height: usize, width: usize, f_norm: f64, cfg: &OpticsConfig) -> Result<(usize, usize)> {
    let ratio = fov_ratio(height, width, f_norm, cfg)?;
    let scale = |n: usize| ((ratio * n as f64 + 0.5).floor() as usize).clamp(2, n);
    Ok((scale(height), scale(width)))
}

pub fn apply_zoom(frame: &Frame, f_norm: f64, cfg: &OpticsConfig) -> Result<Frame> {
    let (w, h) = frame.dims();
    let (ch, cw) = crop_dims(h, w, f_norm, cfg)?;
    if (cw, ch) == (w, h) {
        return Ok(frame.clone());
    }
    resize_bilinear(&center_crop(frame, cw, ch)?, w, h)
}

/// Zooms a frame and its disparity with the same crop. Disparity uses
/// nearest-neighbour resampling so no new depth values are invented.
pub fn apply_zoom_with_disparity(
    frame: &Frame,
    disp: &DisparityMap,
    f_norm: f64,
    cfg: &OpticsConfig,
) -> Result<(Frame, DisparityMap)> {
    if frame.dims() != disp.dims() {
        return Err(Error::Dimensions(format!(
            "frame is {:?} but disparity is {:?}",
            frame.dims(),
            disp.dims()
        )));
    }
    let (w, h) = frame.dims();
    let (ch, cw) = crop_dims(h, w, f_norm, cfg)?;
    if (cw, ch) == (w, h) {
        return Ok((frame.clone(), disp.clone()));
    }
    let zoomed = resize_bilinear(&center_crop(frame, cw, ch)?, w, h)?;
    let zdisp = disp.center_crop(cw, ch)?.resize_nearest(w, h)?;
    Ok((zoomed, zdisp))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn denormalize() {
        let cfg = OpticsConfig::default();
        assert_eq!(focal_denormalize(0.0, &cfg).unwrap(), 24.0);
        assert_eq!(focal_denormalize(1.0, &cfg).unwrap(), 70.0);
        assert_eq!(focal_denormalize(0.5, &cfg).unwrap(), 47.0);
        assert!(focal_denormalize(1.1, &cfg).is_err());
    }

    #[test]
    fn fov_values() {
        assert!(fov(43.266, 1e9) < 1e-6);
        assert!((fov(10.0, 5.0) - FRAC_PI_2).abs() < 1e-15);
        // 2 * atan(43.266 / 48), evaluated independently
        let expect = 2.0 * (0.901375f64).atan();
        assert!((fov(43.266, 24.0) - expect).abs() < 1e-12);
        assert!((fov(43.266, 24.0) - 1.46715).abs() < 1e-4);
    }

    #[test]
    fn crop_dims_examples() {
        let cfg = OpticsConfig::default();
        assert_eq!(crop_dims(480, 832, 0.0, &cfg).unwrap(), (480, 832));
        let ratio = fov_ratio(480, 832, 1.0, &cfg).unwrap();
        assert!((ratio - 0.4084).abs() < 5e-4, "{ratio}");
        assert_eq!(crop_dims(480, 832, 1.0, &cfg).unwrap(), (196, 340));
        let lit = OpticsConfig { mode: DiagonalMode::PixelDiag, ..cfg };
        let r = fov_ratio(480, 832, 1.0, &lit).unwrap();
        assert!((r - 0.937).abs() < 1e-3, "{r}");
    }

    #[test]
    fn ratio_strictly_decreasing() {
        for mode in [DiagonalMode::SensorDiag, DiagonalMode::PixelDiag] {
            let cfg = OpticsConfig { mode, ..Default::default() };
            let ratios: Vec<f64> = (0..=10)
                .map(|i| fov_ratio(480, 832, i as f64 / 10.0, &cfg).unwrap())
                .collect();
            assert!(ratios.windows(2).all(|p| p[1] < p[0]), "{mode:?}: {ratios:?}");
        }
    }

    #[test]
    fn zoom_identity_and_constant() {
        let cfg = OpticsConfig::default();
        let f = Frame::from_fn(20, 16, |x, y| [x as f64 / 19.0, y as f64 / 15.0, 0.3]).unwrap();
        assert_eq!(apply_zoom(&f, 0.0, &cfg).unwrap(), f);
        let c = Frame::filled(20, 16, [0.25, 0.5, 0.75]).unwrap();
        for fz in [0.3, 0.7, 1.0] {
            let z = apply_zoom(&c, fz, &cfg).unwrap();
            assert!(z.data().iter().zip(c.data()).all(|(a, b)| (a - b).abs() < 1e-12));
        }
    }

    #[test]
    fn zoom_magnifies_a_centered_dot() {
        let cfg = OpticsConfig::default();
        let n = 64;
        // 2x2 dot around the centre (pixels 31 and 32)
        let f = Frame::from_fn(n, n, |x, y| {
            let on = (31..=32).contains(&x) && (31..=32).contains(&y);
            [if on { 1.0 } else { 0.0 }; 3]
        })
        .unwrap();
        let z = apply_zoom(&f, 1.0, &cfg).unwrap();
        let row: Vec<usize> = (0..n).filter(|&x| z.pixel(x, n / 2)[0] >= 0.5).collect();
        let extent = row.len() as f64;
        let ratio = fov_ratio(n, n, 1.0, &cfg).unwrap();
        let expected = 2.0 / ratio;
        assert!((extent - expected).abs() <= 1.0, "extent {extent}, expected {expected}");
        // centre value survives
        assert!(z.pixel(31, 31)[0] > 0.99);
    }

    #[test]
    fn joint_zoom_keeps_alignment() {
        let cfg = OpticsConfig::default();
        let f = Frame::from_fn(32, 24, |x, _| [if x < 16 { 0.0 } else { 1.0 }; 3]).unwrap();
        let d = DisparityMap::from_fn(32, 24, |x, _| if x < 16 { 0.0 } else { 1.0 }).unwrap();
        let (zf, zd) = apply_zoom_with_disparity(&f, &d, 0.8, &cfg).unwrap();
        assert_eq!(zf, apply_zoom(&f, 0.8, &cfg).unwrap());
        for x in [0, 5, 26, 31] {
            assert_eq!(zd.get(x, 10), if x < 16 { 0.0 } else { 1.0 });
        }
        assert!(zd.values().iter().all(|&v| v == 0.0 || v == 1.0));
    }
}
