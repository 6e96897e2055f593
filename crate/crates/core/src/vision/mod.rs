//! Feature matching and affine motion measurement between two frames.

mod features;
mod matching;
mod ransac;

pub use features::{
    detect_and_describe, harris_response, Descriptor, Features, Keypoint, BORDER, MIN_IMAGE_SIZE, PATCH_RADIUS,
    PATTERN_SEED,
};
pub use matching::{match_ratio, Match};
pub use ransac::{estimate_affine_ransac, AffineTransform, Point, RansacConfig, RansacFit};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::GrayFrame;

/// How the affine is reduced to one displacement magnitude.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Aggregation {
    /// Mean over the four corners and the center.
    #[default]
    Probes,
    /// Mean over a regular grid with `grid_step` spacing.
    Grid,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VisionConfig {
    pub max_features: usize,
    /// FAST intensity threshold on the [0, 1] scale.
    pub fast_threshold: f64,
    pub ratio: f64,
    pub ransac: RansacConfig,
    pub aggregation: Aggregation,
    pub grid_step: usize,
}

impl Default for VisionConfig {
    fn default() -> Self {
        Self {
            max_features: 500,
            fast_threshold: 20.0 / 255.0,
            ratio: 0.75,
            ransac: RansacConfig::default(),
            aggregation: Aggregation::Probes,
            grid_step: 16,
        }
    }
}

impl VisionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_features == 0 || self.grid_step == 0 || self.ransac.iterations == 0 {
            return Err(Error::Config(
                "vision max_features, grid_step and ransac.iterations must be positive".into(),
            ));
        }
        if !(self.ratio > 0.0 && self.ratio <= 1.0) || self.ransac.inlier_tol <= 0.0 || self.fast_threshold <= 0.0 {
            return Err(Error::Config(
                "vision needs ratio in (0, 1], inlier_tol > 0, fast_threshold > 0".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Displacement {
    Pixels(f64),
    /// Too few matches survived on visibly different images.
    Unmeasurable,
}

impl Displacement {
    pub fn pixels(self) -> Option<f64> {
        match self {
            Displacement::Pixels(p) => Some(p),
            Displacement::Unmeasurable => None,
        }
    }
}

const NEAR_IDENTICAL: f64 = 1.0 / 255.0;

fn probe_points(w: usize, h: usize, cfg: &VisionConfig) -> Vec<Point> {
    let (xmax, ymax) = ((w - 1) as f64, (h - 1) as f64);
    match cfg.aggregation {
        Aggregation::Probes => vec![
            [0.0, 0.0],
            [xmax, 0.0],
            [0.0, ymax],
            [xmax, ymax],
            [xmax / 2.0, ymax / 2.0],
        ],
        Aggregation::Grid => (0..h)
            .step_by(cfg.grid_step)
            .flat_map(|y| (0..w).step_by(cfg.grid_step).map(move |x| [x as f64, y as f64]))
            .collect(),
    }
}

/// Mean displacement `|A(p) - p|` over the configured probe points.
pub fn affine_magnitude(t: &AffineTransform, w: usize, h: usize, cfg: &VisionConfig) -> f64 {
    let probes = probe_points(w, h, cfg);
    let total: f64 = probes
        .iter()
        .map(|&p| {
            let q = t.apply(p);
            ((q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2)).sqrt()
        })
        .sum();
    total / probes.len() as f64
}

pub fn extract_features(img: &GrayFrame, cfg: &VisionConfig) -> Result<Features> {
    detect_and_describe(img, cfg.max_features, cfg.fast_threshold)
}

/// Displacement between two frames whose features are already extracted.
pub fn displacement_from_features(
    i1: &GrayFrame,
    f1: &Features,
    i2: &GrayFrame,
    f2: &Features,
    cfg: &VisionConfig,
) -> Result<Displacement> {
    if (i1.width, i1.height) != (i2.width, i2.height) {
        return Err(Error::Dimensions(format!(
            "displacement between {}x{} and {}x{}",
            i1.width, i1.height, i2.width, i2.height
        )));
    }
    if i1.data == i2.data {
        return Ok(Displacement::Pixels(0.0));
    }
    let fallback = || -> Result<Displacement> {
        Ok(if i1.mean_abs_diff(i2)? < NEAR_IDENTICAL {
            Displacement::Pixels(0.0)
        } else {
            Displacement::Unmeasurable
        })
    };
    let matches = match_ratio(&f1.descriptors, &f2.descriptors, cfg.ratio);
    if matches.len() < 3 {
        return fallback();
    }
    let pairs: Vec<(Point, Point)> = matches
        .iter()
        .map(|m| {
            let (a, b) = (f1.keypoints[m.index_a], f2.keypoints[m.index_b]);
            ([a.x, a.y], [b.x, b.y])
        })
        .collect();
    match estimate_affine_ransac(&pairs, &cfg.ransac) {
        Ok(fit) => Ok(Displacement::Pixels(affine_magnitude(
            &fit.transform,
            i1.width,
            i1.height,
            cfg,
        ))),
        Err(Error::Estimation(_)) => fallback(),
        Err(e) => Err(e),
    }
}

/// Detect, match, fit and reduce: how far `i2` has moved relative to `i1`.
pub fn displacement_score(i1: &GrayFrame, i2: &GrayFrame, cfg: &VisionConfig) -> Result<Displacement> {
    if (i1.width, i1.height) != (i2.width, i2.height) {
        return Err(Error::Dimensions(format!(
            "displacement between {}x{} and {}x{}",
            i1.width, i1.height, i2.width, i2.height
        )));
    }
    if i1.data == i2.data {
        return Ok(Displacement::Pixels(0.0));
    }
    let (f1, f2) = rayon::join(|| extract_features(i1, cfg), || extract_features(i2, cfg));
    displacement_from_features(i1, &f1?, i2, &f2?, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn probe_magnitude_of_translation() {
        let cfg = VisionConfig::default();
        let t = AffineTransform::translation(3.0, 4.0);
        assert!((affine_magnitude(&t, 100, 80, &cfg) - 5.0).abs() < 1e-12);
        let grid = VisionConfig { aggregation: Aggregation::Grid, ..cfg };
        assert!((affine_magnitude(&t, 100, 80, &grid) - 5.0).abs() < 1e-12);
        assert_eq!(affine_magnitude(&AffineTransform::IDENTITY, 10, 10, &cfg), 0.0);
    }

    #[test]
    fn identical_images_score_zero() {
        let img = GrayFrame::new(40, 40, (0..1600).map(|i| (i % 7) as f64 / 7.0).collect()).unwrap();
        assert_eq!(
            displacement_score(&img, &img, &VisionConfig::default()).unwrap(),
            Displacement::Pixels(0.0)
        );
    }

    #[test]
    fn featureless_but_different_is_unmeasurable() {
        let a = GrayFrame::new(40, 40, vec![0.2; 1600]).unwrap();
        let b = GrayFrame::new(40, 40, vec![0.6; 1600]).unwrap();
        let c = GrayFrame::new(40, 40, vec![0.2 + 0.5 / 255.0; 1600]).unwrap();
        let cfg = VisionConfig::default();
        assert_eq!(displacement_score(&a, &b, &cfg).unwrap(), Displacement::Unmeasurable);
        assert_eq!(displacement_score(&a, &c, &cfg).unwrap(), Displacement::Pixels(0.0));
    }

    #[test]
    fn dimension_mismatch() {
        let a = GrayFrame::new(40, 40, vec![0.2; 1600]).unwrap();
        let b = GrayFrame::new(40, 41, vec![0.2; 1640]).unwrap();
        assert!(displacement_score(&a, &b, &VisionConfig::default()).is_err());
    }
}
