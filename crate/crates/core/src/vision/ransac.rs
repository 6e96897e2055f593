use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

pub type Point = [f64; 2];

/// 2x3 affine map `(a, b, tx; c, d, ty)` in pixel units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineTransform {
    pub m: [[f64; 3]; 2],
}

impl AffineTransform {
    pub const IDENTITY: AffineTransform = AffineTransform {
        m: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
    };

    pub fn translation(tx: f64, ty: f64) -> Self {
        Self {
            m: [[1.0, 0.0, tx], [0.0, 1.0, ty]],
        }
    }

    /// Rotation by `angle` radians about `(cx, cy)`.
    pub fn rotation_about(angle: f64, cx: f64, cy: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self {
            m: [
                [c, -s, cx - c * cx + s * cy],
                [s, c, cy - s * cx - c * cy],
            ],
        }
    }

    pub fn apply(&self, p: Point) -> Point {
        let [r0, r1] = self.m;
        [
            r0[0] * p[0] + r0[1] * p[1] + r0[2],
            r1[0] * p[0] + r1[1] * p[1] + r1[2],
        ]
    }

    pub fn is_finite(&self) -> bool {
        self.m.iter().flatten().all(|v| v.is_finite())
    }

    pub fn max_abs_diff(&self, other: &AffineTransform) -> f64 {
        self.m
            .iter()
            .flatten()
            .zip(other.m.iter().flatten())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RansacConfig {
    pub iterations: usize,
    /// Reprojection error below which a pair counts as an inlier, pixels.
    pub inlier_tol: f64,
    pub seed: u64,
}

impl Default for RansacConfig {
    fn default() -> Self {
        Self {
            iterations: 1000,
            inlier_tol: 2.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RansacFit {
    pub transform: AffineTransform,
    pub inliers: Vec<bool>,
    pub inlier_count: usize,
    /// Inlier count of each sampled model, zero for degenerate samples.
    pub sampled_counts: Vec<usize>,
}

const COLLINEAR_AREA: f64 = 1e-6;

fn twice_area(a: Point, b: Point, c: Point) -> f64 {
    ((b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])).abs()
}

/// Solves the 6-dof affine from `rows` of `[x, y, 1]` and targets by least
/// squares (exact for three non-collinear points).
fn solve_affine(pairs: &[(Point, Point)], idx: impl Iterator<Item = usize> + Clone) -> Option<AffineTransform> {
    let mut ata = Matrix3::<f64>::zeros();
    let mut atx = Vector3::<f64>::zeros();
    let mut aty = Vector3::<f64>::zeros();
    // centre the sources for conditioning
    let n = idx.clone().count() as f64;
    let (mx, my) = idx
        .clone()
        .fold((0.0, 0.0), |(sx, sy), i| (sx + pairs[i].0[0], sy + pairs[i].0[1]));
    let (mx, my) = (mx / n, my / n);
    for i in idx {
        let (p, q) = pairs[i];
        let row = Vector3::new(p[0] - mx, p[1] - my, 1.0);
        ata += row * row.transpose();
        atx += row * q[0];
        aty += row * q[1];
    }
    let inv = ata.try_inverse()?;
    let (u, v) = (inv * atx, inv * aty);
    let t = AffineTransform {
        m: [
            [u[0], u[1], u[2] - u[0] * mx - u[1] * my],
            [v[0], v[1], v[2] - v[0] * mx - v[1] * my],
        ],
    };
    t.is_finite().then_some(t)
}

fn inlier_mask(pairs: &[(Point, Point)], t: &AffineTransform, tol: f64) -> Vec<bool> {
    pairs
        .iter()
        .map(|&(p, q)| {
            let r = t.apply(p);
            ((r[0] - q[0]).powi(2) + (r[1] - q[1]).powi(2)).sqrt() < tol
        })
        .collect()
}

/// Robust affine fit of `pairs` (source, destination). Each iteration draws
/// from its own counter-keyed stream, so the result does not depend on the
/// thread count.
pub fn estimate_affine_ransac(pairs: &[(Point, Point)], cfg: &RansacConfig) -> Result<RansacFit> {
    if pairs.len() < 3 {
        return Err(Error::Estimation(format!(
            "affine fit needs at least 3 point pairs, got {}",
            pairs.len()
        )));
    }
    let models: Vec<Option<(AffineTransform, usize)>> = (0..cfg.iterations)
        .into_par_iter()
        .map(|it| {
            let mut r = rng::stream(cfg.seed, &[it as u64]);
            let s = rand::seq::index::sample(&mut r, pairs.len(), 3).into_vec();
            if twice_area(pairs[s[0]].0, pairs[s[1]].0, pairs[s[2]].0) < COLLINEAR_AREA {
                return None;
            }
            let t = solve_affine(pairs, s.into_iter())?;
            let count = inlier_mask(pairs, &t, cfg.inlier_tol).iter().filter(|&&b| b).count();
            Some((t, count))
        })
        .collect();

    let sampled_counts: Vec<usize> = models.iter().map(|m| m.map_or(0, |(_, c)| c)).collect();
    // first maximum wins
    let best = models
        .iter()
        .flatten()
        .fold(None::<&(AffineTransform, usize)>, |acc, m| match acc {
            Some(a) if a.1 >= m.1 => Some(a),
            _ => Some(m),
        })
        .ok_or_else(|| Error::Estimation("every RANSAC sample was collinear".into()))?;

    let (mut transform, mut inlier_count) = *best;
    let mut inliers = inlier_mask(pairs, &transform, cfg.inlier_tol);
    if let Some(refit) = solve_affine(pairs, (0..pairs.len()).filter(|&i| inliers[i])) {
        let mask = inlier_mask(pairs, &refit, cfg.inlier_tol);
        let count = mask.iter().filter(|&&b| b).count();
        if count >= inlier_count {
            transform = refit;
            inliers = mask;
            inlier_count = count;
        }
    }
    Ok(RansacFit {
        transform,
        inliers,
        inlier_count,
        sampled_counts,
    })
}
