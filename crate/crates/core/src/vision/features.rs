//! Oriented FAST corners with steered binary descriptors.
//!
//! Corners come from the FAST-9 segment test on a 16-pixel Bresenham
//! circle and are thinned by 3x3 non-maximum suppression on the FAST score
//! (summed contrast of the ring pixels beyond the threshold). Survivors are
//! ranked by the Harris response and the strongest are kept. Orientation is the intensity
//! centroid angle over a radius-15 disk. The 256-bit descriptor compares
//! pairs of a fixed sampling pattern, rotated by the keypoint orientation,
//! on a binomially smoothed copy of the image.

use std::sync::OnceLock;

use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::imaging::GrayFrame;
use crate::rng;

/// Seed of the descriptor sampling pattern. Changing it invalidates every
/// stored descriptor.
pub const PATTERN_SEED: u64 = 0x0_0B5E_55ED;
/// Radius of the orientation patch.
pub const PATCH_RADIUS: i64 = 15;
/// Sampling-pattern points stay inside this radius so steering never
/// leaves the patch.
const PATTERN_RADIUS: f64 = 13.0;
/// Keypoints keep this distance from the image border.
pub const BORDER: usize = 16;
pub const MIN_IMAGE_SIZE: usize = 32;

const CIRCLE: [(i64, i64); 16] = [
    (0, -3),
    (1, -3),
    (2, -2),
    (3, -1),
    (3, 0),
    (3, 1),
    (2, 2),
    (1, 3),
    (0, 3),
    (-1, 3),
    (-2, 2),
    (-3, 1),
    (-3, 0),
    (-3, -1),
    (-2, -2),
    (-1, -3),
];
const ARC: usize = 9;
const HARRIS_K: f64 = 0.04;
const HARRIS_HALF_BLOCK: i64 = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Keypoint {
    pub x: f64,
    pub y: f64,
    /// Harris corner response.
    pub response: f64,
    /// Intensity-centroid angle, radians.
    pub orientation: f64,
}

/// 256-bit binary descriptor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Descriptor(pub [u64; 4]);

impl Descriptor {
    pub fn hamming(&self, other: &Descriptor) -> u32 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a ^ b).count_ones())
            .sum()
    }

    pub fn bit(&self, i: usize) -> bool {
        self.0[i / 64] >> (i % 64) & 1 == 1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Features {
    pub keypoints: Vec<Keypoint>,
    pub descriptors: Vec<Descriptor>,
}

impl Features {
    pub fn len(&self) -> usize {
        self.keypoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keypoints.is_empty()
    }
}

type Pattern = Vec<[(f64, f64); 2]>;

/// The 256 test pairs, drawn once from an isotropic Gaussian (sigma = 31/5)
/// restricted to the pattern disk.
fn pattern() -> &'static Pattern {
    static PATTERN: OnceLock<Pattern> = OnceLock::new();
    PATTERN.get_or_init(|| {
        let mut rng = rng::stream(PATTERN_SEED, &[]);
        let normal = Normal::new(0.0, 31.0 / 5.0).expect("valid sigma");
        let mut point = || loop {
            let (x, y): (f64, f64) = (normal.sample(&mut rng), normal.sample(&mut rng));
            if x * x + y * y <= PATTERN_RADIUS * PATTERN_RADIUS {
                return (x, y);
            }
        };
        (0..256).map(|_| [point(), point()]).collect()
    })
}

/// FAST-9 score at `(x, y)`: zero unless 9 contiguous ring pixels are all
/// brighter than `p + t` or all darker than `p - t`, otherwise the larger of
/// the summed brighter and darker excess contrasts.
fn fast_score(img: &GrayFrame, x: usize, y: usize, threshold: f64) -> f64 {
    let p = img.get(x, y);
    let ring = CIRCLE.map(|(dx, dy)| img.get((x as i64 + dx) as usize, (y as i64 + dy) as usize));
    let brighter = |v: f64| v > p + threshold;
    let darker = |v: f64| v < p - threshold;
    // 9 contiguous pixels always include at least two compass points
    let compass = [ring[0], ring[4], ring[8], ring[12]];
    if compass.iter().filter(|&&v| brighter(v)).count() < 2
        && compass.iter().filter(|&&v| darker(v)).count() < 2
    {
        return 0.0;
    }
    let longest_run = |test: &dyn Fn(f64) -> bool| {
        let mut best = 0;
        let mut run = 0;
        for i in 0..32 {
            if test(ring[i % 16]) {
                run += 1;
                best = best.max(run);
            } else {
                run = 0;
            }
        }
        best.min(16)
    };
    if longest_run(&brighter) < ARC && longest_run(&darker) < ARC {
        return 0.0;
    }
    let bright: f64 = ring.iter().filter(|&&v| brighter(v)).map(|v| v - p - threshold).sum();
    let dark: f64 = ring.iter().filter(|&&v| darker(v)).map(|v| p - threshold - v).sum();
    bright.max(dark)
}

/// Sobel gradients at `(x, y)`.
#[inline]
fn sobel(img: &GrayFrame, x: usize, y: usize) -> (f64, f64) {
    let g = |dx: i64, dy: i64| img.get((x as i64 + dx) as usize, (y as i64 + dy) as usize);
    let gx = (g(1, -1) + 2.0 * g(1, 0) + g(1, 1)) - (g(-1, -1) + 2.0 * g(-1, 0) + g(-1, 1));
    let gy = (g(-1, 1) + 2.0 * g(0, 1) + g(1, 1)) - (g(-1, -1) + 2.0 * g(0, -1) + g(1, -1));
    (gx, gy)
}

/// Harris response over a 7x7 block of Sobel gradients.
pub fn harris_response(img: &GrayFrame, x: usize, y: usize) -> f64 {
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for dy in -HARRIS_HALF_BLOCK..=HARRIS_HALF_BLOCK {
        for dx in -HARRIS_HALF_BLOCK..=HARRIS_HALF_BLOCK {
            let (gx, gy) = sobel(img, (x as i64 + dx) as usize, (y as i64 + dy) as usize);
            sxx += gx * gx;
            syy += gy * gy;
            sxy += gx * gy;
        }
    }
    sxx * syy - sxy * sxy - HARRIS_K * (sxx + syy) * (sxx + syy)
}

fn intensity_centroid_angle(img: &GrayFrame, x: usize, y: usize) -> f64 {
    let (mut m10, mut m01) = (0.0, 0.0);
    let r2 = PATCH_RADIUS * PATCH_RADIUS;
    for dy in -PATCH_RADIUS..=PATCH_RADIUS {
        for dx in -PATCH_RADIUS..=PATCH_RADIUS {
            if dx * dx + dy * dy > r2 {
                continue;
            }
            let v = img.get((x as i64 + dx) as usize, (y as i64 + dy) as usize);
            m10 += dx as f64 * v;
            m01 += dy as f64 * v;
        }
    }
    m01.atan2(m10)
}

/// Separable [1 4 6 4 1] / 16 blur with edge replication.
fn binomial_blur(img: &GrayFrame) -> GrayFrame {
    const K: [f64; 5] = [1.0 / 16.0, 4.0 / 16.0, 6.0 / 16.0, 4.0 / 16.0, 1.0 / 16.0];
    let (w, h) = (img.width, img.height);
    let clampi = |v: i64, n: usize| v.clamp(0, n as i64 - 1) as usize;
    let mut tmp = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            tmp[y * w + x] = (0..5)
                .map(|k| K[k] * img.data[y * w + clampi(x as i64 + k as i64 - 2, w)])
                .sum();
        }
    }
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            out[y * w + x] = (0..5)
                .map(|k| K[k] * tmp[clampi(y as i64 + k as i64 - 2, h) * w + x])
                .sum();
        }
    }
    GrayFrame {
        width: w,
        height: h,
        data: out,
    }
}

fn describe(smoothed: &GrayFrame, kp: &Keypoint) -> Descriptor {
    let (s, c) = kp.orientation.sin_cos();
    let (cx, cy) = (kp.x.round() as i64, kp.y.round() as i64);
    let sample = |(px, py): (f64, f64)| {
        let rx = (c * px - s * py).round() as i64;
        let ry = (s * px + c * py).round() as i64;
        smoothed.get((cx + rx) as usize, (cy + ry) as usize)
    };
    let mut bits = [0u64; 4];
    for (i, [a, b]) in pattern().iter().enumerate() {
        if sample(*a) < sample(*b) {
            bits[i / 64] |= 1 << (i % 64);
        }
    }
    Descriptor(bits)
}

/// Detects up to `max_features` keypoints (strongest Harris response first)
/// and computes their descriptors.
pub fn detect_and_describe(img: &GrayFrame, max_features: usize, fast_threshold: f64) -> Result<Features> {
    let (w, h) = (img.width, img.height);
    if w < MIN_IMAGE_SIZE || h < MIN_IMAGE_SIZE {
        return Err(Error::Dimensions(format!(
            "feature detection needs at least {MIN_IMAGE_SIZE}x{MIN_IMAGE_SIZE}, got {w}x{h}"
        )));
    }
    let rows = BORDER..h - BORDER;
    // FAST corners with their scores, row-parallel, row order kept.
    let candidates: Vec<(usize, usize, f64)> = rows
        .into_par_iter()
        .flat_map_iter(|y| {
            (BORDER..w - BORDER)
                .map(move |x| (x, y, fast_score(img, x, y, fast_threshold)))
                .filter(|c| c.2 > 0.0)
        })
        .collect();

    let mut score = vec![0.0; w * h];
    for &(x, y, s) in &candidates {
        score[y * w + x] = s;
    }
    // Strict maximum over the 3x3 neighbourhood; ties resolve toward the
    // earlier raster position.
    let mut kept: Vec<(usize, usize, f64)> = candidates
        .iter()
        .filter(|&&(x, y, s)| {
            let here = y * w + x;
            (-1i64..=1).all(|dy| {
                (-1i64..=1).all(|dx| {
                    let n = ((y as i64 + dy) as usize) * w + (x as i64 + dx) as usize;
                    n == here || score[n] < s || (score[n] == s && n > here)
                })
            })
        })
        .map(|&(x, y, _)| (x, y, harris_response(img, x, y)))
        .collect();
    kept.sort_by(|a, b| b.2.total_cmp(&a.2).then((a.1, a.0).cmp(&(b.1, b.0))));
    kept.truncate(max_features);

    let smoothed = binomial_blur(img);
    let keypoints: Vec<Keypoint> = kept
        .iter()
        .map(|&(x, y, r)| Keypoint {
                x: x as f64,
                y: y as f64,
                response: r,
                orientation: intensity_centroid_angle(img, x, y),
        })
        .collect();
    let descriptors = keypoints.iter().map(|kp| describe(&smoothed, kp)).collect();
    Ok(Features {
        keypoints,
        descriptors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square_image() -> GrayFrame {
        let (w, h) = (64, 64);
        let data = (0..w * h)
            .map(|i| {
                let (x, y) = (i % w, i / w);
                if (20..44).contains(&x) && (20..44).contains(&y) {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        GrayFrame::new(w, h, data).unwrap()
    }

    #[test]
    fn constant_image_has_no_corners() {
        let img = GrayFrame::new(48, 40, vec![0.4; 48 * 40]).unwrap();
        assert!(detect_and_describe(&img, 100, 0.05).unwrap().is_empty());
    }

    #[test]
    fn too_small_is_an_error() {
        let img = GrayFrame::new(31, 40, vec![0.0; 31 * 40]).unwrap();
        assert!(detect_and_describe(&img, 10, 0.05).is_err());
    }

    #[test]
    fn square_corners_are_strongest() {
        let f = detect_and_describe(&square_image(), 4, 0.1).unwrap();
        assert_eq!(f.len(), 4);
        let expected = [(20.0, 20.0), (43.0, 20.0), (20.0, 43.0), (43.0, 43.0)];
        for (ex, ey) in expected {
            assert!(
                f.keypoints.iter().any(|k| (k.x - ex).abs() <= 1.0 && (k.y - ey).abs() <= 1.0),
                "no keypoint near ({ex}, {ey}): {:?}",
                f.keypoints
            );
        }
    }

    #[test]
    fn detection_is_deterministic() {
        let img = square_image();
        assert_eq!(
            detect_and_describe(&img, 50, 0.1).unwrap(),
            detect_and_describe(&img, 50, 0.1).unwrap()
        );
    }

    #[test]
    fn pattern_is_fixed_and_inside_patch() {
        let p = pattern();
        assert_eq!(p.len(), 256);
        assert!(p.iter().flatten().all(|(x, y)| x * x + y * y <= PATTERN_RADIUS * PATTERN_RADIUS));
        assert!(p.iter().any(|[a, b]| a != b));
    }

    #[test]
    fn hamming_distance() {
        let a = Descriptor([0, 0, 0, 0]);
        let b = Descriptor([0b1011, 0, 1 << 63, u64::MAX]);
        assert_eq!(a.hamming(&b), 3 + 1 + 64);
        assert!(b.bit(0) && !b.bit(2) && b.bit(191));
    }
}
