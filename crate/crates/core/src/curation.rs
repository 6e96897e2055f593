//! Shot detection, fixed-length partitioning and the filter cascade that
//! decides which clips are kept for training.
//!
//! Information windows share endpoints: window `k` measures the motion
//! between frames `k w` and `(k + 1) w`, so a clip of `n` frames has
//! `floor((n - 1) / w)` windows and a constant pan of `v` px/frame scores
//! `v w`. The tail after the last full window is ignored.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::{to_grayscale, GrayFrame, VideoClip};
use crate::vision::{displacement_from_features, extract_features, Displacement, VisionConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CurationConfig {
    pub min_len: usize,
    pub max_len: usize,
    pub w_small: usize,
    pub w_large: usize,
    pub theta_small: f64,
    pub theta_large: f64,
    pub luma_threshold: f64,
    pub face_ratio: f64,
    pub shot_adaptive_ratio: f64,
    pub shot_min_content: f64,
}

impl Default for CurationConfig {
    fn default() -> Self {
        Self {
            min_len: 81,
            max_len: 100,
            w_small: 6,
            w_large: 24,
            theta_small: 1.0,
            theta_large: 2.0,
            luma_threshold: 30.0 / 255.0,
            face_ratio: 0.15,
            shot_adaptive_ratio: 3.0,
            shot_min_content: 15.0 / 255.0,
        }
    }
}

impl CurationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0 < self.min_len && self.min_len <= self.max_len) {
            return Err(Error::Config("curation needs 0 < min_len <= max_len".into()));
        }
        if !(0 < self.w_small && self.w_small < self.w_large) {
            return Err(Error::Config("curation needs 0 < w_small < w_large".into()));
        }
        let positive = [
            self.theta_small,
            self.theta_large,
            self.luma_threshold,
            self.face_ratio,
            self.shot_adaptive_ratio,
            self.shot_min_content,
        ];
        if positive.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::Config("curation thresholds must be positive".into()));
        }
        Ok(())
    }
}

/// Floor on the rolling mean, keeps near-static footage from producing
/// infinite ratios.
const ROLLING_FLOOR: f64 = 1e-4;
const NEIGHBORHOOD: usize = 2;

/// Mean absolute grayscale difference between consecutive frames;
/// entry `t` compares frames `t - 1` and `t` (entry 0 is zero).
pub fn content_scores(clip: &VideoClip) -> Result<Vec<f64>> {
    let gray: Vec<GrayFrame> = clip.frames().par_iter().map(to_grayscale).collect();
    let mut s = vec![0.0];
    for pair in gray.windows(2) {
        s.push(pair[0].mean_abs_diff(&pair[1])?);
    }
    Ok(s)
}

/// Indices of frames that start a new shot.
pub fn detect_shots(clip: &VideoClip, cfg: &CurationConfig) -> Result<Vec<usize>> {
    if clip.len() < 3 {
        return Err(Error::InvalidValue(format!(
            "shot detection needs at least 3 frames, got {}",
            clip.len()
        )));
    }
    let s = content_scores(clip)?;
    let n = s.len();
    let mut candidates: Vec<usize> = (1..n)
        .filter(|&t| {
            let lo = t.saturating_sub(NEIGHBORHOOD).max(1);
            let hi = (t + NEIGHBORHOOD).min(n - 1);
            let neighbors: Vec<f64> = (lo..=hi).filter(|&i| i != t).map(|i| s[i]).collect();
            let rolling = if neighbors.is_empty() {
                0.0
            } else {
                neighbors.iter().sum::<f64>() / neighbors.len() as f64
            };
            s[t] > cfg.shot_adaptive_ratio * rolling.max(ROLLING_FLOOR) && s[t] > cfg.shot_min_content
        })
        .collect();
    // strongest first; a boundary closer than 2 frames to a stronger one goes
    candidates.sort_by(|&a, &b| s[b].total_cmp(&s[a]).then(a.cmp(&b)));
    let mut kept: Vec<usize> = Vec::new();
    for t in candidates {
        if kept.iter().all(|&k| k.abs_diff(t) >= 2) {
            kept.push(t);
        }
    }
    kept.sort_unstable();
    Ok(kept)
}

/// Cuts `clip` at `boundaries` into `(start, end)` ranges.
pub fn shot_ranges(len: usize, boundaries: &[usize]) -> Vec<(usize, usize)> {
    let mut edges = vec![0];
    edges.extend(boundaries.iter().copied().filter(|&b| b > 0 && b < len));
    edges.push(len);
    edges.windows(2).map(|e| (e[0], e[1])).collect()
}

/// Greedy `max_len` chunks from the start; a final chunk shorter than
/// `min_len` is dropped. Returns `(start, end)` ranges.
pub fn partition_ranges(len: usize, cfg: &CurationConfig) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = 0;
    while start < len {
        let end = (start + cfg.max_len).min(len);
        if end - start >= cfg.min_len {
            out.push((start, end));
        }
        start = end;
    }
    out
}

pub fn partition_clips(shot: &VideoClip, cfg: &CurationConfig) -> Result<Vec<VideoClip>> {
    partition_ranges(shot.len(), cfg)
        .into_iter()
        .map(|(a, b)| shot.slice(a, b))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InfoScore {
    pub score: f64,
    pub windows: usize,
    pub measured: usize,
    /// Every window was unmeasurable, so `score` is 0 by convention.
    pub unmeasurable: bool,
}

fn window_endpoints(len: usize, w: usize) -> Result<Vec<(usize, usize)>> {
    if w == 0 || len <= w {
        return Err(Error::InvalidValue(format!(
            "information window {w} needs a clip longer than {w} frames, got {len}"
        )));
    }
    Ok((0..(len - 1) / w).map(|k| (k * w, (k + 1) * w)).collect())
}

/// Information scores for several window sizes, sharing feature extraction.
pub fn info_scores(clip: &VideoClip, windows: &[usize], vcfg: &VisionConfig) -> Result<Vec<InfoScore>> {
    let per_window: Vec<Vec<(usize, usize)>> = windows
        .iter()
        .map(|&w| window_endpoints(clip.len(), w))
        .collect::<Result<_>>()?;
    let needed: Vec<usize> = {
        let mut v: Vec<usize> = per_window.iter().flatten().flat_map(|&(a, b)| [a, b]).collect();
        v.sort_unstable();
        v.dedup();
        v
    };
    let features: BTreeMap<usize, _> = needed
        .par_iter()
        .map(|&i| {
            let g = to_grayscale(&clip.frames()[i]);
            let f = extract_features(&g, vcfg)?;
            Ok((i, (g, f)))
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .collect();
    per_window
        .iter()
        .map(|ends| {
            let scores = ends
                .par_iter()
                .map(|&(a, b)| {
                    let (ga, fa) = &features[&a];
                    let (gb, fb) = &features[&b];
                    displacement_from_features(ga, fa, gb, fb, vcfg)
                })
                .collect::<Result<Vec<Displacement>>>()?;
            let measured: Vec<f64> = scores.iter().filter_map(|d| d.pixels()).collect();
            Ok(InfoScore {
                score: if measured.is_empty() {
                    0.0
                } else {
                    measured.iter().sum::<f64>() / measured.len() as f64
                },
                windows: scores.len(),
                measured: measured.len(),
                unmeasurable: measured.is_empty(),
            })
        })
        .collect()
}

/// Mean displacement over non-overlapping windows of `w` frames.
pub fn info_score(clip: &VideoClip, w: usize, vcfg: &VisionConfig) -> Result<InfoScore> {
    Ok(info_scores(clip, &[w], vcfg)?.remove(0))
}

/// Per-frame optional face box `[x, y, w, h]` in pixels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FaceAnnotation {
    pub boxes: Vec<Option<[f64; 4]>>,
}

impl FaceAnnotation {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self, width: usize, height: usize) -> Result<()> {
        for (i, b) in self.boxes.iter().enumerate() {
            if let Some([x, y, w, h]) = *b {
                let inside = x >= 0.0 && y >= 0.0 && w >= 0.0 && h >= 0.0;
                if !inside || x + w > width as f64 || y + h > height as f64 {
                    return Err(Error::InvalidValue(format!(
                        "face box {:?} at frame {i} leaves the {width}x{height} frame",
                        [x, y, w, h]
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn slice(&self, start: usize, end: usize) -> FaceAnnotation {
        FaceAnnotation {
            boxes: (start..end).map(|i| self.boxes.get(i).copied().flatten()).collect(),
        }
    }

    /// Largest box area as a fraction of the frame, `None` if no frame is
    /// annotated.
    pub fn max_ratio(&self, width: usize, height: usize) -> Option<f64> {
        let area = (width * height) as f64;
        self.boxes
            .iter()
            .flatten()
            .map(|b| b[2] * b[3] / area)
            .fold(None, |m: Option<f64>, r| Some(m.map_or(r, |m| m.max(r))))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Reason {
    TooShort,
    LowInfo,
    FaceCloseup,
    TooDark,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerdictScores {
    pub info_small: Option<f64>,
    pub info_large: Option<f64>,
    pub luma: f64,
    pub max_face_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClipVerdict {
    pub kept: bool,
    pub reasons: Vec<Reason>,
    pub scores: VerdictScores,
}

/// Mean grayscale over all frames.
pub fn mean_luma(clip: &VideoClip) -> f64 {
    // collect first: a parallel float sum would depend on the split
    let means: Vec<f64> = clip.frames().par_iter().map(|f| to_grayscale(f).mean()).collect();
    means.iter().sum::<f64>() / clip.len() as f64
}

/// Runs every filter stage and records all reasons that apply.
///
/// An information score that cannot be computed (clip not longer than the
/// window) counts as below its threshold.
pub fn filter_clip(
    clip: &VideoClip,
    faces: Option<&FaceAnnotation>,
    cfg: &CurationConfig,
    vcfg: &VisionConfig,
) -> Result<ClipVerdict> {
    let mut reasons = Vec::new();
    if clip.len() < cfg.min_len {
        reasons.push(Reason::TooShort);
    }

    let windows: Vec<usize> = [cfg.w_small, cfg.w_large].into_iter().filter(|&w| clip.len() > w).collect();
    let scores = info_scores(clip, &windows, vcfg)?;
    let lookup = |w: usize| windows.iter().position(|&x| x == w).map(|i| scores[i].score);
    let (info_small, info_large) = (lookup(cfg.w_small), lookup(cfg.w_large));
    let below = |s: Option<f64>, theta: f64| s.is_none_or(|s| s < theta);
    if below(info_small, cfg.theta_small) && below(info_large, cfg.theta_large) {
        reasons.push(Reason::LowInfo);
    }

    let (w, h) = clip.dims();
    let max_face_ratio = faces.and_then(|f| f.max_ratio(w, h));
    if max_face_ratio.is_some_and(|r| r > cfg.face_ratio) {
        reasons.push(Reason::FaceCloseup);
    }

    let luma = mean_luma(clip);
    if luma < cfg.luma_threshold {
        reasons.push(Reason::TooDark);
    }

    Ok(ClipVerdict {
        kept: reasons.is_empty(),
        reasons,
        scores: VerdictScores {
            info_small,
            info_large,
            luma,
            max_face_ratio,
        },
    })
}

/// One partition of one shot of a source video, with its verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CuratedClip {
    pub shot: usize,
    pub start: usize,
    pub end: usize,
    pub verdict: ClipVerdict,
}

/// Detect shots, partition each, filter every partition. A shot too short
/// to yield any partition is reported once with `too-short` and no
/// information scores.
pub fn curate_video(
    video: &VideoClip,
    faces: Option<&FaceAnnotation>,
    cfg: &CurationConfig,
    vcfg: &VisionConfig,
) -> Result<Vec<CuratedClip>> {
    let (w, h) = video.dims();
    if let Some(f) = faces {
        f.validate(w, h)?;
    }
    let boundaries = detect_shots(video, cfg)?;
    let mut jobs = Vec::new();
    for (shot, (s0, s1)) in shot_ranges(video.len(), &boundaries).into_iter().enumerate() {
        let parts = partition_ranges(s1 - s0, cfg);
        if parts.is_empty() {
            jobs.push((shot, s0, s1, false));
        }
        jobs.extend(parts.into_iter().map(|(a, b)| (shot, s0 + a, s0 + b, true)));
    }
    jobs.into_par_iter()
        .map(|(shot, start, end, full)| {
            let verdict = if full {
                let clip = video.slice(start, end)?;
                let ann = faces.map(|f| f.slice(start, end));
                filter_clip(&clip, ann.as_ref(), cfg, vcfg)?
            } else {
                let clip = video.slice(start, end)?;
                ClipVerdict {
                    kept: false,
                    reasons: vec![Reason::TooShort],
                    scores: VerdictScores {
                        info_small: None,
                        info_large: None,
                        luma: mean_luma(&clip),
                        max_face_ratio: faces.and_then(|f| f.slice(start, end).max_ratio(w, h)),
                    },
                }
            };
            Ok(CuratedClip {
                shot,
                start,
                end,
                verdict,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::Frame;

    fn gray_clip(values: &[f64]) -> VideoClip {
        VideoClip::new(
            values.iter().map(|&v| Frame::filled(40, 40, [v; 3]).unwrap()).collect(),
            24.0,
        )
        .unwrap()
    }

    #[test]
    fn partition_examples() {
        let cfg = CurationConfig::default();
        let lens = |n| partition_ranges(n, &cfg).iter().map(|(a, b)| b - a).collect::<Vec<_>>();
        assert_eq!(lens(200), vec![100, 100]);
        assert_eq!(lens(190), vec![100, 90]);
        assert_eq!(lens(150), vec![100]);
        assert_eq!(lens(80), Vec::<usize>::new());
        assert_eq!(lens(0), Vec::<usize>::new());
    }

    #[test]
    fn constant_clip_has_no_shots() {
        let clip = gray_clip(&[0.3; 20]);
        assert!(detect_shots(&clip, &CurationConfig::default()).unwrap().is_empty());
    }

    #[test]
    fn hard_cut_is_found_exactly() {
        let v: Vec<f64> = (0..100).map(|t| if t < 50 { 0.0 } else { 1.0 }).collect();
        assert_eq!(detect_shots(&gray_clip(&v), &CurationConfig::default()).unwrap(), vec![50]);
    }

    #[test]
    fn linear_fade_has_no_shots() {
        let v: Vec<f64> = (0..100).map(|t| t as f64 / 99.0).collect();
        assert!(detect_shots(&gray_clip(&v), &CurationConfig::default()).unwrap().is_empty());
    }

    #[test]
    fn split_jump_reports_one_boundary() {
        // a two-step jump reports only its larger half
        let mut v = vec![0.0; 30];
        for (t, x) in v.iter_mut().enumerate() {
            *x = if t < 15 { 0.0 } else if t == 15 { 0.4 } else { 1.0 };
        }
        assert_eq!(detect_shots(&gray_clip(&v), &CurationConfig::default()).unwrap(), vec![16]);
    }

    #[test]
    fn too_few_frames() {
        assert!(detect_shots(&gray_clip(&[0.0, 1.0]), &CurationConfig::default()).is_err());
    }

    #[test]
    fn window_layout() {
        assert_eq!(window_endpoints(13, 6).unwrap(), vec![(0, 6), (6, 12)]);
        assert_eq!(window_endpoints(12, 6).unwrap(), vec![(0, 6)]);
        assert!(window_endpoints(6, 6).is_err());
    }

    #[test]
    fn shot_ranges_cover_the_clip() {
        assert_eq!(shot_ranges(10, &[]), vec![(0, 10)]);
        assert_eq!(shot_ranges(10, &[3, 7]), vec![(0, 3), (3, 7), (7, 10)]);
    }

    #[test]
    fn face_ratio_and_validation() {
        let f = FaceAnnotation {
            boxes: vec![None, Some([0.0, 0.0, 4.0, 4.0]), Some([1.0, 1.0, 2.0, 2.0])],
        };
        assert_eq!(f.max_ratio(8, 8), Some(0.25));
        assert!(f.validate(8, 8).is_ok());
        assert!(f.validate(4, 3).is_err());
        assert_eq!(FaceAnnotation { boxes: vec![None] }.max_ratio(8, 8), None);
        let parsed: FaceAnnotation = serde_json::from_str("[null, [0, 0, 4, 4]]").unwrap();
        assert_eq!(parsed.boxes[1], Some([0.0, 0.0, 4.0, 4.0]));
    }

    #[test]
    fn short_dark_clip_collects_every_reason() {
        let clip = gray_clip(&[0.01; 10]);
        let v = filter_clip(&clip, None, &CurationConfig::default(), &VisionConfig::default()).unwrap();
        assert!(!v.kept);
        assert_eq!(v.reasons, vec![Reason::TooShort, Reason::LowInfo, Reason::TooDark]);
        assert_eq!(v.scores.info_large, None);
    }
}
