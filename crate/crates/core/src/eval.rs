//! Per-effect accuracy: Pearson correlation against a single-effect
//! pseudo ground truth rendered from the source clip.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::{DisparityMap, Frame, VideoClip};
use crate::pairs::{generate_target, EffectConfigs, EffectFamily, PairRecord};

/// Pearson r of two frames over all channels, `None` when either side has
/// zero variance (identical frames score exactly 1).
pub fn pearson_frame(a: &Frame, b: &Frame) -> Result<Option<f64>> {
    if a.dims() != b.dims() {
        return Err(Error::Dimensions(format!(
            "cannot correlate {:?} with {:?}",
            a.dims(),
            b.dims()
        )));
    }
    if a.data() == b.data() {
        return Ok(Some(1.0));
    }
    let constant = |d: &[f64]| d.iter().all(|&v| v == d[0]);
    if constant(a.data()) || constant(b.data()) {
        return Ok(None);
    }
    let (ma, mb) = (a.mean(), b.mean());
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.data().iter().zip(b.data()) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    Ok(Some((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0)))
}

/// Mean per-frame Pearson r; `None` if any frame is undefined.
pub fn pearson_frames(a: &VideoClip, b: &VideoClip) -> Result<Option<f64>> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(format!(
            "cannot correlate {} frames with {}",
            a.len(),
            b.len()
        )));
    }
    let per_frame = a
        .frames()
        .par_iter()
        .zip(b.frames())
        .map(|(x, y)| pearson_frame(x, y))
        .collect::<Result<Vec<_>>>()?;
    let defined: Option<Vec<f64>> = per_frame.into_iter().collect();
    Ok(defined.map(|v| v.iter().sum::<f64>() / v.len() as f64))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum EffectScore {
    Scored { value: f64 },
    /// The record leaves this family neutral on every frame.
    NotExercised,
    Undefined { reason: String },
}

impl EffectScore {
    pub fn value(&self) -> Option<f64> {
        match self {
            EffectScore::Scored { value } => Some(*value),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectScores {
    pub bokeh: EffectScore,
    pub zoom: EffectScore,
    pub exposure: EffectScore,
    pub color: EffectScore,
}

impl EffectScores {
    pub fn get(&self, family: EffectFamily) -> &EffectScore {
        match family {
            EffectFamily::Bokeh => &self.bokeh,
            EffectFamily::Zoom => &self.zoom,
            EffectFamily::Exposure => &self.exposure,
            EffectFamily::Color => &self.color,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EvalOptions {
    /// Round the pseudo ground truth to 8-bit, as if it had been written to
    /// disk, before correlating.
    pub quantize: bool,
}

fn score_family(
    family: EffectFamily,
    output: &VideoClip,
    source: &VideoClip,
    disparities: Option<&[DisparityMap]>,
    record: &PairRecord,
    configs: &EffectConfigs,
    opts: EvalOptions,
) -> Result<EffectScore> {
    let frames = record.photo_signal.frames();
    if !frames.iter().any(|p| family.is_active(p)) {
        return Ok(EffectScore::NotExercised);
    }
    let isolated = record.photo_signal.map(|p| family.isolate(&p))?;
    let gt = match generate_target(source, disparities, &isolated, configs, record.seed) {
        Ok(gt) => gt,
        Err(e @ Error::MissingDisparity { .. }) => {
            return Ok(EffectScore::Undefined { reason: e.to_string() })
        }
        Err(e) => return Err(e),
    };
    let gt = if opts.quantize {
        VideoClip::new(gt.frames().iter().map(Frame::quantized).collect(), gt.fps)?
    } else {
        gt
    };
    Ok(match pearson_frames(output, &gt)? {
        Some(value) => EffectScore::Scored { value },
        None => EffectScore::Undefined {
            reason: "zero-variance frame".into(),
        },
    })
}

/// Scores `output` against one pseudo ground truth per effect family.
pub fn effect_accuracy(
    output: &VideoClip,
    source: &VideoClip,
    disparities: Option<&[DisparityMap]>,
    record: &PairRecord,
    configs: &EffectConfigs,
    opts: EvalOptions,
) -> Result<EffectScores> {
    if output.len() != source.len() || output.dims() != source.dims() {
        return Err(Error::Dimensions(format!(
            "output is {} frames of {:?}, source is {} frames of {:?}",
            output.len(),
            output.dims(),
            source.len(),
            source.dims()
        )));
    }
    if record.photo_signal.len() != source.len() {
        return Err(Error::LengthMismatch(format!(
            "record signal has {} frames, source has {}",
            record.photo_signal.len(),
            source.len()
        )));
    }
    let score = |f| score_family(f, output, source, disparities, record, configs, opts);
    Ok(EffectScores {
        bokeh: score(EffectFamily::Bokeh)?,
        zoom: score(EffectFamily::Zoom)?,
        exposure: score(EffectFamily::Exposure)?,
        color: score(EffectFamily::Color)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp_frame(w: usize, h: usize, phase: f64) -> Frame {
        Frame::from_fn(w, h, |x, y| {
            let v = ((x as f64 * 0.7 + y as f64 * 1.3 + phase).sin() + 1.0) / 2.0;
            [v, 1.0 - v * 0.5, (v * v).min(1.0)]
        })
        .unwrap()
    }

    fn clip(phases: &[f64]) -> VideoClip {
        VideoClip::new(phases.iter().map(|&p| ramp_frame(9, 7, p)).collect(), 24.0).unwrap()
    }

    #[test]
    fn identical_and_inverted() {
        let a = clip(&[0.0, 1.0, 2.0]);
        assert_eq!(pearson_frames(&a, &a).unwrap(), Some(1.0));
        let inv = VideoClip::new(a.frames().iter().map(|f| f.map_channels(|_, v| 1.0 - v)).collect(), 24.0).unwrap();
        let r = pearson_frames(&a, &inv).unwrap().unwrap();
        assert!((r + 1.0).abs() < 1e-12, "{r}");
    }

    #[test]
    fn constant_against_textured_is_undefined() {
        let c = VideoClip::new(vec![Frame::filled(9, 7, [0.3; 3]).unwrap()], 24.0).unwrap();
        assert_eq!(pearson_frames(&c, &clip(&[0.0])).unwrap(), None);
        assert_eq!(pearson_frames(&c, &c).unwrap(), Some(1.0));
    }

    #[test]
    fn shape_mismatch() {
        assert!(pearson_frames(&clip(&[0.0]), &clip(&[0.0, 1.0])).is_err());
    }
}
