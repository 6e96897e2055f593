//! Source/target pair generation: parameter sampling, effect composition
//! and dataset manifests.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use log::{info, warn};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bokeh::{render_bokeh_with, BokehConfig};
use crate::color::{apply_color_temperature, ColorTempConfig};
use crate::error::{Error, Result};
use crate::exposure::{apply_exposure, apply_exposure_noisy, SensorConfig};
use crate::imaging::{
    load_clip, load_disparities, normalize_disparities, save_clip, DisparityMap, Frame, VideoClip,
};
use crate::rng;
use crate::signals::{self, identity_traj, PhotoParams, PhotoSignal, TrajSignal};
use crate::zoom::{apply_zoom, apply_zoom_with_disparity, OpticsConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EffectFamily {
    Bokeh,
    Zoom,
    Exposure,
    Color,
}

impl EffectFamily {
    pub const ALL: [EffectFamily; 4] = [
        EffectFamily::Bokeh,
        EffectFamily::Zoom,
        EffectFamily::Exposure,
        EffectFamily::Color,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EffectFamily::Bokeh => "bokeh",
            EffectFamily::Zoom => "zoom",
            EffectFamily::Exposure => "exposure",
            EffectFamily::Color => "color",
        }
    }

    /// Whether `p` asks this family for any change. `d_f` alone does not
    /// count: it only matters when `K > 0`.
    pub fn is_active(self, p: &PhotoParams) -> bool {
        match self {
            EffectFamily::Bokeh => p.blur != 0.0,
            EffectFamily::Zoom => p.focal != 0.0,
            EffectFamily::Exposure => p.shutter != 0.0,
            EffectFamily::Color => p.temperature != 0.0,
        }
    }

    /// `p` with every other family set to neutral; `d_f` is kept.
    pub fn isolate(self, p: &PhotoParams) -> PhotoParams {
        let mut out = PhotoParams {
            focus: p.focus,
            ..PhotoParams::NEUTRAL
        };
        match self {
            EffectFamily::Bokeh => out.blur = p.blur,
            EffectFamily::Zoom => out.focal = p.focal,
            EffectFamily::Exposure => out.shutter = p.shutter,
            EffectFamily::Color => out.temperature = p.temperature,
        }
        out
    }
}

impl std::str::FromStr for EffectFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        EffectFamily::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::InvalidValue(format!("unknown effect family {s:?}")))
    }
}

pub const DEFAULT_ORDER: [EffectFamily; 4] = EffectFamily::ALL;

/// Closed sampling interval per parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ParamRanges {
    #[serde(rename = "K")]
    pub blur: (f64, f64),
    #[serde(rename = "d_f")]
    pub focus: (f64, f64),
    #[serde(rename = "f")]
    pub focal: (f64, f64),
    #[serde(rename = "S")]
    pub shutter: (f64, f64),
    #[serde(rename = "T")]
    pub temperature: (f64, f64),
}

impl Default for ParamRanges {
    fn default() -> Self {
        Self {
            blur: (0.0, 1.0),
            focus: (0.0, 1.0),
            focal: (0.0, 1.0),
            shutter: (-1.0, 1.0),
            temperature: (-1.0, 1.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Schedule {
    /// One parameter set for every frame of the clip.
    #[default]
    Constant,
    /// Linear ramp between two independent draws.
    Ramp,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplingStrategy {
    pub p_single: f64,
    /// Restricts single-effect draws to one family.
    pub forced_family: Option<EffectFamily>,
    pub ranges: ParamRanges,
    pub schedule: Schedule,
}

impl Default for SamplingStrategy {
    fn default() -> Self {
        Self {
            p_single: 0.5,
            forced_family: None,
            ranges: ParamRanges::default(),
            schedule: Schedule::Constant,
        }
    }
}

impl SamplingStrategy {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p_single) {
            return Err(Error::Config(format!("p_single = {} outside [0, 1]", self.p_single)));
        }
        let r = &self.ranges;
        let checks = [
            ("K", r.blur, (0.0, 1.0)),
            ("d_f", r.focus, (0.0, 1.0)),
            ("f", r.focal, (0.0, 1.0)),
            ("S", r.shutter, (-1.0, 1.0)),
            ("T", r.temperature, (-1.0, 1.0)),
        ];
        for (name, (lo, hi), (min, max)) in checks {
            if !(min <= lo && lo <= hi && hi <= max) {
                return Err(Error::Config(format!(
                    "range for {name} ({lo}, {hi}) must be ordered and inside [{min}, {max}]"
                )));
            }
        }
        Ok(())
    }
}

/// One parameter draw and whether it was a single-effect draw.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamDraw {
    pub params: PhotoParams,
    pub single: Option<EffectFamily>,
}

fn uniform(r: &mut impl Rng, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        r.random_range(lo..=hi)
    }
}

pub fn sample_draw(strategy: &SamplingStrategy, r: &mut impl Rng) -> ParamDraw {
    let ranges = &strategy.ranges;
    let single = r.random_bool(strategy.p_single);
    // d_f is drawn on every path, including K = 0
    let focus = uniform(r, ranges.focus);
    if single {
        let family = strategy
            .forced_family
            .unwrap_or_else(|| EffectFamily::ALL[r.random_range(0..4)]);
        let mut p = PhotoParams {
            focus,
            ..PhotoParams::NEUTRAL
        };
        match family {
            EffectFamily::Bokeh => p.blur = uniform(r, ranges.blur),
            EffectFamily::Zoom => p.focal = uniform(r, ranges.focal),
            EffectFamily::Exposure => p.shutter = uniform(r, ranges.shutter),
            EffectFamily::Color => p.temperature = uniform(r, ranges.temperature),
        }
        ParamDraw {
            params: p,
            single: Some(family),
        }
    } else {
        ParamDraw {
            params: PhotoParams {
                blur: uniform(r, ranges.blur),
                focus,
                focal: uniform(r, ranges.focal),
                shutter: uniform(r, ranges.shutter),
                temperature: uniform(r, ranges.temperature),
            },
            single: None,
        }
    }
}

pub fn sample_params(strategy: &SamplingStrategy, r: &mut impl Rng) -> PhotoParams {
    sample_draw(strategy, r).params
}

/// Signal for a clip of `frames` frames under `strategy`. A ramp keeps the
/// family choice of its first draw for both endpoints.
pub fn sample_signal(strategy: &SamplingStrategy, frames: usize, seed: u64) -> Result<PhotoSignal> {
    let mut r = rng::stream(seed, &[0x5A3F]);
    let first = sample_draw(strategy, &mut r);
    match strategy.schedule {
        Schedule::Constant => signals::constant_signal(first.params, frames),
        Schedule::Ramp => {
            let forced = SamplingStrategy {
                p_single: if first.single.is_some() { 1.0 } else { 0.0 },
                forced_family: first.single,
                ..*strategy
            };
            let second = sample_draw(&forced, &mut r);
            signals::ramp_signal(first.params, second.params, frames)
        }
    }
}

/// Everything that shapes a generated target besides the signal and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EffectConfigs {
    pub bokeh: BokehConfig,
    pub optics: OpticsConfig,
    pub sensor: SensorConfig,
    pub color: ColorTempConfig,
    pub order: Vec<EffectFamily>,
    /// Use the Poisson/read-noise exposure path instead of the
    /// deterministic one.
    pub noisy_exposure: bool,
    /// Min-max normalize each clip's disparities jointly after loading.
    pub normalize_disparity: bool,
}

impl Default for EffectConfigs {
    fn default() -> Self {
        Self {
            bokeh: BokehConfig::default(),
            optics: OpticsConfig::default(),
            sensor: SensorConfig::default(),
            color: ColorTempConfig::default(),
            order: DEFAULT_ORDER.to_vec(),
            noisy_exposure: false,
            normalize_disparity: false,
        }
    }
}

impl EffectConfigs {
    pub fn validate(&self) -> Result<()> {
        self.optics.validate()?;
        self.sensor.validate()?;
        self.color.validate()?;
        if self.bokeh.layers == 0 {
            return Err(Error::Config("bokeh layers must be at least 1".into()));
        }
        let mut sorted = self.order.clone();
        sorted.sort();
        if sorted != EffectFamily::ALL.to_vec() {
            return Err(Error::Config(format!(
                "effect order must name each family exactly once, got {:?}",
                self.order
            )));
        }
        Ok(())
    }

    /// Hex SHA-256 of the canonical JSON encoding.
    pub fn digest(&self) -> String {
        let json = serde_json::to_string(self).expect("configs serialize");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

/// Applies the signal's effects to one frame in `configs.order`.
pub fn apply_effects_frame(
    frame: &Frame,
    disp: Option<&DisparityMap>,
    p: &PhotoParams,
    configs: &EffectConfigs,
    seed: u64,
    index: usize,
) -> Result<Frame> {
    let mut f = frame.clone();
    let mut d = disp.cloned();
    for stage in &configs.order {
        match stage {
            EffectFamily::Bokeh if p.blur != 0.0 => {
                let dm = d.as_ref().ok_or(Error::MissingDisparity {
                    frame: index,
                    k: p.blur,
                })?;
                f = render_bokeh_with(&f, dm, p.blur, p.focus, &configs.bokeh)?;
            }
            EffectFamily::Zoom if p.focal != 0.0 => match d.take() {
                Some(dm) => {
                    let (zf, zd) = apply_zoom_with_disparity(&f, &dm, p.focal, &configs.optics)?;
                    f = zf;
                    d = Some(zd);
                }
                None => f = apply_zoom(&f, p.focal, &configs.optics)?,
            },
            EffectFamily::Exposure if p.shutter != 0.0 => {
                f = if configs.noisy_exposure {
                    apply_exposure_noisy(&f, p.shutter, &configs.sensor, seed, index)?
                } else {
                    apply_exposure(&f, p.shutter, &configs.sensor)?
                };
            }
            EffectFamily::Color if p.temperature != 0.0 => {
                f = apply_color_temperature(&f, p.temperature, &configs.color)?;
            }
            _ => {}
        }
    }
    Ok(f)
}

/// Renders the target clip for `signal`. Disparity is only needed when some
/// frame has `K > 0`.
pub fn generate_target(
    clip: &VideoClip,
    disparities: Option<&[DisparityMap]>,
    signal: &PhotoSignal,
    configs: &EffectConfigs,
    seed: u64,
) -> Result<VideoClip> {
    signals::validate(signal)?;
    if signal.len() != clip.len() {
        return Err(Error::LengthMismatch(format!(
            "signal has {} frames, clip has {}",
            signal.len(),
            clip.len()
        )));
    }
    if let Some(d) = disparities {
        if d.len() != clip.len() {
            return Err(Error::LengthMismatch(format!(
                "{} disparity maps for {} frames",
                d.len(),
                clip.len()
            )));
        }
    }
    if disparities.is_none() {
        if let Some((i, p)) = signal.frames().iter().enumerate().find(|(_, p)| p.blur > 0.0) {
            return Err(Error::MissingDisparity { frame: i, k: p.blur });
        }
    }
    let frames = clip
        .frames()
        .par_iter()
        .enumerate()
        .map(|(i, f)| {
            apply_effects_frame(f, disparities.map(|d| &d[i]), &signal.get(i), configs, seed, i)
        })
        .collect::<Result<Vec<_>>>()?;
    VideoClip::new(frames, clip.fps)
}

/// One line of the dataset manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRecord {
    pub id: String,
    /// Clip directory the source frames were read from.
    pub origin_path: String,
    pub disparity_path: Option<String>,
    /// `[start, end)` frame range within the origin clip, if not all of it.
    pub range: Option<[usize; 2]>,
    pub source_path: String,
    pub target_path: String,
    pub signal_path: String,
    pub photo_signal: PhotoSignal,
    pub traj_signal: TrajSignal,
    pub effect_order: Vec<EffectFamily>,
    pub seed: u64,
    pub config_digest: String,
}

/// Builds a record for a generated pair without touching the disk.
pub fn generate_pair(
    clip: &VideoClip,
    disparities: Option<&[DisparityMap]>,
    signal: &PhotoSignal,
    configs: &EffectConfigs,
    seed: u64,
) -> Result<(VideoClip, PairRecord)> {
    let target = generate_target(clip, disparities, signal, configs, seed)?;
    let record = PairRecord {
        id: String::new(),
        origin_path: String::new(),
        disparity_path: None,
        range: None,
        source_path: String::new(),
        target_path: String::new(),
        signal_path: String::new(),
        photo_signal: signal.clone(),
        traj_signal: identity_traj(clip.len())?,
        effect_order: configs.order.clone(),
        seed,
        config_digest: configs.digest(),
    };
    Ok((target, record))
}

/// Re-renders the target of `record` from its source clip; fails if
/// `configs` is not the configuration the record was made with.
pub fn regenerate(
    record: &PairRecord,
    source: &VideoClip,
    disparities: Option<&[DisparityMap]>,
    configs: &EffectConfigs,
) -> Result<VideoClip> {
    if configs.digest() != record.config_digest {
        return Err(Error::Config(format!(
            "config digest {} does not match record {}",
            configs.digest(),
            record.config_digest
        )));
    }
    if configs.order != record.effect_order {
        return Err(Error::Config("effect order differs from the record".into()));
    }
    generate_target(source, disparities, &record.photo_signal, configs, record.seed)
}

/// One line of the input manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputRecord {
    pub clip: String,
    #[serde(default)]
    pub disparity: Option<String>,
    #[serde(default)]
    pub start: Option<usize>,
    #[serde(default)]
    pub end: Option<usize>,
}

/// Parses line-delimited JSON, skipping blank lines.
pub fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::Parse(format!("{}:{}: {e}", path.display(), i + 1)))
        })
        .collect()
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let mut out = Vec::new();
    for it in items {
        serde_json::to_writer(&mut out, it).map_err(|e| Error::Parse(e.to_string()))?;
        out.push(b'\n');
    }
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&out).map_err(|e| Error::io(path, e))
}

/// Resolves `p` against the manifest's directory when relative.
fn resolve(base: &Path, p: &str) -> PathBuf {
    let p = Path::new(p);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// Loads the source clip (and disparities) an input record points to.
pub fn load_input(
    rec: &InputRecord,
    base: &Path,
    configs: &EffectConfigs,
) -> Result<(VideoClip, Option<Vec<DisparityMap>>)> {
    let mut clip = load_clip(&resolve(base, &rec.clip))?;
    let mut disp = rec
        .disparity
        .as_ref()
        .map(|d| load_disparities(&resolve(base, d)))
        .transpose()?;
    if rec.start.is_some() || rec.end.is_some() {
        let (a, b) = (rec.start.unwrap_or(0), rec.end.unwrap_or(clip.len()));
        clip = clip.slice(a, b)?;
        if let Some(d) = disp.as_mut() {
            if d.len() < b {
                return Err(Error::LengthMismatch(format!(
                    "{} disparity maps, range ends at {b}",
                    d.len()
                )));
            }
            *d = d[a..b].to_vec();
        }
    }
    if let Some(d) = disp.as_mut() {
        if configs.normalize_disparity {
            normalize_disparities(d);
        }
    }
    Ok((clip, disp))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Skipped {
    pub index: usize,
    pub clip: String,
    pub kind: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetReport {
    pub records: Vec<PairRecord>,
    pub skipped: Vec<Skipped>,
}

pub fn pair_id(index: usize) -> String {
    format!("pair_{index:06}")
}

fn build_one(
    index: usize,
    rec: &InputRecord,
    base: &Path,
    strategy: &SamplingStrategy,
    configs: &EffectConfigs,
    out_dir: &Path,
    seed: u64,
) -> Result<PairRecord> {
    let (clip, disp) = load_input(rec, base, configs)?;
    let clip_seed = rng::derive_key(seed, &[index as u64]);
    let signal = sample_signal(strategy, clip.len(), clip_seed)?;
    let (target, mut record) = generate_pair(&clip, disp.as_deref(), &signal, configs, clip_seed)?;

    let id = pair_id(index);
    let rel = PathBuf::from("pairs").join(&id);
    let dir = out_dir.join(&rel);
    save_clip(&clip, &dir.join("source"))?;
    save_clip(&target, &dir.join("target"))?;
    let signal_file = dir.join("signal.json");
    fs::write(&signal_file, signals::serialize(&signal, Some(&record.traj_signal)))
        .map_err(|e| Error::io(&signal_file, e))?;

    let as_str = |p: PathBuf| p.to_string_lossy().replace('\\', "/");
    record.id = id;
    record.origin_path = rec.clip.clone();
    record.disparity_path = rec.disparity.clone();
    record.range = (rec.start.is_some() || rec.end.is_some()).then(|| {
        let a = rec.start.unwrap_or(0);
        [a, a + clip.len()]
    });
    record.source_path = as_str(rel.join("source"));
    record.target_path = as_str(rel.join("target"));
    record.signal_path = as_str(rel.join("signal.json"));
    Ok(record)
}

/// Generates one pair per input record under `out_dir/pairs/<id>/` and
/// writes `out_dir/manifest.jsonl` in input order. Records that fail are
/// logged and skipped; it is an error only if every record fails.
pub fn build_dataset(
    inputs: &[InputRecord],
    base: &Path,
    strategy: &SamplingStrategy,
    configs: &EffectConfigs,
    out_dir: &Path,
    seed: u64,
) -> Result<DatasetReport> {
    strategy.validate()?;
    configs.validate()?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let results: Vec<Result<PairRecord>> = inputs
        .par_iter()
        .enumerate()
        .map(|(i, rec)| build_one(i, rec, base, strategy, configs, out_dir, seed))
        .collect();
    let mut records = Vec::new();
    let mut skipped = Vec::new();
    for (i, (rec, res)) in inputs.iter().zip(results).enumerate() {
        match res {
            Ok(r) => {
                info!("pair {} from {}", r.id, rec.clip);
                records.push(r);
            }
            Err(e) => {
                warn!("skipping {} ({}): {e}", rec.clip, e.kind());
                skipped.push(Skipped {
                    index: i,
                    clip: rec.clip.clone(),
                    kind: e.kind().to_string(),
                    error: e.to_string(),
                });
            }
        }
    }
    write_jsonl(&out_dir.join("manifest.jsonl"), &records)?;
    if !inputs.is_empty() && records.is_empty() {
        return Err(Error::InvalidValue(format!(
            "all {} input clips failed; first error: {}",
            inputs.len(),
            skipped[0].error
        )));
    }
    Ok(DatasetReport { records, skipped })
}
