//! Subcommand bodies. Every command prints JSON lines on stdout and
//! leaves logging to stderr.

use std::fs;
use std::path::{Path, PathBuf};

use cinefx::attention::run_invariant_suite;
use cinefx::config::GlobalConfig;
use cinefx::curation::{curate_video, info_scores, ClipVerdict, FaceAnnotation};
use cinefx::eval::{effect_accuracy, EvalOptions};
use cinefx::imaging::{load_clip, load_disparities, load_frame, normalize_disparities, save_clip, to_grayscale};
use cinefx::pairs::{build_dataset, generate_pair, pair_id, read_jsonl, write_jsonl, InputRecord, PairRecord, SamplingStrategy};
use cinefx::signals::{self, constant_signal};
use cinefx::vision::{displacement_score, Displacement};
use cinefx::{DisparityMap, PhotoParams, PhotoSignal};
use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{CliError, CliResult};
use crate::EffectFlags;

fn emit(value: &impl Serialize) {
    println!("{}", serde_json::to_string(value).expect("output serializes"));
}

fn resolve(base: &Path, p: &str) -> PathBuf {
    let p = Path::new(p);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn manifest_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

fn apply_flags(p: PhotoParams, f: EffectFlags) -> PhotoParams {
    PhotoParams {
        blur: f.bokeh.unwrap_or(p.blur),
        focus: f.focus.unwrap_or(p.focus),
        focal: f.zoom.unwrap_or(p.focal),
        shutter: f.exposure.unwrap_or(p.shutter),
        temperature: f.color_temp.unwrap_or(p.temperature),
    }
}

fn load_signal(path: Option<&Path>, frames: usize, flags: EffectFlags) -> CliResult<PhotoSignal> {
    let base = match path {
        None => constant_signal(PhotoParams::NEUTRAL, frames)?,
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
            let sig = signals::deserialize(&text)?.photo;
            match sig.len() {
                n if n == frames => sig,
                1 => constant_signal(sig.get(0), frames)?,
                n => {
                    return Err(cinefx::Error::LengthMismatch(format!(
                        "signal has {n} frames, clip has {frames}"
                    ))
                    .into())
                }
            }
        }
    };
    Ok(base.map(|p| apply_flags(p, flags))?)
}

fn load_disparity_dir(dir: &Path, frames: usize, cfg: &GlobalConfig) -> CliResult<Vec<DisparityMap>> {
    let mut d = load_disparities(dir)?;
    if d.len() != frames {
        return Err(cinefx::Error::LengthMismatch(format!(
            "{} disparity maps for {frames} frames",
            d.len()
        ))
        .into());
    }
    if cfg.normalize_disparity {
        normalize_disparities(&mut d);
    }
    Ok(d)
}

fn write_line_json(path: &Path, value: &impl Serialize) -> CliResult<()> {
    let mut text = serde_json::to_string(value).expect("record serializes");
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn simulate(
    cfg: &GlobalConfig,
    input: &Path,
    out: &Path,
    signal: Option<&Path>,
    disparity: Option<&Path>,
    flags: EffectFlags,
) -> CliResult<()> {
    let clip = load_clip(input)?;
    let sig = load_signal(signal, clip.len(), flags)?;
    let disp = disparity.map(|d| load_disparity_dir(d, clip.len(), cfg)).transpose()?;
    let configs = cfg.effects();
    let (target, mut record) = generate_pair(&clip, disp.as_deref(), &sig, &configs, cfg.seed)?;

    fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    save_clip(&target, &out.join("frames"))?;
    let signal_file = out.join("signal.json");
    fs::write(&signal_file, signals::serialize(&sig, Some(&record.traj_signal)))
        .map_err(|e| CliError::io(&signal_file, e))?;
    record.id = pair_id(0);
    record.origin_path = input.to_string_lossy().into_owned();
    record.disparity_path = disparity.map(|d| d.to_string_lossy().into_owned());
    record.source_path = record.origin_path.clone();
    record.target_path = "frames".into();
    record.signal_path = "signal.json".into();
    write_line_json(&out.join("record.json"), &record)?;
    info!("wrote {} frames to {}", target.len(), out.display());
    emit(&json!({ "frames": target.len(), "out": out, "config_digest": record.config_digest }));
    Ok(())
}

#[derive(Debug, Deserialize)]
struct CurateInput {
    clip: String,
    #[serde(default)]
    faces: Option<String>,
    #[serde(default)]
    disparity: Option<String>,
}

#[derive(Debug, Serialize)]
struct VerdictLine<'a> {
    clip: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    disparity: Option<&'a str>,
    shot: usize,
    start: usize,
    end: usize,
    #[serde(flatten)]
    verdict: &'a ClipVerdict,
}

pub fn curate(cfg: &GlobalConfig, manifest: &Path, out: &Path, kept: Option<&Path>) -> CliResult<()> {
    let inputs: Vec<CurateInput> = read_jsonl(manifest)?;
    let base = manifest_dir(manifest);
    let results = inputs
        .par_iter()
        .map(|rec| {
            let clip = load_clip(&resolve(&base, &rec.clip))?;
            let faces = rec
                .faces
                .as_ref()
                .map(|f| FaceAnnotation::load(&resolve(&base, f)))
                .transpose()?;
            curate_video(&clip, faces.as_ref(), &cfg.curation, &cfg.vision)
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut lines = Vec::new();
    let mut kept_records = Vec::new();
    for (rec, clips) in inputs.iter().zip(&results) {
        for c in clips {
            lines.push(VerdictLine {
                clip: &rec.clip,
                disparity: rec.disparity.as_deref(),
                shot: c.shot,
                start: c.start,
                end: c.end,
                verdict: &c.verdict,
            });
            if c.verdict.kept {
                kept_records.push(InputRecord {
                    clip: rec.clip.clone(),
                    disparity: rec.disparity.clone(),
                    start: Some(c.start),
                    end: Some(c.end),
                });
            }
        }
    }
    write_jsonl(out, &lines)?;
    if let Some(k) = kept {
        write_jsonl(k, &kept_records)?;
    }
    emit(&json!({ "videos": inputs.len(), "clips": lines.len(), "kept": kept_records.len() }));
    Ok(())
}

fn displacement_json(d: Displacement) -> serde_json::Value {
    match d {
        Displacement::Pixels(p) => json!({ "status": "measured", "pixels": p }),
        Displacement::Unmeasurable => json!({ "status": "unmeasurable" }),
    }
}

pub fn score(cfg: &GlobalConfig, a: &Path, b: Option<&Path>) -> CliResult<()> {
    match b {
        Some(b) => {
            let (fa, fb) = (load_frame(a)?, load_frame(b)?);
            let d = displacement_score(&to_grayscale(&fa), &to_grayscale(&fb), &cfg.vision)?;
            emit(&displacement_json(d));
        }
        None => {
            let clip = load_clip(a)?;
            let windows = [cfg.curation.w_small, cfg.curation.w_large];
            let scores = info_scores(&clip, &windows, &cfg.vision)?;
            for (w, s) in windows.iter().zip(scores) {
                emit(&json!({ "window": w, "score": s.score, "windows": s.windows, "measured": s.measured }));
            }
        }
    }
    Ok(())
}

pub fn pairs(cfg: &GlobalConfig, manifest: &Path, out: &Path, strategy: Option<&Path>) -> CliResult<()> {
    let strategy: SamplingStrategy = match strategy {
        None => cfg.sampling,
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
            toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
        }
    };
    let inputs: Vec<InputRecord> = read_jsonl(manifest)?;
    let report = build_dataset(&inputs, &manifest_dir(manifest), &strategy, &cfg.effects(), out, cfg.seed)?;
    for s in &report.skipped {
        warn!("skipped input {} ({}): {}", s.index, s.kind, s.error);
    }
    emit(&json!({ "records": report.records.len(), "skipped": report.skipped }));
    Ok(())
}

fn pick_record(path: &Path, id: Option<&str>) -> CliResult<PairRecord> {
    let mut records: Vec<PairRecord> = read_jsonl(path)?;
    match id {
        Some(id) => records
            .into_iter()
            .find(|r| r.id == id)
            .ok_or_else(|| CliError::Usage(format!("no record with id {id} in {}", path.display()))),
        None if records.len() == 1 => Ok(records.remove(0)),
        None => Err(CliError::Usage(format!(
            "{} holds {} records; pick one with --id",
            path.display(),
            records.len()
        ))),
    }
}

pub fn eval(
    cfg: &GlobalConfig,
    output: &Path,
    source: &Path,
    record: &Path,
    id: Option<&str>,
    disparity: Option<&Path>,
    quantize: bool,
) -> CliResult<()> {
    let rec = pick_record(record, id)?;
    let configs = cfg.effects();
    if configs.digest() != rec.config_digest {
        return Err(CliError::Config(format!(
            "record was made with config digest {}, current config is {}",
            rec.config_digest,
            configs.digest()
        )));
    }
    let out_clip = load_clip(output)?;
    let src = load_clip(source)?;
    let disp = match disparity {
        None => None,
        Some(d) => {
            let mut maps = load_disparities(d)?;
            // a full-length disparity for a ranged record is cut to the range
            if let (Some([a, b]), true) = (rec.range, maps.len() != src.len()) {
                if maps.len() < b {
                    return Err(cinefx::Error::LengthMismatch(format!(
                        "{} disparity maps, range ends at {b}",
                        maps.len()
                    ))
                    .into());
                }
                maps = maps[a..b].to_vec();
            }
            if cfg.normalize_disparity {
                normalize_disparities(&mut maps);
            }
            Some(maps)
        }
    };
    let scores = effect_accuracy(&out_clip, &src, disp.as_deref(), &rec, &configs, EvalOptions { quantize })?;
    emit(&json!({ "id": rec.id, "scores": scores }));
    Ok(())
}

pub fn attn_check(cfg: &GlobalConfig, trials: usize) -> CliResult<()> {
    if trials == 0 {
        return Err(CliError::Usage("--trials must be at least 1".into()));
    }
    let results = run_invariant_suite(cfg.seed, trials);
    for r in &results {
        emit(r);
    }
    let failed: Vec<&str> = results.iter().filter(|r| !r.passed).map(|r| r.name).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::CheckFailed(format!("failed checks: {}", failed.join(", "))))
    }
}
