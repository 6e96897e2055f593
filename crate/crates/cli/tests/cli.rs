use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use cinefx::curation::Reason;
use cinefx::imaging::{load_clip, save_clip, save_disparities};
use cinefx::synth::{curation_corpus, layered_scene};
use cinefx::{DisparityMap, Frame, VideoClip};

fn cinefx(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cinefx"))
        .args(args)
        .env("RUST_LOG", "error")
        .output()
        .expect("binary runs")
}

fn write_scene(dir: &Path) {
    let (f, d): (Vec<Frame>, Vec<DisparityMap>) =
        (0..3).map(|i| layered_scene(40, 32, i, 0.1, 0.9).unwrap()).unzip();
    save_clip(&VideoClip::new(f, 24.0).unwrap(), &dir.join("clip")).unwrap();
    save_disparities(&d, &dir.join("disp")).unwrap();
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn neutral_simulation_reproduces_the_input() {
    let tmp = tempfile::tempdir().unwrap();
    write_scene(tmp.path());
    let out = tmp.path().join("out");
    let o = cinefx(&["simulate", "--in", s(&tmp.path().join("clip")), "--out", s(&out), "--focus", "0.4"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let a = load_clip(&tmp.path().join("clip")).unwrap();
    let b = load_clip(&out.join("frames")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn blur_without_disparity_fails_with_one_json_line() {
    let tmp = tempfile::tempdir().unwrap();
    write_scene(tmp.path());
    let o = cinefx(&["simulate", "--in", s(&tmp.path().join("clip")), "--out", s(&tmp.path().join("o")), "--bokeh", "0.5"]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8(o.stderr).unwrap();
    let line = err.lines().last().unwrap();
    let v: serde_json::Value = serde_json::from_str(line).unwrap();
    assert_eq!(v["error"], "missing-disparity");
    assert!(v["message"].as_str().unwrap().contains("disparity"));
}

#[test]
fn simulated_pair_scores_one_under_eval() {
    let tmp = tempfile::tempdir().unwrap();
    write_scene(tmp.path());
    let (clip, disp, out) = (tmp.path().join("clip"), tmp.path().join("disp"), tmp.path().join("out"));
    let o = cinefx(&["simulate", "--in", s(&clip), "--out", s(&out), "--disparity", s(&disp), "--bokeh", "0.3", "--focus", "0.9"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = cinefx(&[
        "eval", "--output", s(&out.join("frames")), "--source", s(&clip), "--record", s(&out.join("record.json")),
        "--disparity", s(&disp),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["scores"]["bokeh"]["value"], 1.0);
    assert_eq!(v["scores"]["exposure"]["status"], "not-exercised");
}

#[test]
fn curate_matches_the_golden_verdicts() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = curation_corpus().unwrap();
    let mut manifest = String::new();
    for v in &corpus {
        save_clip(&v.clip, &tmp.path().join(&v.name)).unwrap();
        let faces = v.faces.as_ref().map(|f| {
            let name = format!("{}.faces.json", v.name);
            fs::write(tmp.path().join(&name), serde_json::to_string(f).unwrap()).unwrap();
            name
        });
        let line = serde_json::json!({ "clip": v.name, "faces": faces });
        manifest.push_str(&format!("{line}\n"));
    }
    fs::write(tmp.path().join("videos.jsonl"), manifest).unwrap();
    let verdicts = tmp.path().join("verdicts.jsonl");
    let kept = tmp.path().join("kept.jsonl");
    let o = cinefx(&["curate", "--manifest", s(&tmp.path().join("videos.jsonl")), "--out", s(&verdicts), "--kept", s(&kept)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let got: Vec<(String, usize, usize, Vec<Reason>)> = fs::read_to_string(&verdicts)
        .unwrap()
        .lines()
        .map(|l| {
            let v: serde_json::Value = serde_json::from_str(l).unwrap();
            (
                v["clip"].as_str().unwrap().to_string(),
                v["start"].as_u64().unwrap() as usize,
                v["end"].as_u64().unwrap() as usize,
                serde_json::from_value(v["reasons"].clone()).unwrap(),
            )
        })
        .collect();
    let want: Vec<_> = corpus
        .iter()
        .flat_map(|v| v.expected.iter().map(|e| (v.name.clone(), e.start, e.end, e.reasons.clone())))
        .collect();
    assert_eq!(got, want);
    let kept_lines = fs::read_to_string(&kept).unwrap().lines().count();
    assert_eq!(kept_lines, want.iter().filter(|w| w.3.is_empty()).count());
}

#[test]
fn attn_check_passes_for_any_seed() {
    for seed in ["0", "12345"] {
        let o = cinefx(&["--seed", seed, "attn-check", "--trials", "10"]);
        assert!(o.status.success());
        assert_eq!(String::from_utf8(o.stdout).unwrap().lines().count(), 9);
    }
}

#[test]
fn config_file_and_unknown_keys() {
    let tmp = tempfile::tempdir().unwrap();
    let good = tmp.path().join("good.toml");
    fs::write(&good, "seed = 3\n[sensor]\nepsilon = 1.0\n[curation]\nmin_len = 50\n").unwrap();
    assert!(cinefx(&["--config", s(&good), "attn-check", "--trials", "2"]).status.success());
    let bad = tmp.path().join("bad.toml");
    fs::write(&bad, "sede = 3\n").unwrap();
    let o = cinefx(&["--config", s(&bad), "attn-check"]);
    assert_eq!(o.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_str(String::from_utf8(o.stderr).unwrap().trim()).unwrap();
    assert_eq!(v["error"], "config");
}
