use std::time::{Duration, Instant};

use cinefx::curation::{curate_video, detect_shots, filter_clip, info_score, partition_ranges, CurationConfig, Reason};
use cinefx::synth::{concat, curation_corpus, pan_clip, static_clip, RectWorld, CORPUS_SIZE};
use cinefx::vision::VisionConfig;

fn world(seed: u64) -> RectWorld {
    RectWorld::random(seed, -200.0, -200.0, 560.0, 500.0)
}

#[test]
fn info_score_of_unit_pan() {
    let (w, h) = CORPUS_SIZE;
    let clip = pan_clip(&world(3), w, h, 100, (0.0, 0.0), (1.0, 0.0)).unwrap();
    let vcfg = VisionConfig::default();
    let small = info_score(&clip, 6, &vcfg).unwrap();
    let large = info_score(&clip, 24, &vcfg).unwrap();
    assert!((small.score - 6.0).abs() <= 0.5, "{small:?}");
    assert!((large.score - 24.0).abs() <= 2.0, "{large:?}");
    assert_eq!(small.windows, 16);
    assert_eq!(large.windows, 4);
}

#[test]
fn info_score_of_static_clip_is_zero() {
    let (w, h) = CORPUS_SIZE;
    let clip = static_clip(&world(4), w, h, 30, 0.0, 0).unwrap();
    assert_eq!(info_score(&clip, 6, &VisionConfig::default()).unwrap().score, 0.0);
}

#[test]
fn partition_examples() {
    let cfg = CurationConfig::default();
    let lens = |n| partition_ranges(n, &cfg).iter().map(|(a, b)| b - a).collect::<Vec<_>>();
    assert_eq!(lens(200), [100, 100]);
    assert_eq!(lens(190), [100, 90]);
    assert_eq!(lens(150), [100]);
}

#[test]
fn planted_cuts_are_found() {
    let (w, h) = CORPUS_SIZE;
    let parts: Vec<_> = [(5, 60), (6, 45), (7, 70)]
        .iter()
        .map(|&(seed, n)| pan_clip(&world(seed), w, h, n, (0.0, 0.0), (0.8, 0.3)).unwrap())
        .collect();
    let clip = concat(&parts).unwrap();
    let found = detect_shots(&clip, &CurationConfig::default()).unwrap();
    assert_eq!(found.len(), 2, "{found:?}");
    for (f, planted) in found.iter().zip([60usize, 105]) {
        assert!(f.abs_diff(planted) <= 1, "{found:?}");
    }
}

#[test]
fn slow_pan_kept_by_large_window() {
    let (w, h) = CORPUS_SIZE;
    let clip = pan_clip(&world(8), w, h, 100, (0.0, 0.0), (0.15, 0.0)).unwrap();
    let cfg = CurationConfig::default();
    let v = filter_clip(&clip, None, &cfg, &VisionConfig::default()).unwrap();
    let small = v.scores.info_small.unwrap();
    let large = v.scores.info_large.unwrap();
    assert!(small < cfg.theta_small, "{small}");
    assert!(large >= cfg.theta_large, "{large}");
    assert!(v.kept, "{v:?}");
}

#[test]
fn corpus_matches_golden_verdicts() {
    let t = Instant::now();
    let corpus = curation_corpus().unwrap();
    assert_eq!(corpus.len(), 20);
    let (cfg, vcfg) = (CurationConfig::default(), VisionConfig::default());
    let mut reasons_seen = Vec::new();
    for video in &corpus {
        let got: Vec<_> = curate_video(&video.clip, video.faces.as_ref(), &cfg, &vcfg)
            .unwrap()
            .into_iter()
            .map(|c| (c.start, c.end, c.verdict.reasons))
            .collect();
        let want: Vec<_> = video.expected.iter().map(|e| (e.start, e.end, e.reasons.clone())).collect();
        assert_eq!(got, want, "{}", video.name);
        reasons_seen.extend(got.into_iter().flat_map(|g| g.2));
    }
    for r in [Reason::TooShort, Reason::LowInfo, Reason::FaceCloseup, Reason::TooDark] {
        assert!(reasons_seen.contains(&r), "{r:?} never exercised");
    }
    assert!(t.elapsed() < Duration::from_secs(60), "{:?}", t.elapsed());
}
