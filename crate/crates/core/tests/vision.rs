use cinefx::imaging::to_grayscale;
use cinefx::rng;
use cinefx::synth::RectWorld;
use cinefx::vision::{
    detect_and_describe, displacement_score, estimate_affine_ransac, AffineTransform, Displacement, Point,
    RansacConfig, VisionConfig,
};
use cinefx::GrayFrame;
use rand::Rng;

const W: usize = 128;
const H: usize = 96;

fn world() -> RectWorld {
    RectWorld::random(21, -64.0, -64.0, 320.0, 256.0)
}

fn view(ox: f64, oy: f64) -> GrayFrame {
    to_grayscale(&world().view(W, H, ox, oy).unwrap())
}

fn pixels(d: Displacement) -> f64 {
    d.pixels().expect("measurable")
}

#[test]
fn identical_frames_score_zero() {
    let a = view(0.0, 0.0);
    assert_eq!(displacement_score(&a, &a, &VisionConfig::default()).unwrap(), Displacement::Pixels(0.0));
}

#[test]
fn planted_translation() {
    let cfg = VisionConfig::default();
    let (a, b) = (view(0.0, 0.0), view(5.0, 0.0));
    let s = pixels(displacement_score(&a, &b, &cfg).unwrap());
    assert!((s - 5.0).abs() <= 0.5, "{s}");
    let back = pixels(displacement_score(&b, &a, &cfg).unwrap());
    assert!((s - back).abs() <= 0.5, "{s} vs {back}");
}

#[test]
fn small_rotation_matches_probe_oracle() {
    let angle = 2f64.to_radians();
    let (cx, cy) = ((W - 1) as f64 / 2.0, (H - 1) as f64 / 2.0);
    let w = world();
    let a = to_grayscale(&w.view(W, H, 0.0, 0.0).unwrap());
    // the second camera is rotated by -angle, so content moves by +angle
    let inv = AffineTransform::rotation_about(-angle, cx, cy);
    let b = to_grayscale(&w.render(W, H, |x, y| { let p = inv.apply([x, y]); (p[0], p[1]) }).unwrap());
    let probes = [[0.0, 0.0], [(W - 1) as f64, 0.0], [0.0, (H - 1) as f64], [(W - 1) as f64, (H - 1) as f64], [cx, cy]];
    let fwd = AffineTransform::rotation_about(angle, cx, cy);
    let expected: f64 = probes
        .iter()
        .map(|&p| {
            let q = fwd.apply(p);
            ((q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2)).sqrt()
        })
        .sum::<f64>()
        / 5.0;
    let s = pixels(displacement_score(&a, &b, &VisionConfig::default()).unwrap());
    assert!((s - expected).abs() <= 0.1 * expected, "{s} vs {expected}");
}

#[test]
fn white_square_corners() {
    let (w, h) = (64, 64);
    let img = GrayFrame::new(
        w,
        h,
        (0..w * h)
            .map(|i| if (20..44).contains(&(i % w)) && (20..44).contains(&(i / w)) { 1.0 } else { 0.0 })
            .collect(),
    )
    .unwrap();
    let f = detect_and_describe(&img, 4, 0.1).unwrap();
    for (ex, ey) in [(20.0, 20.0), (43.0, 20.0), (20.0, 43.0), (43.0, 43.0)] {
        assert!(f.keypoints.iter().any(|k| (k.x - ex).abs() <= 1.0 && (k.y - ey).abs() <= 1.0));
    }
    for pair in f.keypoints.windows(2) {
        assert!(pair[0].response >= pair[1].response);
    }
}

fn planted_affine(r: &mut impl Rng) -> AffineTransform {
    let angle: f64 = r.random_range(-0.2..0.2);
    let scale: f64 = r.random_range(0.9..1.1);
    let (s, c) = angle.sin_cos();
    AffineTransform {
        m: [
            [scale * c + r.random_range(-0.02..0.02), -scale * s, r.random_range(-10.0..10.0)],
            [scale * s, scale * c + r.random_range(-0.02..0.02), r.random_range(-10.0..10.0)],
        ],
    }
}

#[test]
fn ransac_under_outliers_50_trials() {
    let mut failures = 0;
    for trial in 0..50u64 {
        let mut r = rng::stream(1000 + trial, &[]);
        let planted = planted_affine(&mut r);
        let pairs: Vec<(Point, Point)> = (0..100)
            .map(|i| {
                let p = [r.random_range(0.0..320.0), r.random_range(0.0..240.0)];
                let q = planted.apply(p);
                if i % 10 < 3 {
                    let off: f64 = r.random_range(15.0..80.0);
                    let dir: f64 = r.random_range(0.0..std::f64::consts::TAU);
                    (p, [q[0] + off * dir.cos(), q[1] + off * dir.sin()])
                } else {
                    (p, q)
                }
            })
            .collect();
        let fit = estimate_affine_ransac(&pairs, &RansacConfig { seed: trial, ..Default::default() }).unwrap();
        if fit.transform.max_abs_diff(&planted) >= 1e-3 {
            failures += 1;
        }
        assert!(fit.sampled_counts.iter().all(|&c| c <= fit.inlier_count));
    }
    assert_eq!(failures, 0);
}

#[test]
fn ransac_is_thread_count_independent() {
    let mut r = rng::stream(77, &[]);
    let planted = planted_affine(&mut r);
    let pairs: Vec<(Point, Point)> = (0..60)
        .map(|i| {
            let p = [r.random_range(0.0..100.0), r.random_range(0.0..100.0)];
            let q = planted.apply(p);
            (p, if i % 3 == 0 { [q[0] + 30.0, q[1]] } else { q })
        })
        .collect();
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| estimate_affine_ransac(&pairs, &RansacConfig::default()).unwrap())
    };
    assert_eq!(run(1), run(4));
}
