use std::time::{Duration, Instant};

use cinefx::attention::{
    decoupled_cross_attention, random_matrix, run_invariant_suite, ControlEmbeddings, DecoupledAttnWeights,
    EncoderParams, Mat, TokenSequence,
};
use cinefx::rng;
use nalgebra::DVector;
use rand::Rng;

type Rows = Vec<Vec<f64>>;

fn rows(m: &Mat) -> Rows {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

fn matmul(a: &Rows, b: &Mat) -> Rows {
    a.iter()
        .map(|r| (0..b.ncols()).map(|j| r.iter().enumerate().map(|(k, v)| v * b[(k, j)]).sum()).collect())
        .collect()
}

/// Rotation written as complex multiplication of feature pairs.
fn rotate(row: &[f64], pos: usize) -> Vec<f64> {
    let c = row.len();
    let mut out = vec![0.0; c];
    for j in 0..c / 2 {
        let freq = 1.0 / 10_000f64.powf(2.0 * j as f64 / c as f64);
        let (re, im) = ((pos as f64 * freq).cos(), (pos as f64 * freq).sin());
        let (a, b) = (row[2 * j], row[2 * j + 1]);
        out[2 * j] = a * re - b * im;
        out[2 * j + 1] = a * im + b * re;
    }
    out
}

fn attend(q: &Rows, ctrl: &Rows, wk: &Mat, wv: &Mat, heads: usize) -> Rows {
    let k: Rows = matmul(ctrl, wk).iter().enumerate().map(|(t, r)| rotate(r, t)).collect();
    let v = matmul(ctrl, wv);
    let c = wk.ncols();
    let dk = c / heads;
    q.iter()
        .map(|qi| {
            let mut out = vec![0.0; c];
            for h in 0..heads {
                let cols = h * dk..(h + 1) * dk;
                let logits: Vec<f64> = k
                    .iter()
                    .map(|kt| cols.clone().map(|j| qi[j] * kt[j]).sum::<f64>() / (dk as f64).sqrt())
                    .collect();
                let m = logits.iter().cloned().fold(f64::MIN, f64::max);
                let lse = m + logits.iter().map(|l| (l - m).exp()).sum::<f64>().ln();
                for (t, l) in logits.iter().enumerate() {
                    let p = (l - lse).exp();
                    for j in cols.clone() {
                        out[j] += p * v[t][j];
                    }
                }
            }
            out
        })
        .collect()
}

fn oracle(f: &TokenSequence, ctrl: &ControlEmbeddings, w: &DecoupledAttnWeights) -> Rows {
    let q: Rows = matmul(&rows(&f.tokens), &w.w_q)
        .iter()
        .zip(&f.positions)
        .map(|(r, &p)| rotate(r, p))
        .collect();
    let ot = attend(&q, &rows(&ctrl.traj), &w.w_k_traj, &w.w_v_traj, w.heads);
    let op = attend(&q, &rows(&ctrl.pho), &w.w_k_pho, &w.w_v_pho, w.heads);
    let summed: Rows = ot.iter().zip(&op).map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect()).collect();
    let proj = matmul(&summed, &w.w_o);
    rows(&f.tokens)
        .iter()
        .zip(&proj)
        .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect())
        .collect()
}

#[test]
fn matches_independent_oracle_on_100_instances() {
    let mut worst: f64 = 0.0;
    for trial in 0..100u64 {
        let mut r = rng::stream(trial, &[0x0A]);
        let heads = [1, 2, 4][r.random_range(0..3)];
        let width = heads * 2 * r.random_range(1..4);
        let len = r.random_range(1..9);
        let tau = r.random_range(1..7);
        let mut w = DecoupledAttnWeights::init(width, heads, trial).unwrap();
        w.w_o = random_matrix(width, width, trial + 500);
        let positions: Vec<usize> = (0..len).map(|_| r.random_range(0..60)).collect();
        let f = TokenSequence::new(random_matrix(len, width, trial + 1000), positions).unwrap();
        let ctrl = ControlEmbeddings {
            traj: random_matrix(tau, width, trial + 2000),
            pho: random_matrix(tau, width, trial + 3000),
        };
        let got = decoupled_cross_attention(&f, &ctrl, &w).unwrap();
        let want = oracle(&f, &ctrl, &w);
        for (i, row) in want.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                worst = worst.max((got.tokens[(i, j)] - v).abs());
            }
        }
    }
    assert!(worst <= 1e-9, "{worst}");
}

#[test]
fn invariant_suite_passes_quickly() {
    let t = Instant::now();
    let results = run_invariant_suite(7, 100);
    assert_eq!(results.len(), 9);
    for c in &results {
        assert!(c.passed, "{c:?}");
        assert_eq!(c.trials, 100);
    }
    assert!(t.elapsed() < Duration::from_secs(5), "{:?}", t.elapsed());
}

#[test]
fn encoder_hand_values() {
    // one input, one hidden unit, two outputs
    let p = EncoderParams {
        w1: Mat::from_row_slice(1, 1, &[2.0]),
        b1: DVector::from_vec(vec![-1.0]),
        w2: Mat::from_row_slice(1, 2, &[1.0, -3.0]),
        b2: DVector::from_vec(vec![0.5, 0.0]),
    };
    let out = p.forward(&Mat::from_row_slice(2, 1, &[0.5, 1.0])).unwrap();
    // x = 0.5: pre-activation 0, silu 0
    assert_eq!(out[(0, 0)], 0.5);
    assert_eq!(out[(0, 1)], 0.0);
    // x = 1: pre-activation 1, silu(1) = 1 / (1 + e^-1)
    let s = 1.0 / (1.0 + (-1f64).exp());
    assert!((out[(1, 0)] - (s + 0.5)).abs() < 1e-15);
    assert!((out[(1, 1)] + 3.0 * s).abs() < 1e-15);
}
