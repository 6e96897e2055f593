//! Randomized invariant suite for the attention layer.

use rand::Rng;
use serde::Serialize;

use super::reference::{naive_forward, to_rows};
use super::{
    decoupled_cross_attention, decoupled_cross_attention_traced, fm_interpolate, fm_loss, fm_target,
    random_matrix, rope_apply, ControlEmbeddings, DecoupledAttnWeights, Mat, TokenSequence, ROPE_BASE,
};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    /// Worst observed error, where meaningful.
    pub max_error: f64,
    pub tolerance: f64,
    pub trials: usize,
}

struct Instance {
    f: TokenSequence,
    ctrl: ControlEmbeddings,
    w: DecoupledAttnWeights,
}

/// Random layer with a nonzero output projection.
fn instance(seed: u64, trial: usize) -> Instance {
    let mut r = rng::stream(seed, &[trial as u64, 0xA77]);
    let (width, heads) = [(4, 1), (4, 2), (8, 2), (8, 4), (12, 3), (16, 2)][r.random_range(0..6)];
    let len = r.random_range(1..7);
    let tau = r.random_range(1..6);
    let key = rng::derive_key(seed, &[trial as u64]);
    let mut w = DecoupledAttnWeights::init(width, heads, key).expect("valid heads");
    w.w_o = random_matrix(width, width, key ^ 0x0F) / (width as f64).sqrt();
    let positions = (0..len).map(|_| r.random_range(0..40)).collect();
    Instance {
        f: TokenSequence::new(random_matrix(len, width, key ^ 1), positions).expect("even width"),
        ctrl: ControlEmbeddings {
            traj: random_matrix(tau, width, key ^ 2),
            pho: random_matrix(tau, width, key ^ 3),
        },
        w,
    }
}

fn max_abs(a: &Mat, b: &Mat) -> f64 {
    (a - b).abs().max()
}

fn check(name: &'static str, tolerance: f64, trials: usize, errors: impl Iterator<Item = f64>) -> CheckResult {
    let max_error = errors.fold(0.0, f64::max);
    CheckResult {
        name,
        passed: max_error <= tolerance && max_error.is_finite(),
        max_error,
        tolerance,
        trials,
    }
}

/// Runs every check on `trials` random instances derived from `seed`.
pub fn run_invariant_suite(seed: u64, trials: usize) -> Vec<CheckResult> {
    let cases: Vec<Instance> = (0..trials).map(|t| instance(seed, t)).collect();
    let mut out = Vec::new();

    out.push(check(
        "zero-init-identity",
        0.0,
        trials,
        cases.iter().map(|c| {
            let w = DecoupledAttnWeights {
                w_o: Mat::zeros(c.w.width(), c.w.width()),
                ..c.w.clone()
            };
            let y = decoupled_cross_attention(&c.f, &c.ctrl, &w).expect("consistent dims");
            if y == c.f {
                0.0
            } else {
                max_abs(&y.tokens, &c.f.tokens).max(f64::MIN_POSITIVE)
            }
        }),
    ));

    out.push(check(
        "branch-independence",
        0.0,
        trials,
        cases.iter().enumerate().map(|(t, c)| {
            let other = ControlEmbeddings {
                traj: c.ctrl.traj.clone(),
                pho: random_matrix(c.ctrl.pho.nrows(), c.ctrl.pho.ncols(), seed ^ t as u64 ^ 0xBEEF),
            };
            let swapped_traj = ControlEmbeddings {
                traj: random_matrix(c.ctrl.traj.nrows(), c.ctrl.traj.ncols(), seed ^ t as u64 ^ 0xCAFE),
                pho: c.ctrl.pho.clone(),
            };
            let (_, a) = decoupled_cross_attention_traced(&c.f, &c.ctrl, &c.w).expect("dims");
            let (_, b) = decoupled_cross_attention_traced(&c.f, &other, &c.w).expect("dims");
            let (_, d) = decoupled_cross_attention_traced(&c.f, &swapped_traj, &c.w).expect("dims");
            if a.o_traj == b.o_traj && a.o_pho == d.o_pho {
                0.0
            } else {
                f64::INFINITY
            }
        }),
    ));

    out.push(check(
        "softmax-rows-sum-to-one",
        1e-9,
        trials,
        cases.iter().map(|c| {
            let (_, tr) = decoupled_cross_attention_traced(&c.f, &c.ctrl, &c.w).expect("dims");
            tr.probs_traj
                .iter()
                .chain(&tr.probs_pho)
                .flat_map(|p| p.row_iter().map(|r| (r.sum() - 1.0).abs()).collect::<Vec<_>>())
                .fold(0.0, f64::max)
        }),
    ));

    out.push(check(
        "naive-oracle",
        1e-9,
        trials,
        cases.iter().map(|c| {
            let y = decoupled_cross_attention(&c.f, &c.ctrl, &c.w).expect("dims");
            let naive = naive_forward(
                &to_rows(&c.f.tokens),
                &c.f.positions,
                &to_rows(&c.ctrl.traj),
                &to_rows(&c.ctrl.pho),
                &c.w,
            );
            let naive = Mat::from_fn(naive.len(), naive[0].len(), |i, j| naive[i][j]);
            max_abs(&y.tokens, &naive)
        }),
    ));

    out.push(check(
        "single-control-row",
        1e-9,
        trials,
        cases.iter().map(|c| {
            let ctrl = ControlEmbeddings {
                traj: c.ctrl.traj.rows(0, 1).into_owned(),
                pho: c.ctrl.pho.rows(0, 1).into_owned(),
            };
            let (_, tr) = decoupled_cross_attention_traced(&c.f, &ctrl, &c.w).expect("dims");
            let v = &ctrl.traj * &c.w.w_v_traj;
            let mut err: f64 = 0.0;
            for i in 0..c.f.tokens.nrows() {
                err = err.max((tr.o_traj.row(i) - v.row(0)).abs().max());
            }
            err
        }),
    ));

    out.push(check(
        "rope-norm",
        1e-9,
        trials,
        cases.iter().map(|c| {
            let r = rope_apply(&c.f.tokens, &c.f.positions, ROPE_BASE).expect("even");
            (0..r.nrows())
                .map(|i| (r.row(i).norm() - c.f.tokens.row(i).norm()).abs())
                .fold(0.0, f64::max)
        }),
    ));

    out.push(check(
        "rope-relative-position",
        1e-7,
        trials,
        cases.iter().enumerate().map(|(t, c)| {
            let width = c.w.width();
            let q = random_matrix(1, width, seed ^ (t as u64) << 8);
            let k = random_matrix(1, width, seed ^ (t as u64) << 9);
            let (i, j) = (t % 17, (t * 7) % 23);
            let dot = |a: usize, b: usize| {
                let qa = rope_apply(&q, &[a], ROPE_BASE).expect("even");
                let kb = rope_apply(&k, &[b], ROPE_BASE).expect("even");
                qa.dot(&kb)
            };
            (dot(i, j) - dot(i + 5, j + 5)).abs()
        }),
    ));

    out.push(check(
        "token-permutation-equivariance",
        1e-9,
        trials,
        cases.iter().map(|c| {
            let n = c.f.tokens.nrows();
            let perm: Vec<usize> = (0..n).rev().collect();
            let permuted = TokenSequence {
                tokens: Mat::from_fn(n, c.f.tokens.ncols(), |i, j| c.f.tokens[(perm[i], j)]),
                positions: perm.iter().map(|&p| c.f.positions[p]).collect(),
            };
            let y = decoupled_cross_attention(&c.f, &c.ctrl, &c.w).expect("dims");
            let yp = decoupled_cross_attention(&permuted, &c.ctrl, &c.w).expect("dims");
            let back = Mat::from_fn(n, y.tokens.ncols(), |i, j| y.tokens[(perm[i], j)]);
            max_abs(&yp.tokens, &back)
        }),
    ));

    out.push(check(
        "flow-matching-identities",
        0.0,
        trials,
        cases.iter().map(|c| {
            let (x0, x1) = (&c.f.tokens, &c.f.tokens.map(|v| v * 0.5 - 1.0));
            let ok = fm_interpolate(x0, x1, 0.0).expect("shape") == *x0
                && fm_interpolate(x0, x1, 1.0).expect("shape") == *x1
                && fm_target(x0, x0).expect("shape") == Mat::zeros(x0.nrows(), x0.ncols())
                && fm_loss(&Mat::zeros(x0.nrows(), x0.ncols()), x0, x0).expect("shape") == 0.0
                && fm_loss(&fm_target(x0, x1).expect("shape"), x0, x1).expect("shape") == 0.0;
            if ok {
                0.0
            } else {
                f64::INFINITY
            }
        }),
    ));

    out
}
