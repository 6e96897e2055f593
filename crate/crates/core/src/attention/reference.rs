//! Loop-only evaluation of the decoupled layer on plain nested vectors,
//! used as a cross-check by the invariant suite.

use super::{DecoupledAttnWeights, Mat, ROPE_BASE};

pub type Rows = Vec<Vec<f64>>;

pub fn to_rows(m: &Mat) -> Rows {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

fn matmul(a: &Rows, b: &Rows) -> Rows {
    let (n, k, m) = (a.len(), b.len(), b[0].len());
    let mut out = vec![vec![0.0; m]; n];
    for i in 0..n {
        for j in 0..m {
            let mut s = 0.0;
            for t in 0..k {
                s += a[i][t] * b[t][j];
            }
            out[i][j] = s;
        }
    }
    out
}

fn rope(rows: &Rows, positions: &[usize]) -> Rows {
    let c = rows[0].len();
    rows.iter()
        .zip(positions)
        .map(|(row, &p)| {
            let mut out = row.clone();
            for j in 0..c / 2 {
                let angle = p as f64 / ROPE_BASE.powf(2.0 * j as f64 / c as f64);
                let (a, b) = (row[2 * j], row[2 * j + 1]);
                out[2 * j] = a * angle.cos() - b * angle.sin();
                out[2 * j + 1] = a * angle.sin() + b * angle.cos();
            }
            out
        })
        .collect()
}

fn attend(q: &Rows, ctrl: &Rows, wk: &Rows, wv: &Rows, heads: usize) -> Rows {
    let positions: Vec<usize> = (0..ctrl.len()).collect();
    let k = rope(&matmul(ctrl, wk), &positions);
    let v = matmul(ctrl, wv);
    let c = q[0].len();
    let dk = c / heads;
    let mut out = vec![vec![0.0; c]; q.len()];
    for h in 0..heads {
        for i in 0..q.len() {
            let logits: Vec<f64> = (0..k.len())
                .map(|j| (0..dk).map(|d| q[i][h * dk + d] * k[j][h * dk + d]).sum::<f64>() / (dk as f64).sqrt())
                .collect();
            let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
            let z: f64 = exps.iter().sum();
            for d in 0..dk {
                out[i][h * dk + d] = (0..k.len()).map(|j| exps[j] / z * v[j][h * dk + d]).sum();
            }
        }
    }
    out
}

/// Output tokens of the layer computed with explicit loops.
pub fn naive_forward(
    tokens: &Rows,
    positions: &[usize],
    traj: &Rows,
    pho: &Rows,
    w: &DecoupledAttnWeights,
) -> Rows {
    let q = rope(&matmul(tokens, &to_rows(&w.w_q)), positions);
    let ot = attend(&q, traj, &to_rows(&w.w_k_traj), &to_rows(&w.w_v_traj), w.heads);
    let op = attend(&q, pho, &to_rows(&w.w_k_pho), &to_rows(&w.w_v_pho), w.heads);
    let sum: Rows = ot
        .iter()
        .zip(&op)
        .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect())
        .collect();
    let proj = matmul(&sum, &to_rows(&w.w_o));
    tokens
        .iter()
        .zip(&proj)
        .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect())
        .collect()
}
