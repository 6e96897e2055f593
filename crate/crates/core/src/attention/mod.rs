//! Forward-pass reference of a cross-attention layer with separate camera
//! trajectory and photographic control branches.
//!
//! Both branches share the query projection. Each has its own key and value
//! projections over its control embeddings; the two attention outputs are
//! summed, projected by `W_o` and added to the input tokens. `W_o` starts at
//! zero, so a freshly initialized layer is the identity. Queries are rotated
//! with the token frame indices, keys with the control frame indices
//! `0..tau`.

mod checks;
pub mod flow;
pub mod reference;

pub use checks::{run_invariant_suite, CheckResult};
pub use flow::{fm_interpolate, fm_loss, fm_target};

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::rng;
use crate::signals::{PhotoSignal, TrajSignal};

pub type Mat = DMatrix<f64>;

pub const ROPE_BASE: f64 = 10_000.0;

#[derive(Debug, Clone, PartialEq)]
pub struct TokenSequence {
    /// `L x c'` token features.
    pub tokens: Mat,
    /// Frame index of each token.
    pub positions: Vec<usize>,
}

impl TokenSequence {
    pub fn new(tokens: Mat, positions: Vec<usize>) -> Result<Self> {
        if tokens.nrows() == 0 || tokens.nrows() != positions.len() {
            return Err(Error::Dimensions(format!(
                "{} tokens with {} positions",
                tokens.nrows(),
                positions.len()
            )));
        }
        if tokens.ncols() % 2 != 0 {
            return Err(Error::Dimensions(format!("token width {} is odd", tokens.ncols())));
        }
        Ok(Self { tokens, positions })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControlEmbeddings {
    /// `tau x c'` trajectory embedding.
    pub traj: Mat,
    /// `tau x c'` photographic embedding.
    pub pho: Mat,
}

/// Two-layer MLP `silu(x W1 + b1) W2 + b2`, applied row by row.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderParams {
    pub w1: Mat,
    pub b1: DVector<f64>,
    pub w2: Mat,
    pub b2: DVector<f64>,
}

pub fn silu(x: f64) -> f64 {
    x / (1.0 + (-x).exp())
}

fn gaussian_matrix(rows: usize, cols: usize, std: f64, seed: u64, tag: u64) -> Mat {
    let mut r = rng::stream(seed, &[tag]);
    let n = Normal::new(0.0, std).expect("valid std");
    // row-major fill so the layout does not depend on nalgebra's storage
    let mut m = Mat::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            m[(i, j)] = n.sample(&mut r);
        }
    }
    m
}

impl EncoderParams {
    pub fn zeros(input: usize, hidden: usize, out: usize) -> Self {
        Self {
            w1: Mat::zeros(input, hidden),
            b1: DVector::zeros(hidden),
            w2: Mat::zeros(hidden, out),
            b2: DVector::zeros(out),
        }
    }

    /// Gaussian weights scaled by `1/sqrt(fan_in)`, small biases.
    pub fn random(input: usize, hidden: usize, out: usize, seed: u64) -> Self {
        Self {
            w1: gaussian_matrix(input, hidden, 1.0 / (input as f64).sqrt(), seed, 1),
            b1: DVector::from_column_slice(gaussian_matrix(hidden, 1, 0.1, seed, 2).as_slice()),
            w2: gaussian_matrix(hidden, out, 1.0 / (hidden as f64).sqrt(), seed, 3),
            b2: DVector::from_column_slice(gaussian_matrix(out, 1, 0.1, seed, 4).as_slice()),
        }
    }

    pub fn forward(&self, x: &Mat) -> Result<Mat> {
        if x.ncols() != self.w1.nrows() {
            return Err(Error::Dimensions(format!(
                "encoder expects {} inputs, got {}",
                self.w1.nrows(),
                x.ncols()
            )));
        }
        let mut h = x * &self.w1;
        for mut row in h.row_iter_mut() {
            for (v, b) in row.iter_mut().zip(self.b1.iter()) {
                *v = silu(*v + b);
            }
        }
        let mut out = h * &self.w2;
        for mut row in out.row_iter_mut() {
            for (v, b) in row.iter_mut().zip(self.b2.iter()) {
                *v += b;
            }
        }
        Ok(out)
    }
}

/// `tau x 5` rows `(K, d_f, f, S, T)`.
pub fn photo_matrix(signal: &PhotoSignal) -> Mat {
    let rows: Vec<[f64; 5]> = signal.frames().iter().map(|p| p.as_array()).collect();
    Mat::from_fn(rows.len(), 5, |i, j| rows[i][j])
}

/// `tau x 12` rows of flattened `[R | t]`.
pub fn traj_matrix(signal: &TrajSignal) -> Mat {
    let rows = signal.frames();
    Mat::from_fn(rows.len(), 12, |i, j| rows[i][j])
}

pub fn encode_pho(signal: &PhotoSignal, params: &EncoderParams) -> Result<Mat> {
    params.forward(&photo_matrix(signal))
}

pub fn encode_traj(signal: &TrajSignal, params: &EncoderParams) -> Result<Mat> {
    params.forward(&traj_matrix(signal))
}

/// Rotates feature pairs `(2j, 2j+1)` of row `i` by `positions[i] *
/// base^(-2j/c')`.
pub fn rope_apply(seq: &Mat, positions: &[usize], base: f64) -> Result<Mat> {
    let c = seq.ncols();
    if c % 2 != 0 {
        return Err(Error::Dimensions(format!("RoPE needs an even width, got {c}")));
    }
    if positions.len() != seq.nrows() {
        return Err(Error::Dimensions(format!(
            "{} rows with {} positions",
            seq.nrows(),
            positions.len()
        )));
    }
    let mut out = seq.clone();
    for (i, &pos) in positions.iter().enumerate() {
        if pos == 0 {
            continue;
        }
        for j in 0..c / 2 {
            let theta = pos as f64 * base.powf(-2.0 * j as f64 / c as f64);
            let (s, co) = theta.sin_cos();
            let (a, b) = (seq[(i, 2 * j)], seq[(i, 2 * j + 1)]);
            out[(i, 2 * j)] = a * co - b * s;
            out[(i, 2 * j + 1)] = a * s + b * co;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecoupledAttnWeights {
    pub w_q: Mat,
    pub w_k_traj: Mat,
    pub w_v_traj: Mat,
    pub w_k_pho: Mat,
    pub w_v_pho: Mat,
    pub w_o: Mat,
    pub heads: usize,
}

impl DecoupledAttnWeights {
    /// Random projections with `W_o = 0`.
    pub fn init(width: usize, heads: usize, seed: u64) -> Result<Self> {
        if heads == 0 || width % heads != 0 {
            return Err(Error::Dimensions(format!("{heads} heads do not divide width {width}")));
        }
        let std = 1.0 / (width as f64).sqrt();
        let g = |tag| gaussian_matrix(width, width, std, seed, tag);
        Ok(Self {
            w_q: g(11),
            w_k_traj: g(12),
            w_v_traj: g(13),
            w_k_pho: g(14),
            w_v_pho: g(15),
            w_o: Mat::zeros(width, width),
            heads,
        })
    }

    pub fn width(&self) -> usize {
        self.w_q.nrows()
    }

    fn check(&self) -> Result<()> {
        let c = self.width();
        let all = [&self.w_q, &self.w_k_traj, &self.w_v_traj, &self.w_k_pho, &self.w_v_pho, &self.w_o];
        if all.iter().any(|m| m.shape() != (c, c)) {
            return Err(Error::Dimensions("attention weights must all be c' x c'".into()));
        }
        if self.heads == 0 || c % self.heads != 0 {
            return Err(Error::Dimensions(format!("{} heads do not divide width {c}", self.heads)));
        }
        Ok(())
    }
}

/// Intermediate values of one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionTrace {
    /// Per head, `L x tau` attention probabilities.
    pub probs_traj: Vec<Mat>,
    pub probs_pho: Vec<Mat>,
    /// `L x c'` branch outputs before `W_o`.
    pub o_traj: Mat,
    pub o_pho: Mat,
}

fn softmax_rows(m: &mut Mat) {
    for mut row in m.row_iter_mut() {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
}

/// One branch: multi-head attention of the rotated queries over the
/// branch's control rows.
fn branch(q_rot: &Mat, ctrl: &Mat, w_k: &Mat, w_v: &Mat, heads: usize) -> (Mat, Vec<Mat>) {
    let tau = ctrl.nrows();
    let key_pos: Vec<usize> = (0..tau).collect();
    let k = rope_apply(&(ctrl * w_k), &key_pos, ROPE_BASE).expect("even width checked");
    let v = ctrl * w_v;
    let c = q_rot.ncols();
    let dk = c / heads;
    let scale = 1.0 / (dk as f64).sqrt();
    let mut out = Mat::zeros(q_rot.nrows(), c);
    let mut probs = Vec::with_capacity(heads);
    for h in 0..heads {
        let qh = q_rot.columns(h * dk, dk);
        let kh = k.columns(h * dk, dk);
        let vh = v.columns(h * dk, dk);
        let mut p = (qh * kh.transpose()) * scale;
        softmax_rows(&mut p);
        out.columns_mut(h * dk, dk).copy_from(&(&p * vh));
        probs.push(p);
    }
    (out, probs)
}

pub fn decoupled_cross_attention_traced(
    f: &TokenSequence,
    ctrl: &ControlEmbeddings,
    w: &DecoupledAttnWeights,
) -> Result<(TokenSequence, AttentionTrace)> {
    w.check()?;
    let c = w.width();
    if f.tokens.ncols() != c || ctrl.traj.ncols() != c || ctrl.pho.ncols() != c {
        return Err(Error::Dimensions(format!(
            "widths: tokens {}, traj {}, pho {}, weights {c}",
            f.tokens.ncols(),
            ctrl.traj.ncols(),
            ctrl.pho.ncols()
        )));
    }
    if ctrl.traj.nrows() == 0 || ctrl.traj.nrows() != ctrl.pho.nrows() {
        return Err(Error::Dimensions(format!(
            "control rows: traj {}, pho {}",
            ctrl.traj.nrows(),
            ctrl.pho.nrows()
        )));
    }
    if f.positions.len() != f.tokens.nrows() {
        return Err(Error::Dimensions("token positions do not match token count".into()));
    }
    let q = rope_apply(&(&f.tokens * &w.w_q), &f.positions, ROPE_BASE)?;
    let (o_traj, probs_traj) = branch(&q, &ctrl.traj, &w.w_k_traj, &w.w_v_traj, w.heads);
    let (o_pho, probs_pho) = branch(&q, &ctrl.pho, &w.w_k_pho, &w.w_v_pho, w.heads);
    let tokens = &f.tokens + (&o_traj + &o_pho) * &w.w_o;
    Ok((
        TokenSequence {
            tokens,
            positions: f.positions.clone(),
        },
        AttentionTrace {
            probs_traj,
            probs_pho,
            o_traj,
            o_pho,
        },
    ))
}

/// `F + (O_traj + O_pho) W_o`.
pub fn decoupled_cross_attention(
    f: &TokenSequence,
    ctrl: &ControlEmbeddings,
    w: &DecoupledAttnWeights,
) -> Result<TokenSequence> {
    decoupled_cross_attention_traced(f, ctrl, w).map(|(out, _)| out)
}

/// Random `rows x cols` matrix with standard normal entries.
pub fn random_matrix(rows: usize, cols: usize, seed: u64) -> Mat {
    gaussian_matrix(rows, cols, 1.0, seed, 0)
}
