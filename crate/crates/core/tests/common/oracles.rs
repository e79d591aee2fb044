//! Independent reference implementations used as test oracles.

use nalgebra::{DMatrix, DVector, Matrix4, Vector4};
use pcgnet::hsmm::{DurationModel, HeartState, LrEmissionModel, N_STATES};
use pcgnet::mfcc::MfccConfig;
use pcgnet::rnn::CellParams;

fn sig(a: f64) -> f64 {
    1.0 / (1.0 + (-a).exp())
}

fn block(m: &DMatrix<f64>, k: usize, h: usize) -> DMatrix<f64> {
    m.rows(k * h, h).into_owned()
}

fn dmat(m: &pcgnet::rnn::Matrix<f64>) -> DMatrix<f64> {
    DMatrix::from_row_slice(m.rows, m.cols, &m.data)
}

/// LSTM step written gate by gate with separate weight blocks.
pub fn lstm_step(p: &CellParams<f64>, x: &[f64], h_prev: &[f64], c_prev: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let h = p.hidden;
    let (wx, wh) = (dmat(&p.w_x), dmat(&p.w_h));
    let b = DVector::from_column_slice(&p.b);
    let (x, hp, cp) =
        (DVector::from_column_slice(x), DVector::from_column_slice(h_prev), DVector::from_column_slice(c_prev));
    let pre = |k: usize| &block(&wx, k, h) * &x + &block(&wh, k, h) * &hp + b.rows(k * h, h);
    let peep = |r: usize| DVector::from_row_slice(&p.w_c.data[r * h..(r + 1) * h]);
    let i = (pre(0) + peep(0).component_mul(&cp)).map(sig);
    let f = (pre(1) + peep(1).component_mul(&cp)).map(sig);
    let c = f.component_mul(&cp) + i.component_mul(&pre(3).map(f64::tanh));
    let o = (pre(2) + peep(2).component_mul(&c)).map(sig);
    let hn = o.component_mul(&c.map(f64::tanh));
    (hn.as_slice().to_vec(), c.as_slice().to_vec())
}

/// GRU step: `h = (1 − z)·h_prev + z·tanh(W_xn x + W_hn (r·h_prev) + b_n)`.
pub fn gru_step(p: &CellParams<f64>, x: &[f64], h_prev: &[f64]) -> Vec<f64> {
    let h = p.hidden;
    let (wx, wh) = (dmat(&p.w_x), dmat(&p.w_h));
    let b = DVector::from_column_slice(&p.b);
    let (x, hp) = (DVector::from_column_slice(x), DVector::from_column_slice(h_prev));
    let z = (&block(&wx, 0, h) * &x + &block(&wh, 0, h) * &hp + b.rows(0, h)).map(sig);
    let r = (&block(&wx, 1, h) * &x + &block(&wh, 1, h) * &hp + b.rows(h, h)).map(sig);
    let n = (&block(&wx, 2, h) * &x + &block(&wh, 2, h) * r.component_mul(&hp) + b.rows(2 * h, h)).map(f64::tanh);
    let one = DVector::from_element(h, 1.0);
    ((one - &z).component_mul(&hp) + z.component_mul(&n)).as_slice().to_vec()
}

/// Exhaustive search over every cyclic segmentation of `emissions`.
/// Returns the best score and every path attaining it.
pub fn viterbi_brute_force(emissions: &[[f64; N_STATES]], dm: &DurationModel) -> (f64, Vec<Vec<HeartState>>) {
    let n = emissions.len();
    let pmf = dm.log_pmf_table::<f64>();
    let mut s0 = 0;
    for j in 1..N_STATES {
        if emissions[0][j] > emissions[0][s0] {
            s0 = j;
        }
    }
    let mut best = (f64::NEG_INFINITY, Vec::new());
    let mut durations = Vec::new();
    fn rec(pos: usize, n: usize, max_d: usize, durations: &mut Vec<usize>, visit: &mut dyn FnMut(&[usize])) {
        if pos == n {
            visit(durations);
            return;
        }
        for d in 1..=max_d.min(n - pos) {
            durations.push(d);
            rec(pos + d, n, max_d, durations, visit);
            durations.pop();
        }
    }
    let mut visit = |ds: &[usize]| {
        let mut score = 0.0;
        let mut t = 0;
        let mut path = Vec::with_capacity(n);
        for (k, &d) in ds.iter().enumerate() {
            let state = (s0 + k) % N_STATES;
            let mut seg = 0.0;
            for row in &emissions[t..t + d] {
                seg += row[state];
            }
            score += seg;
            if k + 1 < ds.len() {
                score += pmf[state][d];
            }
            path.extend(std::iter::repeat_n(HeartState::from_index(state), d));
            t += d;
        }
        if score > best.0 {
            best = (score, vec![path]);
        } else if score == best.0 {
            best.1.push(path);
        }
    };
    rec(0, n, dm.max_duration, &mut durations, &mut visit);
    best
}

/// `σ(w_jᵀz + b_j) · N(z; μ, Σ) / P(ξ_j)` with the density evaluated from
/// an explicit inverse and determinant.
pub fn emission(model: &LrEmissionModel<f64>, row: &[f64; 4]) -> [f64; N_STATES] {
    let z = Vector4::from_fn(|k, _| (row[k] - model.feature_mean[k]) / model.feature_std[k]);
    let mu = Vector4::from_column_slice(&model.obs_mean);
    let cov = Matrix4::from_fn(|i, j| model.obs_cov[i][j]);
    let d = z - mu;
    let quad = (d.transpose() * cov.try_inverse().unwrap() * d)[0];
    let density = (-0.5 * quad).exp() / ((2.0 * std::f64::consts::PI).powi(4) * cov.determinant()).sqrt();
    let mut out = [0.0; N_STATES];
    for (j, o) in out.iter_mut().enumerate() {
        let w = &model.weights[j];
        let a = w[4] + (0..4).map(|k| w[k] * z[k]).sum::<f64>();
        *o = sig(a) * density / model.prior[j];
    }
    out
}

/// MFCCs with a direct O(N²) DFT and explicit sums.
pub fn mfcc(samples: &[f64], cfg: &MfccConfig) -> Vec<Vec<f64>> {
    use std::f64::consts::PI;
    let w = (cfg.window_ms * cfg.sample_rate as f64 / 1000.0).round() as usize;
    let hop = (cfg.hop_ms * cfg.sample_rate as f64 / 1000.0).round() as usize;
    let nfft = cfg.fft_size;
    let m = cfg.n_mel_filters;
    let mel = |f: f64| 2595.0 * (1.0 + f / 700.0).log10();
    let hz = |v: f64| 700.0 * (10f64.powf(v / 2595.0) - 1.0);
    let (lo, hi) = (mel(cfg.mel_low), mel(cfg.mel_high));
    let pts: Vec<f64> = (0..m + 2).map(|i| hz(lo + (hi - lo) * i as f64 / (m + 1) as f64)).collect();
    let tri = |k: usize, f: f64| -> f64 {
        let (a, c, b) = (pts[k], pts[k + 1], pts[k + 2]);
        if f > a && f <= c {
            (f - a) / (c - a)
        } else if f > c && f < b {
            (b - f) / (b - c)
        } else {
            0.0
        }
    };
    let mut frames = Vec::new();
    let mut start = 0;
    while start + w <= samples.len() {
        let xw: Vec<f64> =
            (0..w).map(|i| samples[start + i] * (0.54 - 0.46 * (2.0 * PI * i as f64 / (w - 1) as f64).cos())).collect();
        let power: Vec<f64> = (0..=nfft / 2)
            .map(|k| {
                let (mut re, mut im) = (0.0, 0.0);
                for (i, &v) in xw.iter().enumerate() {
                    let ang = -2.0 * PI * (k * i) as f64 / nfft as f64;
                    re += v * ang.cos();
                    im += v * ang.sin();
                }
                (re * re + im * im) / nfft as f64
            })
            .collect();
        let logmel: Vec<f64> = (0..m)
            .map(|j| {
                let e: f64 = power
                    .iter()
                    .enumerate()
                    .map(|(k, p)| p * tri(j, k as f64 * cfg.sample_rate as f64 / nfft as f64))
                    .sum();
                e.max(cfg.log_floor).ln()
            })
            .collect();
        let coeffs = (0..cfg.n_coefficients)
            .map(|q| {
                let s = if q == 0 { (1.0 / m as f64).sqrt() } else { (2.0 / m as f64).sqrt() };
                s * logmel
                    .iter()
                    .enumerate()
                    .map(|(i, v)| v * (PI * q as f64 * (2 * i + 1) as f64 / (2 * m) as f64).cos())
                    .sum::<f64>()
            })
            .collect();
        frames.push(coeffs);
        start += hop;
    }
    frames
}
