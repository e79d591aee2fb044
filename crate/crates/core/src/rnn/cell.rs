//! LSTM (with diagonal peepholes) and GRU cells, forward and BPTT.
//!
//! LSTM gate blocks are stacked in the order input, forget, output,
//! candidate: rows `0..H` of `w_x`, `w_h` and `b` belong to the input gate,
//! `H..2H` to the forget gate, `2H..3H` to the output gate and `3H..4H` to
//! the candidate. Peepholes `w_c` hold three rows (input, forget, output).
//! The input and forget gates look at `c_{t-1}`, the output gate at `c_t`.
//!
//! GRU blocks are update, reset, candidate. The candidate's recurrent term
//! multiplies `r_t ∘ h_{t-1}`.

use rand::Rng;

use super::matrix::Matrix;
use crate::scalar::{sigmoid, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellKind {
    Lstm,
    Gru,
}

impl CellKind {
    pub fn gates(self) -> usize {
        match self {
            CellKind::Lstm => 4,
            CellKind::Gru => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellParams<T> {
    pub kind: CellKind,
    pub input: usize,
    pub hidden: usize,
    /// `gates·H × d`.
    pub w_x: Matrix<T>,
    /// `gates·H × H`.
    pub w_h: Matrix<T>,
    /// LSTM peepholes `3 × H`; empty for GRU.
    pub w_c: Matrix<T>,
    pub b: Vec<T>,
}

impl<T: Real> CellParams<T> {
    pub fn zeros(kind: CellKind, input: usize, hidden: usize) -> Self {
        let g = kind.gates();
        CellParams {
            kind,
            input,
            hidden,
            w_x: Matrix::zeros(g * hidden, input),
            w_h: Matrix::zeros(g * hidden, hidden),
            w_c: Matrix::zeros(if kind == CellKind::Lstm { 3 } else { 0 }, hidden),
            b: vec![T::zero(); g * hidden],
        }
    }

    /// Glorot-uniform weights per gate block, zero peepholes, zero biases
    /// except the LSTM forget gate (1).
    pub fn init<R: Rng>(kind: CellKind, input: usize, hidden: usize, rng: &mut R) -> Self {
        let g = kind.gates();
        let mut p = Self::zeros(kind, input, hidden);
        p.w_x = Matrix::glorot(g * hidden, input, g, rng);
        p.w_h = Matrix::glorot(g * hidden, hidden, g, rng);
        if kind == CellKind::Lstm {
            for v in &mut p.b[hidden..2 * hidden] {
                *v = T::one();
            }
        }
        p
    }

    pub fn tensors(&self) -> [&[T]; 4] {
        [&self.w_x.data, &self.w_h.data, &self.w_c.data, &self.b]
    }

    pub fn tensors_mut(&mut self) -> [&mut [T]; 4] {
        [&mut self.w_x.data, &mut self.w_h.data, &mut self.w_c.data, &mut self.b]
    }

    pub fn tensor_shapes(&self) -> [(&'static str, usize, usize); 4] {
        [
            ("w_x", self.w_x.rows, self.w_x.cols),
            ("w_h", self.w_h.rows, self.w_h.cols),
            ("w_c", self.w_c.rows, self.w_c.cols),
            ("b", 1, self.b.len()),
        ]
    }
}

/// One LSTM step: returns `(h_t, c_t)`.
pub fn lstm_step<T: Real>(p: &CellParams<T>, x: &[T], h_prev: &[T], c_prev: &[T]) -> (Vec<T>, Vec<T>) {
    assert_eq!(p.kind, CellKind::Lstm);
    let hd = p.hidden;
    let mut gates = vec![T::zero(); 4 * hd];
    let (mut h, mut c, mut tc) = (vec![T::zero(); hd], vec![T::zero(); hd], vec![T::zero(); hd]);
    lstm_forward_step(p, x, h_prev, c_prev, &mut gates, &mut c, &mut tc, &mut h);
    (h, c)
}

/// One GRU step: returns `h_t`.
pub fn gru_step<T: Real>(p: &CellParams<T>, x: &[T], h_prev: &[T]) -> Vec<T> {
    assert_eq!(p.kind, CellKind::Gru);
    let hd = p.hidden;
    let mut gates = vec![T::zero(); 3 * hd];
    let (mut rh, mut h) = (vec![T::zero(); hd], vec![T::zero(); hd]);
    gru_forward_step(p, x, h_prev, &mut gates, &mut rh, &mut h);
    h
}

#[allow(clippy::too_many_arguments)]
#[inline]
fn lstm_forward_step<T: Real>(
    p: &CellParams<T>,
    x: &[T],
    h_prev: &[T],
    c_prev: &[T],
    gates: &mut [T],
    c: &mut [T],
    tc: &mut [T],
    h: &mut [T],
) {
    let hd = p.hidden;
    gates.copy_from_slice(&p.b);
    p.w_x.matvec_acc(x, gates);
    p.w_h.matvec_acc(h_prev, gates);
    let (pi, pf, po) = (p.w_c.row(0), p.w_c.row(1), p.w_c.row(2));
    for k in 0..hd {
        let i = sigmoid(gates[k] + pi[k] * c_prev[k]);
        let f = sigmoid(gates[hd + k] + pf[k] * c_prev[k]);
        let g = gates[3 * hd + k].tanh();
        let ck = f * c_prev[k] + i * g;
        let o = sigmoid(gates[2 * hd + k] + po[k] * ck);
        let t = ck.tanh();
        gates[k] = i;
        gates[hd + k] = f;
        gates[2 * hd + k] = o;
        gates[3 * hd + k] = g;
        c[k] = ck;
        tc[k] = t;
        h[k] = o * t;
    }
}

#[inline]
fn gru_forward_step<T: Real>(p: &CellParams<T>, x: &[T], h_prev: &[T], gates: &mut [T], rh: &mut [T], h: &mut [T]) {
    let hd = p.hidden;
    gates.copy_from_slice(&p.b);
    p.w_x.matvec_acc(x, gates);
    p.w_h.matvec_rows_acc(0..2 * hd, h_prev, &mut gates[..2 * hd]);
    for k in 0..2 * hd {
        gates[k] = sigmoid(gates[k]);
    }
    for k in 0..hd {
        rh[k] = gates[hd + k] * h_prev[k];
    }
    p.w_h.matvec_rows_acc(2 * hd..3 * hd, rh, &mut gates[2 * hd..]);
    for k in 0..hd {
        let n = gates[2 * hd + k].tanh();
        gates[2 * hd + k] = n;
        let z = gates[k];
        h[k] = (T::one() - z) * h_prev[k] + z * n;
    }
}

/// Activations of one pass over a sequence, kept for BPTT.
#[derive(Debug, Clone)]
pub struct SeqCache<T> {
    pub len: usize,
    /// `len × H` hidden states.
    pub h: Vec<T>,
    /// LSTM: gate activations `len × 4H`; GRU: `len × 3H`.
    gates: Vec<T>,
    /// LSTM: cell states; GRU: `r ∘ h_{t-1}`.
    aux: Vec<T>,
    /// LSTM: `tanh(c_t)`; unused for GRU.
    tc: Vec<T>,
}

impl<T: Real> SeqCache<T> {
    pub fn h_at(&self, t: usize, hidden: usize) -> &[T] {
        &self.h[t * hidden..(t + 1) * hidden]
    }
}

/// Runs the cell over `xs` (`len × d`, row-major) from zero state.
pub fn forward_sequence<T: Real>(p: &CellParams<T>, xs: &[T], len: usize) -> SeqCache<T> {
    let (hd, d, g) = (p.hidden, p.input, p.kind.gates());
    let zeros = vec![T::zero(); hd];
    let mut cache = SeqCache {
        len,
        h: vec![T::zero(); len * hd],
        gates: vec![T::zero(); len * g * hd],
        aux: vec![T::zero(); len * hd],
        tc: if p.kind == CellKind::Lstm { vec![T::zero(); len * hd] } else { Vec::new() },
    };
    for t in 0..len {
        let x = &xs[t * d..(t + 1) * d];
        let (h_done, h_rest) = cache.h.split_at_mut(t * hd);
        let h_prev = if t == 0 { &zeros[..] } else { &h_done[(t - 1) * hd..] };
        let h = &mut h_rest[..hd];
        let gates = &mut cache.gates[t * g * hd..(t + 1) * g * hd];
        match p.kind {
            CellKind::Lstm => {
                let (c_done, c_rest) = cache.aux.split_at_mut(t * hd);
                let c_prev = if t == 0 { &zeros[..] } else { &c_done[(t - 1) * hd..] };
                let tc = &mut cache.tc[t * hd..(t + 1) * hd];
                lstm_forward_step(p, x, h_prev, c_prev, gates, &mut c_rest[..hd], tc, h);
            }
            CellKind::Gru => {
                let rh = &mut cache.aux[t * hd..(t + 1) * hd];
                gru_forward_step(p, x, h_prev, gates, rh, h);
            }
        }
    }
    cache
}

/// BPTT through one pass. `dh` (`len × H`) is the loss gradient reaching
/// each hidden state from above; parameter gradients accumulate into
/// `grad`, and the gradient with respect to `xs` is returned.
pub fn backward_sequence<T: Real>(
    p: &CellParams<T>,
    xs: &[T],
    cache: &SeqCache<T>,
    dh: &[T],
    grad: &mut CellParams<T>,
) -> Vec<T> {
    let (hd, d, g, len) = (p.hidden, p.input, p.kind.gates(), cache.len);
    let zeros = vec![T::zero(); hd];
    let mut dx = vec![T::zero(); len * d];
    let mut dh_next = vec![T::zero(); hd];
    let mut dc_next = vec![T::zero(); hd];
    let mut dpre = vec![T::zero(); g * hd];
    for t in (0..len).rev() {
        let x = &xs[t * d..(t + 1) * d];
        let h_prev = if t == 0 { &zeros[..] } else { cache.h_at(t - 1, hd) };
        let gates = &cache.gates[t * g * hd..(t + 1) * g * hd];
        let mut dh_t: Vec<T> = (0..hd).map(|k| dh[t * hd + k] + dh_next[k]).collect();
        match p.kind {
            CellKind::Lstm => {
                let c_prev = if t == 0 { &zeros[..] } else { &cache.aux[(t - 1) * hd..t * hd] };
                let c = &cache.aux[t * hd..(t + 1) * hd];
                let tc = &cache.tc[t * hd..(t + 1) * hd];
                let (pi, pf, po) = (p.w_c.row(0), p.w_c.row(1), p.w_c.row(2));
                let gcols = grad.w_c.cols;
                for k in 0..hd {
                    let (i, f, o, gg) = (gates[k], gates[hd + k], gates[2 * hd + k], gates[3 * hd + k]);
                    let one = T::one();
                    let dao = dh_t[k] * tc[k] * o * (one - o);
                    let dc = dc_next[k] + dh_t[k] * o * (one - tc[k] * tc[k]) + dao * po[k];
                    let daf = dc * c_prev[k] * f * (one - f);
                    let dai = dc * gg * i * (one - i);
                    let dag = dc * i * (one - gg * gg);
                    dc_next[k] = dc * f + dai * pi[k] + daf * pf[k];
                    grad.w_c.data[k] += dai * c_prev[k];
                    grad.w_c.data[gcols + k] += daf * c_prev[k];
                    grad.w_c.data[2 * gcols + k] += dao * c[k];
                    dpre[k] = dai;
                    dpre[hd + k] = daf;
                    dpre[2 * hd + k] = dao;
                    dpre[3 * hd + k] = dag;
                }
                dh_next.iter_mut().for_each(|v| *v = T::zero());
                p.w_h.matvec_t_acc(&dpre, &mut dh_next);
                grad.w_h.add_outer(&dpre, h_prev);
            }
            CellKind::Gru => {
                let rh = &cache.aux[t * hd..(t + 1) * hd];
                let one = T::one();
                for k in 0..hd {
                    let (z, n) = (gates[k], gates[2 * hd + k]);
                    dpre[k] = dh_t[k] * (n - h_prev[k]) * z * (one - z);
                    dpre[2 * hd + k] = dh_t[k] * z * (one - n * n);
                }
                let mut drh = vec![T::zero(); hd];
                p.w_h.matvec_t_rows_acc(2 * hd..3 * hd, &dpre[2 * hd..], &mut drh);
                for k in 0..hd {
                    let r = gates[hd + k];
                    dpre[hd + k] = drh[k] * h_prev[k] * r * (one - r);
                }
                for k in 0..hd {
                    dh_next[k] = dh_t[k] * (one - gates[k]) + drh[k] * gates[hd + k];
                }
                p.w_h.matvec_t_rows_acc(0..2 * hd, &dpre[..2 * hd], &mut dh_next);
                grad.w_h.add_outer_rows(0..2 * hd, &dpre[..2 * hd], h_prev);
                grad.w_h.add_outer_rows(2 * hd..3 * hd, &dpre[2 * hd..], rh);
            }
        }
        grad.w_x.add_outer(&dpre, x);
        for (gb, &v) in grad.b.iter_mut().zip(&dpre) {
            *gb += v;
        }
        p.w_x.matvec_t_acc(&dpre, &mut dx[t * d..(t + 1) * d]);
        dh_t.clear();
    }
    dx
}
