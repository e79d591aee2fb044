use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cell::{backward_sequence, forward_sequence, CellKind, CellParams, SeqCache};
use super::matrix::Matrix;
use crate::error::{Error, Result};
use crate::scalar::{softmax, Real};

pub const N_LAYERS: usize = 2;
pub const N_CLASSES: usize = 2;
pub const BN_EPS: f64 = 1e-5;
pub const BN_MOMENTUM: f64 = 0.99;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Architecture {
    Lstm,
    Gru,
    Blstm,
    BiGru,
}

impl Architecture {
    pub const ALL: [Architecture; 4] =
        [Architecture::Lstm, Architecture::Gru, Architecture::Blstm, Architecture::BiGru];

    pub fn cell_kind(self) -> CellKind {
        match self {
            Architecture::Lstm | Architecture::Blstm => CellKind::Lstm,
            Architecture::Gru | Architecture::BiGru => CellKind::Gru,
        }
    }

    pub fn bidirectional(self) -> bool {
        matches!(self, Architecture::Blstm | Architecture::BiGru)
    }

    pub fn name(self) -> &'static str {
        match self {
            Architecture::Lstm => "lstm",
            Architecture::Gru => "gru",
            Architecture::Blstm => "blstm",
            Architecture::BiGru => "bigru",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            Architecture::Lstm => "LSTM",
            Architecture::Gru => "GRU",
            Architecture::Blstm => "BLSTM",
            Architecture::BiGru => "BiGRU",
        }
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Architecture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "lstm" => Ok(Architecture::Lstm),
            "gru" => Ok(Architecture::Gru),
            "blstm" => Ok(Architecture::Blstm),
            "bigru" => Ok(Architecture::BiGru),
            other => Err(Error::InvalidArgument(format!("unknown architecture {other:?}"))),
        }
    }
}

/// How the top recurrent layer's outputs are reduced to one vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Readout {
    /// Output row of the final frame.
    Last,
    /// Mean of all output rows.
    Mean,
}

impl fmt::Display for Readout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Readout::Last => "last",
            Readout::Mean => "mean",
        })
    }
}

impl FromStr for Readout {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "last" => Ok(Readout::Last),
            "mean" => Ok(Readout::Mean),
            other => Err(Error::InvalidArgument(format!("unknown readout {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelConfig {
    pub arch: Architecture,
    pub input_dim: usize,
    pub hidden: usize,
    pub dense: usize,
    pub readout: Readout,
}

impl ModelConfig {
    pub fn new(arch: Architecture, input_dim: usize, hidden: usize, dense: usize) -> Self {
        ModelConfig { arch, input_dim, hidden, dense, readout: Readout::Last }
    }

    /// Width of a recurrent layer's output row.
    pub fn layer_width(&self) -> usize {
        if self.arch.bidirectional() {
            2 * self.hidden
        } else {
            self.hidden
        }
    }

    fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.hidden == 0 || self.dense == 0 {
            return Err(Error::InvalidArgument("model dimensions must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer<T> {
    pub fwd: CellParams<T>,
    pub bwd: Option<CellParams<T>>,
}

/// Every trainable tensor. Also used, zero-initialised, as the gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceModelParams<T> {
    pub layers: Vec<Layer<T>>,
    /// `dense × layer_width`.
    pub dense_w: Matrix<T>,
    pub dense_b: Vec<T>,
    pub bn_gamma: Vec<T>,
    pub bn_beta: Vec<T>,
    /// `2 × dense`.
    pub out_w: Matrix<T>,
    pub out_b: Vec<T>,
}

impl<T: Real> SequenceModelParams<T> {
    pub fn zeros(cfg: &ModelConfig) -> Self {
        let kind = cfg.arch.cell_kind();
        let layers = (0..N_LAYERS)
            .map(|l| {
                let d = if l == 0 { cfg.input_dim } else { cfg.layer_width() };
                Layer {
                    fwd: CellParams::zeros(kind, d, cfg.hidden),
                    bwd: cfg.arch.bidirectional().then(|| CellParams::zeros(kind, d, cfg.hidden)),
                }
            })
            .collect();
        SequenceModelParams {
            layers,
            dense_w: Matrix::zeros(cfg.dense, cfg.layer_width()),
            dense_b: vec![T::zero(); cfg.dense],
            bn_gamma: vec![T::zero(); cfg.dense],
            bn_beta: vec![T::zero(); cfg.dense],
            out_w: Matrix::zeros(N_CLASSES, cfg.dense),
            out_b: vec![T::zero(); N_CLASSES],
        }
    }

    pub fn init(cfg: &ModelConfig, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let kind = cfg.arch.cell_kind();
        let mut p = Self::zeros(cfg);
        for (l, layer) in p.layers.iter_mut().enumerate() {
            let d = if l == 0 { cfg.input_dim } else { cfg.layer_width() };
            layer.fwd = CellParams::init(kind, d, cfg.hidden, &mut rng);
            if let Some(b) = layer.bwd.as_mut() {
                *b = CellParams::init(kind, d, cfg.hidden, &mut rng);
            }
        }
        p.dense_w = Matrix::glorot(cfg.dense, cfg.layer_width(), 1, &mut rng);
        p.bn_gamma = vec![T::one(); cfg.dense];
        p.out_w = Matrix::glorot(N_CLASSES, cfg.dense, 1, &mut rng);
        p
    }

    /// `(name, rows, cols)` of every tensor, in the order of [`Self::tensors`].
    pub fn tensor_shapes(&self) -> Vec<(String, usize, usize)> {
        let mut out = Vec::new();
        for (l, layer) in self.layers.iter().enumerate() {
            let dirs = std::iter::once(("fwd", &layer.fwd)).chain(layer.bwd.as_ref().map(|b| ("bwd", b)));
            for (dir, cell) in dirs {
                for (name, r, c) in cell.tensor_shapes() {
                    out.push((format!("layer{l}.{dir}.{name}"), r, c));
                }
            }
        }
        out.push(("dense.w".into(), self.dense_w.rows, self.dense_w.cols));
        out.push(("dense.b".into(), 1, self.dense_b.len()));
        out.push(("bn.gamma".into(), 1, self.bn_gamma.len()));
        out.push(("bn.beta".into(), 1, self.bn_beta.len()));
        out.push(("out.w".into(), self.out_w.rows, self.out_w.cols));
        out.push(("out.b".into(), 1, self.out_b.len()));
        out
    }

    pub fn tensors(&self) -> Vec<&[T]> {
        let mut out: Vec<&[T]> = Vec::new();
        for layer in &self.layers {
            out.extend(layer.fwd.tensors());
            if let Some(b) = &layer.bwd {
                out.extend(b.tensors());
            }
        }
        out.extend([
            &self.dense_w.data[..],
            &self.dense_b[..],
            &self.bn_gamma[..],
            &self.bn_beta[..],
            &self.out_w.data[..],
            &self.out_b[..],
        ]);
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [T]> {
        let mut out: Vec<&mut [T]> = Vec::new();
        for layer in &mut self.layers {
            out.extend(layer.fwd.tensors_mut());
            if let Some(b) = &mut layer.bwd {
                out.extend(b.tensors_mut());
            }
        }
        out.extend([
            &mut self.dense_w.data[..],
            &mut self.dense_b[..],
            &mut self.bn_gamma[..],
            &mut self.bn_beta[..],
            &mut self.out_w.data[..],
            &mut self.out_b[..],
        ]);
        out
    }

    pub fn n_params(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn flatten(&self) -> Vec<T> {
        self.tensors().concat()
    }

    /// `self += other`, tensor by tensor.
    pub fn add_assign(&mut self, other: &Self) {
        for (a, b) in self.tensors_mut().into_iter().zip(other.tensors()) {
            for (x, &y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn all_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|v| v.is_finite()))
    }
}

/// Provenance stored with a trained model.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainingMeta {
    pub seed: u64,
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub best_val_accuracy: f64,
    pub initial_lr: f64,
    pub min_lr: f64,
    pub patience: usize,
    pub max_epochs: usize,
    pub batch_size: usize,
}

/// A classifier: parameters plus the non-trainable state inference needs.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceModel<T> {
    pub config: ModelConfig,
    pub params: SequenceModelParams<T>,
    pub bn_running_mean: Vec<T>,
    pub bn_running_var: Vec<T>,
    /// Per-coefficient z-score statistics of the training features.
    pub feature_mean: Vec<T>,
    pub feature_std: Vec<T>,
    pub meta: TrainingMeta,
}

/// One normalized example: `len × input_dim` row-major features and a class.
#[derive(Debug, Clone, Copy)]
pub struct Example<'a, T> {
    pub features: &'a [T],
    pub len: usize,
    pub label: usize,
}

struct LayerCache<T> {
    input: Vec<T>,
    reversed: Vec<T>,
    fwd: SeqCache<T>,
    bwd: Option<SeqCache<T>>,
}

struct Encoding<T> {
    layers: Vec<LayerCache<T>>,
    output: Vec<T>,
    len: usize,
}

/// Loss and gradient of one batch, plus the batch-norm statistics used.
#[derive(Debug, Clone)]
pub struct BatchGradient<T> {
    pub loss: T,
    pub grad: SequenceModelParams<T>,
    pub bn_mean: Vec<T>,
    pub bn_var: Vec<T>,
    /// Correct predictions under batch statistics.
    pub correct: usize,
}

fn reverse_rows<T: Real>(x: &[T], len: usize, width: usize) -> Vec<T> {
    let mut out = Vec::with_capacity(x.len());
    for t in (0..len).rev() {
        out.extend_from_slice(&x[t * width..(t + 1) * width]);
    }
    out
}

impl<T: Real> SequenceModel<T> {
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        Ok(Self::with_params(config, SequenceModelParams::init(&config, seed)))
    }

    /// All parameters zero (including the batch-norm scale).
    pub fn zeros(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self::with_params(config, SequenceModelParams::zeros(&config)))
    }

    pub fn with_params(config: ModelConfig, params: SequenceModelParams<T>) -> Self {
        SequenceModel {
            config,
            params,
            bn_running_mean: vec![T::zero(); config.dense],
            bn_running_var: vec![T::one(); config.dense],
            feature_mean: vec![T::zero(); config.input_dim],
            feature_std: vec![T::one(); config.input_dim],
            meta: TrainingMeta::default(),
        }
    }

    /// Applies the stored z-score to raw `len × input_dim` features.
    pub fn normalize(&self, raw: &[T]) -> Vec<T> {
        let d = self.config.input_dim;
        raw.chunks_exact(d)
            .flat_map(|row| row.iter().enumerate().map(|(j, &v)| (v - self.feature_mean[j]) / self.feature_std[j]))
            .collect()
    }

    fn check_input(&self, features: &[T]) -> Result<usize> {
        let d = self.config.input_dim;
        if !features.len().is_multiple_of(d) {
            return Err(Error::Shape(format!("{} feature values do not fill rows of {d}", features.len())));
        }
        let len = features.len() / d;
        if len < 2 {
            return Err(Error::Shape(format!("need at least 2 frames, got {len}")));
        }
        Ok(len)
    }

    fn encode(&self, x: &[T], len: usize) -> Encoding<T> {
        let h = self.config.hidden;
        let mut layers = Vec::with_capacity(N_LAYERS);
        let mut input = x.to_vec();
        for layer in &self.params.layers {
            let fwd = forward_sequence(&layer.fwd, &input, len);
            let (output, reversed, bwd) = match &layer.bwd {
                None => (fwd.h.clone(), Vec::new(), None),
                Some(cell) => {
                    let reversed = reverse_rows(&input, len, cell.input);
                    let bwd = forward_sequence(cell, &reversed, len);
                    let mut out = Vec::with_capacity(len * 2 * h);
                    for i in 0..len {
                        out.extend_from_slice(fwd.h_at(i, h));
                        out.extend_from_slice(bwd.h_at(len - 1 - i, h));
                    }
                    (out, reversed, Some(bwd))
                }
            };
            layers.push(LayerCache { input: std::mem::replace(&mut input, output), reversed, fwd, bwd });
        }
        Encoding { layers, output: input, len }
    }

    /// Output rows of the top recurrent layer (`len × layer_width`).
    pub fn recurrent_outputs(&self, normalized: &[T]) -> Result<Vec<T>> {
        let len = self.check_input(normalized)?;
        Ok(self.encode(normalized, len).output)
    }

    fn readout(&self, enc: &Encoding<T>) -> Vec<T> {
        let w = self.config.layer_width();
        match self.config.readout {
            Readout::Last => enc.output[(enc.len - 1) * w..].to_vec(),
            Readout::Mean => {
                let mut r = vec![T::zero(); w];
                for row in enc.output.chunks_exact(w) {
                    for (a, &b) in r.iter_mut().zip(row) {
                        *a += b;
                    }
                }
                let n = T::of_usize(enc.len);
                r.iter_mut().for_each(|v| *v /= n);
                r
            }
        }
    }

    fn dense(&self, r: &[T]) -> Vec<T> {
        let mut a = self.params.dense_b.clone();
        self.params.dense_w.matvec_acc(r, &mut a);
        a
    }

    /// Head after batch-norm: returns `(u = tanh(bn), logits)`.
    fn head(&self, a_hat: &[T]) -> (Vec<T>, Vec<T>) {
        let p = &self.params;
        let u: Vec<T> = a_hat.iter().enumerate().map(|(k, &v)| (p.bn_gamma[k] * v + p.bn_beta[k]).tanh()).collect();
        let mut logits = p.out_b.clone();
        p.out_w.matvec_acc(&u, &mut logits);
        (u, logits)
    }

    /// Inference logits on normalized features (running batch-norm stats).
    pub fn logits_normalized(&self, normalized: &[T]) -> Result<Vec<T>> {
        let len = self.check_input(normalized)?;
        let enc = self.encode(normalized, len);
        let a = self.dense(&self.readout(&enc));
        let eps = T::of(BN_EPS);
        let a_hat: Vec<T> = a
            .iter()
            .enumerate()
            .map(|(k, &v)| (v - self.bn_running_mean[k]) / (self.bn_running_var[k] + eps).sqrt())
            .collect();
        Ok(self.head(&a_hat).1)
    }

    /// Posterior `(P(normal), P(abnormal))` for raw features.
    pub fn forward_classify(&self, raw: &[T]) -> Result<[T; N_CLASSES]> {
        self.check_input(raw)?;
        let logits = self.logits_normalized(&self.normalize(raw))?;
        let p = softmax(&logits);
        Ok([p[0], p[1]])
    }

    /// Batch forward with batch statistics (training mode) and exact
    /// gradient of the mean cross-entropy.
    pub fn batch_gradient(&self, batch: &[Example<'_, T>]) -> Result<BatchGradient<T>> {
        self.batch_pass(batch, true).map(|(g, _)| g.expect("gradient requested"))
    }

    /// Mean cross-entropy of the batch in training mode.
    pub fn batch_loss(&self, batch: &[Example<'_, T>]) -> Result<T> {
        self.batch_pass(batch, false).map(|(_, loss)| loss)
    }

    fn batch_pass(&self, batch: &[Example<'_, T>], want_grad: bool) -> Result<(Option<BatchGradient<T>>, T)> {
        if batch.is_empty() {
            return Err(Error::Empty("batch".into()));
        }
        for ex in batch {
            if ex.features.len() != ex.len * self.config.input_dim {
                return Err(Error::Shape("example length does not match its features".into()));
            }
            if ex.len < 2 {
                return Err(Error::Shape(format!("need at least 2 frames, got {}", ex.len)));
            }
            if ex.label >= N_CLASSES {
                return Err(Error::InvalidArgument(format!("class {} out of range", ex.label)));
            }
        }
        let encodings: Vec<Encoding<T>> = batch.par_iter().map(|ex| self.encode(ex.features, ex.len)).collect();
        let rs: Vec<Vec<T>> = encodings.iter().map(|e| self.readout(e)).collect();
        let a: Vec<Vec<T>> = rs.iter().map(|r| self.dense(r)).collect();

        let (nb, dd) = (T::of_usize(batch.len()), self.config.dense);
        let eps = T::of(BN_EPS);
        let mut mu = vec![T::zero(); dd];
        let mut var = vec![T::zero(); dd];
        for ab in &a {
            for k in 0..dd {
                mu[k] += ab[k];
            }
        }
        mu.iter_mut().for_each(|v| *v /= nb);
        for ab in &a {
            for k in 0..dd {
                var[k] += (ab[k] - mu[k]) * (ab[k] - mu[k]);
            }
        }
        var.iter_mut().for_each(|v| *v /= nb);
        let inv_std: Vec<T> = var.iter().map(|&v| T::one() / (v + eps).sqrt()).collect();
        let a_hat: Vec<Vec<T>> = a.iter().map(|ab| (0..dd).map(|k| (ab[k] - mu[k]) * inv_std[k]).collect()).collect();

        let mut loss = T::zero();
        let mut correct = 0;
        let mut heads = Vec::with_capacity(batch.len());
        for (ex, ah) in batch.iter().zip(&a_hat) {
            let (u, logits) = self.head(ah);
            let p = softmax(&logits);
            loss -= p[ex.label].max(T::min_positive_value()).ln();
            let predicted = if p[1] >= p[0] { 1 } else { 0 };
            correct += (predicted == ex.label) as usize;
            heads.push((u, p));
        }
        loss /= nb;
        if !want_grad {
            return Ok((None, loss));
        }

        let p = &self.params;
        let mut grad = SequenceModelParams::zeros(&self.config);
        let mut d_ahat = Vec::with_capacity(batch.len());
        for (ex, (u, prob)) in batch.iter().zip(&heads) {
            let dlogits: Vec<T> =
                (0..N_CLASSES).map(|c| (prob[c] - if c == ex.label { T::one() } else { T::zero() }) / nb).collect();
            grad.out_w.add_outer(&dlogits, u);
            for (g, &v) in grad.out_b.iter_mut().zip(&dlogits) {
                *g += v;
            }
            let mut du = vec![T::zero(); dd];
            p.out_w.matvec_t_acc(&dlogits, &mut du);
            d_ahat.push(du.iter().zip(u).map(|(&d, &uk)| d * (T::one() - uk * uk)).collect::<Vec<T>>());
        }
        // d_ahat holds dL/dy; turn it into dL/dâ after the scale/shift grads
        for (dy, ah) in d_ahat.iter_mut().zip(&a_hat) {
            for k in 0..dd {
                grad.bn_gamma[k] += dy[k] * ah[k];
                grad.bn_beta[k] += dy[k];
                dy[k] *= p.bn_gamma[k];
            }
        }
        let mut sum_d = vec![T::zero(); dd];
        let mut sum_dx = vec![T::zero(); dd];
        for (dah, ah) in d_ahat.iter().zip(&a_hat) {
            for k in 0..dd {
                sum_d[k] += dah[k];
                sum_dx[k] += dah[k] * ah[k];
            }
        }
        let drs: Vec<Vec<T>> = d_ahat
            .iter()
            .zip(&a_hat)
            .zip(&rs)
            .map(|((dah, ah), r)| {
                let da: Vec<T> =
                    (0..dd).map(|k| inv_std[k] / nb * (nb * dah[k] - sum_d[k] - ah[k] * sum_dx[k])).collect();
                grad.dense_w.add_outer(&da, r);
                for (g, &v) in grad.dense_b.iter_mut().zip(&da) {
                    *g += v;
                }
                let mut dr = vec![T::zero(); r.len()];
                p.dense_w.matvec_t_acc(&da, &mut dr);
                dr
            })
            .collect();

        let layer_grads: Vec<Vec<Layer<T>>> =
            encodings.par_iter().zip(drs.par_iter()).map(|(enc, dr)| self.backward_recurrent(enc, dr)).collect();
        for lg in &layer_grads {
            for (acc, g) in grad.layers.iter_mut().zip(lg) {
                add_cell(&mut acc.fwd, &g.fwd);
                if let (Some(a), Some(b)) = (acc.bwd.as_mut(), g.bwd.as_ref()) {
                    add_cell(a, b);
                }
            }
        }
        Ok((Some(BatchGradient { loss, grad, bn_mean: mu, bn_var: var, correct }), loss))
    }

    fn backward_recurrent(&self, enc: &Encoding<T>, dr: &[T]) -> Vec<Layer<T>> {
        let (h, w, len) = (self.config.hidden, self.config.layer_width(), enc.len);
        let mut dout = vec![T::zero(); len * w];
        match self.config.readout {
            Readout::Last => dout[(len - 1) * w..].copy_from_slice(dr),
            Readout::Mean => {
                let n = T::of_usize(len);
                for row in dout.chunks_exact_mut(w) {
                    for (a, &b) in row.iter_mut().zip(dr) {
                        *a = b / n;
                    }
                }
            }
        }
        let mut grads: Vec<Layer<T>> = self
            .params
            .layers
            .iter()
            .map(|l| Layer {
                fwd: CellParams::zeros(l.fwd.kind, l.fwd.input, l.fwd.hidden),
                bwd: l.bwd.as_ref().map(|b| CellParams::zeros(b.kind, b.input, b.hidden)),
            })
            .collect();
        for l in (0..N_LAYERS).rev() {
            let (layer, cache) = (&self.params.layers[l], &enc.layers[l]);
            let dx = match (&layer.bwd, &cache.bwd) {
                (None, _) => backward_sequence(&layer.fwd, &cache.input, &cache.fwd, &dout, &mut grads[l].fwd),
                (Some(bcell), Some(bcache)) => {
                    let mut dhf = Vec::with_capacity(len * h);
                    let mut dhb = vec![T::zero(); len * h];
                    for i in 0..len {
                        let row = &dout[i * w..(i + 1) * w];
                        dhf.extend_from_slice(&row[..h]);
                        dhb[(len - 1 - i) * h..(len - i) * h].copy_from_slice(&row[h..]);
                    }
                    let mut dx = backward_sequence(&layer.fwd, &cache.input, &cache.fwd, &dhf, &mut grads[l].fwd);
                    let bgrad = grads[l].bwd.as_mut().expect("bidirectional gradient");
                    let dxr = backward_sequence(bcell, &cache.reversed, bcache, &dhb, bgrad);
                    let d = layer.fwd.input;
                    for i in 0..len {
                        let src = &dxr[(len - 1 - i) * d..(len - i) * d];
                        for (a, &b) in dx[i * d..(i + 1) * d].iter_mut().zip(src) {
                            *a += b;
                        }
                    }
                    dx
                }
                (Some(_), None) => unreachable!("bidirectional layer without backward cache"),
            };
            dout = dx;
        }
        grads
    }
}

fn add_cell<T: Real>(acc: &mut CellParams<T>, g: &CellParams<T>) {
    for (a, b) in acc.tensors_mut().into_iter().zip(g.tensors()) {
        for (x, &y) in a.iter_mut().zip(b) {
            *x += y;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_model_is_undecided() {
        for arch in Architecture::ALL {
            let m = SequenceModel::<f64>::zeros(ModelConfig::new(arch, 3, 4, 5)).unwrap();
            let p = m.forward_classify(&[0.1, 0.2, 0.3, -1.0, 0.5, 2.0]).unwrap();
            assert_eq!(p, [0.5, 0.5]);
        }
    }

    #[test]
    fn one_frame_is_rejected() {
        let m = SequenceModel::<f64>::new(ModelConfig::new(Architecture::Gru, 3, 4, 5), 1).unwrap();
        assert!(m.forward_classify(&[0.1, 0.2, 0.3]).is_err());
        assert!(m.forward_classify(&[0.1, 0.2, 0.3, 0.4]).is_err());
    }

    #[test]
    fn shapes_match_tensors() {
        for arch in Architecture::ALL {
            let p = SequenceModelParams::<f64>::init(&ModelConfig::new(arch, 13, 8, 6), 3);
            let shapes = p.tensor_shapes();
            let tensors = p.tensors();
            assert_eq!(shapes.len(), tensors.len());
            for ((name, r, c), t) in shapes.iter().zip(tensors) {
                assert_eq!(r * c, t.len(), "{name}");
            }
        }
    }

    #[test]
    fn architecture_names_parse() {
        for a in Architecture::ALL {
            assert_eq!(a.name().parse::<Architecture>().unwrap(), a);
        }
        assert!("rnn".parse::<Architecture>().is_err());
    }
}
