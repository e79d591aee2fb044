use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::model::{Example, SequenceModel, SequenceModelParams, BN_MOMENTUM};
use crate::error::{Error, Result};
use crate::mfcc::FeatureMatrix;
use crate::scalar::Real;
use crate::seed::derive_seed;

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainSchedule {
    pub initial_lr: f64,
    /// Epochs without validation improvement before the rate is halved.
    pub patience: usize,
    pub min_lr: f64,
    pub max_epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainSchedule {
    fn default() -> Self {
        TrainSchedule { initial_lr: 0.002, patience: 5, min_lr: 1e-5, max_epochs: 100, batch_size: 32, seed: 0 }
    }
}

impl TrainSchedule {
    pub fn validate(&self) -> Result<()> {
        if !(self.min_lr > 0.0 && self.min_lr < self.initial_lr) {
            return Err(Error::InvalidArgument("need 0 < min_lr < initial_lr".into()));
        }
        if self.max_epochs == 0 || self.batch_size == 0 || self.patience == 0 {
            return Err(Error::InvalidArgument("max_epochs, batch_size and patience must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    MinLearningRate,
    MaxEpochs,
}

/// Plateau halving: the rate halves after `patience` consecutive epochs
/// that fail to beat the best validation accuracy so far.
#[derive(Debug, Clone)]
pub struct PlateauSchedule {
    pub lr: f64,
    pub best: f64,
    stale: usize,
    patience: usize,
    min_lr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlateauStep {
    Improved,
    Stale,
    Halved,
    Stop,
}

impl PlateauSchedule {
    pub fn new(schedule: &TrainSchedule, baseline_accuracy: f64) -> Self {
        PlateauSchedule {
            lr: schedule.initial_lr,
            best: baseline_accuracy,
            stale: 0,
            patience: schedule.patience,
            min_lr: schedule.min_lr,
        }
    }

    pub fn observe(&mut self, accuracy: f64) -> PlateauStep {
        if accuracy > self.best {
            self.best = accuracy;
            self.stale = 0;
            return PlateauStep::Improved;
        }
        self.stale += 1;
        if self.stale < self.patience {
            return PlateauStep::Stale;
        }
        self.stale = 0;
        self.lr /= 2.0;
        if self.lr < self.min_lr {
            PlateauStep::Stop
        } else {
            PlateauStep::Halved
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub lr: f64,
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub val_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainHistory {
    /// Validation accuracy of the initial parameters.
    pub initial_val_accuracy: f64,
    pub epochs: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_val_accuracy: f64,
    pub stop_reason: StopReason,
}

impl TrainHistory {
    /// One line per epoch: `epoch lr train_loss train_acc val_acc`.
    pub fn to_log(&self) -> String {
        let mut s = String::from("epoch lr train_loss train_acc val_acc\n");
        for e in &self.epochs {
            let _ = writeln!(
                s,
                "{} {:.6e} {:.6} {:.4} {:.4}",
                e.epoch, e.lr, e.train_loss, e.train_accuracy, e.val_accuracy
            );
        }
        s
    }
}

struct Adam<T> {
    m: SequenceModelParams<T>,
    v: SequenceModelParams<T>,
    t: i32,
}

impl<T: Real> Adam<T> {
    fn new(like: &SequenceModel<T>) -> Self {
        Adam { m: SequenceModelParams::zeros(&like.config), v: SequenceModelParams::zeros(&like.config), t: 0 }
    }

    fn step(&mut self, params: &mut SequenceModelParams<T>, grad: &SequenceModelParams<T>, lr: f64) {
        self.t += 1;
        let (b1, b2) = (T::of(ADAM_BETA1), T::of(ADAM_BETA2));
        let c1 = T::one() - b1.powi(self.t);
        let c2 = T::one() - b2.powi(self.t);
        let (lr, eps, one) = (T::of(lr), T::of(ADAM_EPS), T::one());
        let tensors =
            params.tensors_mut().into_iter().zip(grad.tensors()).zip(self.m.tensors_mut()).zip(self.v.tensors_mut());
        for (((p, g), m), v) in tensors {
            for i in 0..p.len() {
                m[i] = b1 * m[i] + (one - b1) * g[i];
                v[i] = b2 * v[i] + (one - b2) * g[i] * g[i];
                let m_hat = m[i] / c1;
                let v_hat = v[i] / c2;
                p[i] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
    }
}

/// Exponential moving average of batch statistics with the start-up bias
/// divided out, so early estimates are not pulled toward the initial value.
struct RunningStats<T> {
    mean: Vec<T>,
    var: Vec<T>,
    updates: i32,
}

impl<T: Real> RunningStats<T> {
    fn update(&mut self, mean: &[T], var: &[T], model: &mut SequenceModel<T>) {
        let m = T::of(BN_MOMENTUM);
        self.updates += 1;
        let correction = T::one() - m.powi(self.updates);
        for k in 0..self.mean.len() {
            self.mean[k] = m * self.mean[k] + (T::one() - m) * mean[k];
            self.var[k] = m * self.var[k] + (T::one() - m) * var[k];
            model.bn_running_mean[k] = self.mean[k] / correction;
            model.bn_running_var[k] = self.var[k] / correction;
        }
    }
}

/// Per-coefficient mean and population std over every training frame; a
/// constant coefficient gets std 1.
pub fn feature_statistics<T: Real>(data: &[FeatureMatrix<T>]) -> (Vec<T>, Vec<T>) {
    let d = data.first().map(|f| f.n_coefficients).unwrap_or(0);
    let mut sum = vec![0.0f64; d];
    let mut sq = vec![0.0f64; d];
    let mut n = 0usize;
    for fm in data {
        for row in fm.rows() {
            for (j, &v) in row.iter().enumerate() {
                let v = v.to_f64_lossy();
                sum[j] += v;
                sq[j] += v * v;
            }
            n += 1;
        }
    }
    let n = n.max(1) as f64;
    let mean: Vec<f64> = sum.iter().map(|s| s / n).collect();
    let std = sq
        .iter()
        .zip(&mean)
        .map(|(s, m)| {
            let sd = (s / n - m * m).max(0.0).sqrt();
            if sd > 1e-12 {
                sd
            } else {
                1.0
            }
        })
        .collect::<Vec<f64>>();
    (mean.into_iter().map(T::of).collect(), std.into_iter().map(T::of).collect())
}

struct Prepared<T> {
    features: Vec<T>,
    len: usize,
    label: usize,
}

fn prepare<T: Real>(model: &SequenceModel<T>, data: &[FeatureMatrix<T>]) -> Result<Vec<Prepared<T>>> {
    data.iter()
        .map(|fm| {
            if fm.n_coefficients != model.config.input_dim {
                return Err(Error::Shape(format!(
                    "{} has {} coefficients, model expects {}",
                    fm.segment_id, fm.n_coefficients, model.config.input_dim
                )));
            }
            let label = fm
                .label
                .class_index()
                .ok_or_else(|| Error::InvalidArgument(format!("{} is unlabeled", fm.segment_id)))?;
            Ok(Prepared { features: model.normalize(&fm.data), len: fm.n_frames(), label })
        })
        .collect()
}

fn accuracy<T: Real>(model: &SequenceModel<T>, data: &[Prepared<T>]) -> Result<f64> {
    if data.is_empty() {
        return Ok(0.0);
    }
    let mut correct = 0;
    for ex in data {
        let logits = model.logits_normalized(&ex.features)?;
        let predicted = if logits[1] >= logits[0] { 1 } else { 0 };
        correct += (predicted == ex.label) as usize;
    }
    Ok(correct as f64 / data.len() as f64)
}

/// Mini-batch Adam with plateau halving; returns the parameters with the
/// best validation accuracy (the initial ones if no epoch improves).
pub fn train<T: Real>(
    init: SequenceModel<T>,
    train_set: &[FeatureMatrix<T>],
    val_set: &[FeatureMatrix<T>],
    schedule: &TrainSchedule,
) -> Result<(SequenceModel<T>, TrainHistory)> {
    schedule.validate()?;
    if train_set.is_empty() {
        return Err(Error::Empty("training set".into()));
    }
    if val_set.is_empty() {
        return Err(Error::Empty("validation set".into()));
    }
    let first = train_set[0].label;
    if train_set.iter().all(|f| f.label == first) {
        return Err(Error::SingleClass);
    }
    let mut model = init;
    let (mean, std) = feature_statistics(train_set);
    model.feature_mean = mean;
    model.feature_std = std;
    let train_data = prepare(&model, train_set)?;
    let val_data = prepare(&model, val_set)?;

    let mut adam = Adam::new(&model);
    let dense = model.config.dense;
    let mut running = RunningStats { mean: vec![T::zero(); dense], var: vec![T::zero(); dense], updates: 0 };
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(schedule.seed, "batches"));
    let initial_val = accuracy(&model, &val_data)?;
    let mut plateau = PlateauSchedule::new(schedule, initial_val);
    let mut best = model.clone();
    let mut best_epoch = 0;
    let mut epochs = Vec::new();
    let mut order: Vec<usize> = (0..train_data.len()).collect();
    let mut stop_reason = StopReason::MaxEpochs;

    for epoch in 1..=schedule.max_epochs {
        let lr = plateau.lr;
        order.shuffle(&mut rng);
        let (mut loss_sum, mut correct) = (0.0, 0usize);
        for chunk in order.chunks(schedule.batch_size) {
            let batch: Vec<Example<'_, T>> = chunk
                .iter()
                .map(|&i| Example {
                    features: &train_data[i].features,
                    len: train_data[i].len,
                    label: train_data[i].label,
                })
                .collect();
            let g = model.batch_gradient(&batch)?;
            loss_sum += g.loss.to_f64_lossy() * chunk.len() as f64;
            correct += g.correct;
            adam.step(&mut model.params, &g.grad, lr);
            running.update(&g.bn_mean, &g.bn_var, &mut model);
        }
        if !model.params.all_finite() {
            return Err(Error::InvalidArgument(format!("training diverged in epoch {epoch}")));
        }
        let val_accuracy = accuracy(&model, &val_data)?;
        epochs.push(EpochRecord {
            epoch,
            lr,
            train_loss: loss_sum / train_data.len() as f64,
            train_accuracy: correct as f64 / train_data.len() as f64,
            val_accuracy,
        });
        log::debug!("epoch {epoch} lr {lr:.2e} loss {:.4} val {val_accuracy:.4}", loss_sum / train_data.len() as f64);
        let step = plateau.observe(val_accuracy);
        if step == PlateauStep::Improved {
            best = model.clone();
            best_epoch = epoch;
        }
        if step == PlateauStep::Stop {
            stop_reason = StopReason::MinLearningRate;
            break;
        }
    }
    best.meta = super::model::TrainingMeta {
        seed: schedule.seed,
        epochs_run: epochs.len(),
        best_epoch,
        best_val_accuracy: plateau.best,
        initial_lr: schedule.initial_lr,
        min_lr: schedule.min_lr,
        patience: schedule.patience,
        max_epochs: schedule.max_epochs,
        batch_size: schedule.batch_size,
    };
    let history = TrainHistory {
        initial_val_accuracy: initial_val,
        epochs,
        best_epoch,
        best_val_accuracy: plateau.best,
        stop_reason,
    };
    Ok((best, history))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stagnant_accuracy_halves_every_patience_epochs() {
        let s = TrainSchedule::default();
        let mut p = PlateauSchedule::new(&s, 0.5);
        let mut trace = Vec::new();
        loop {
            trace.push(p.lr);
            if p.observe(0.5) == PlateauStep::Stop {
                break;
            }
        }
        assert_eq!(trace.len(), 40);
        for (e, lr) in trace.iter().enumerate() {
            assert_eq!(*lr, 0.002 / 2f64.powi((e / 5) as i32), "epoch {}", e + 1);
        }
        assert!(p.lr < 1e-5);
    }

    #[test]
    fn improvement_resets_patience() {
        let s = TrainSchedule::default();
        let mut p = PlateauSchedule::new(&s, 0.5);
        for _ in 0..4 {
            assert_eq!(p.observe(0.5), PlateauStep::Stale);
        }
        assert_eq!(p.observe(0.6), PlateauStep::Improved);
        for _ in 0..4 {
            assert_eq!(p.observe(0.6), PlateauStep::Stale);
        }
        assert_eq!(p.observe(0.55), PlateauStep::Halved);
        assert_eq!(p.lr, 0.001);
    }

    #[test]
    fn schedule_validation() {
        assert!(TrainSchedule { min_lr: 0.01, ..Default::default() }.validate().is_err());
        assert!(TrainSchedule { max_epochs: 0, ..Default::default() }.validate().is_err());
    }
}
