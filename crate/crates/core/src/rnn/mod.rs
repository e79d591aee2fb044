//! Recurrent sequence classifiers written from scratch: LSTM with
//! peepholes, GRU, their bidirectional variants, a dense + batch-norm +
//! softmax head, BPTT gradients and Adam training.

pub mod cell;
pub mod io;
pub mod matrix;
pub mod model;
pub mod predict;
pub mod train;

pub use cell::{backward_sequence, forward_sequence, gru_step, lstm_step, CellKind, CellParams};
pub use matrix::Matrix;
pub use model::{
    Architecture, BatchGradient, Example, Layer, ModelConfig, Readout, SequenceModel, SequenceModelParams,
    TrainingMeta, BN_EPS, BN_MOMENTUM, N_CLASSES, N_LAYERS,
};
pub use predict::{aggregate_posteriors, predict_recording, Decision};
pub use train::{
    feature_statistics, train, EpochRecord, PlateauSchedule, PlateauStep, StopReason, TrainHistory, TrainSchedule,
};

/// Runs `cell` over `xs` and over `xs` reversed, returning the `len × 2H`
/// rows `concat(h_f[i], h_b[len - 1 - i])`.
pub fn bidirectional_forward<T: crate::scalar::Real>(
    fwd: &CellParams<T>,
    bwd: &CellParams<T>,
    xs: &[T],
    len: usize,
) -> crate::Result<Vec<T>> {
    if len == 0 {
        return Err(crate::Error::Empty("sequence".into()));
    }
    if xs.len() != len * fwd.input || fwd.input != bwd.input || fwd.hidden != bwd.hidden {
        return Err(crate::Error::Shape("bidirectional input does not match the cells".into()));
    }
    let h = fwd.hidden;
    let f = forward_sequence(fwd, xs, len);
    let mut rev = Vec::with_capacity(xs.len());
    for t in (0..len).rev() {
        rev.extend_from_slice(&xs[t * fwd.input..(t + 1) * fwd.input]);
    }
    let b = forward_sequence(bwd, &rev, len);
    let mut out = Vec::with_capacity(len * 2 * h);
    for i in 0..len {
        out.extend_from_slice(f.h_at(i, h));
        out.extend_from_slice(b.h_at(len - 1 - i, h));
    }
    Ok(out)
}
