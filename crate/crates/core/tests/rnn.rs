mod common;

use common::{max_gradient_error, random_model, Batch};
use pcgnet::dataset::Label;
use pcgnet::mfcc::FeatureMatrix;
use pcgnet::rnn::{
    bidirectional_forward, forward_sequence, gru_step, lstm_step, train, Architecture, CellKind, CellParams, Example,
    ModelConfig, Readout, SequenceModel, TrainSchedule,
};
use pcgnet::scalar::softmax;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_cell(kind: CellKind, d: usize, h: usize, seed: u64, scale: f64) -> CellParams<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p = CellParams::zeros(kind, d, h);
    for t in p.tensors_mut() {
        t.iter_mut().for_each(|v| *v = rng.gen_range(-scale..scale));
    }
    p
}

#[test]
fn mean_readout_gradients_match_finite_differences() {
    for arch in Architecture::ALL {
        for seed in 0..3 {
            let mut model = random_model(arch, 3, 4, 3, seed);
            model.config.readout = Readout::Mean;
            let (err, at) = max_gradient_error(&model, &Batch::random(3, 5, 3, seed + 50), 1e-5);
            assert!(err < 1e-4, "{arch} seed {seed}: {err:e} at {at}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lstm_state_stays_bounded(seed in any::<u64>(), scale in 0.1f64..5.0) {
        let p = random_cell(CellKind::Lstm, 3, 4, seed, scale);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let x: Vec<f64> = (0..3).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let hp: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let cp: Vec<f64> = (0..4).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let (h, c) = lstm_step(&p, &x, &hp, &cp);
        for k in 0..4 {
            prop_assert!(h[k].abs() <= 1.0);
            prop_assert!(c[k].abs() <= cp[k].abs() + 1.0);
        }
    }

    #[test]
    fn gru_output_interpolates_previous_state_and_candidate(seed in any::<u64>(), scale in 0.1f64..5.0) {
        let p = random_cell(CellKind::Gru, 3, 4, seed, scale);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 2);
        let x: Vec<f64> = (0..3).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let hp: Vec<f64> = (0..4).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let h = gru_step(&p, &x, &hp);
        for k in 0..4 {
            prop_assert!(h[k].abs() <= hp[k].abs().max(1.0));
        }
    }

    #[test]
    fn softmax_ignores_a_common_shift(a in -50.0f64..50.0, b in -50.0f64..50.0, shift in -100.0f64..100.0) {
        let p = softmax(&[a, b]);
        let q = softmax(&[a + shift, b + shift]);
        prop_assert!((p[0] - q[0]).abs() < 1e-12 && (p[1] - q[1]).abs() < 1e-12);
        prop_assert!((p[0] + p[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn duplicating_a_batch_leaves_the_gradient_unchanged(seed in 0u64..1000, arch_i in 0usize..4) {
        let arch = Architecture::ALL[arch_i];
        let model = random_model(arch, 2, 3, 3, seed);
        let batch = Batch::random(3, 4, 2, seed + 7);
        let once = batch.examples();
        let twice: Vec<Example<'_, f64>> = once.iter().chain(once.iter()).copied().collect();
        let g1 = model.batch_gradient(&once).unwrap();
        let g2 = model.batch_gradient(&twice).unwrap();
        prop_assert!((g1.loss - g2.loss).abs() <= 1e-12 * g1.loss.abs().max(1.0));
        let flat = g1.grad.flatten();
        let floor = 1e-10 * flat.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (a, b) in flat.iter().zip(g2.grad.flatten()) {
            prop_assert!((a - b).abs() <= 1e-10 * a.abs() + floor, "{:e} vs {:e}", a, b);
        }
    }
}

#[test]
fn bidirectional_rows_pair_forward_step_with_mirrored_backward_step() {
    let (d, h, len) = (2, 3, 5);
    let fwd = random_cell(CellKind::Lstm, d, h, 1, 1.0);
    let bwd = random_cell(CellKind::Lstm, d, h, 2, 1.0);
    let xs: Vec<f64> = (0..len * d).map(|i| (i as f64 * 0.37).sin()).collect();
    let rev: Vec<f64> = xs.chunks(d).rev().flatten().copied().collect();
    let hf = forward_sequence(&fwd, &xs, len).h;
    let hb = forward_sequence(&bwd, &rev, len).h;
    let out = bidirectional_forward(&fwd, &bwd, &xs, len).unwrap();
    for i in 0..len {
        assert_eq!(&out[i * 2 * h..i * 2 * h + h], &hf[i * h..(i + 1) * h]);
        assert_eq!(&out[i * 2 * h + h..(i + 1) * 2 * h], &hb[(len - 1 - i) * h..(len - i) * h]);
    }
}

/// A BLSTM whose backward cells are all zero outputs `[h_f, 0]`, so with the
/// extra input columns zeroed it computes exactly what the LSTM computes.
#[test]
fn blstm_with_silent_backward_cells_equals_lstm() {
    let lstm = random_model(Architecture::Lstm, 3, 4, 5, 11);
    let mut blstm = SequenceModel::<f64>::zeros(ModelConfig::new(Architecture::Blstm, 3, 4, 5)).unwrap();
    let h = 4;
    let widen = |m: &pcgnet::rnn::Matrix<f64>| {
        let mut w = pcgnet::rnn::Matrix::zeros(m.rows, 2 * m.cols);
        for r in 0..m.rows {
            w.data[r * 2 * m.cols..r * 2 * m.cols + m.cols].copy_from_slice(m.row(r));
        }
        w
    };
    for (l, (src, dst)) in lstm.params.layers.iter().zip(blstm.params.layers.iter_mut()).enumerate() {
        dst.fwd = src.fwd.clone();
        if l == 1 {
            dst.fwd.w_x = widen(&src.fwd.w_x);
            dst.fwd.input = 2 * h;
        }
    }
    blstm.params.dense_w = widen(&lstm.params.dense_w);
    blstm.params.dense_b = lstm.params.dense_b.clone();
    blstm.params.bn_gamma = lstm.params.bn_gamma.clone();
    blstm.params.bn_beta = lstm.params.bn_beta.clone();
    blstm.params.out_w = lstm.params.out_w.clone();
    blstm.params.out_b = lstm.params.out_b.clone();
    let x: Vec<f64> = (0..7 * 3).map(|i| (i as f64 * 0.71).cos()).collect();
    let a = lstm.logits_normalized(&x).unwrap();
    let b = blstm.logits_normalized(&x).unwrap();
    for (u, v) in a.iter().zip(&b) {
        assert!((u - v).abs() < 1e-14, "{a:?} vs {b:?}");
    }
}

#[test]
fn saturated_inputs_give_finite_gradients() {
    for arch in Architecture::ALL {
        let model = random_model(arch, 3, 4, 3, 3);
        let mut batch = Batch::random(4, 6, 3, 9);
        batch.features.iter_mut().flatten().for_each(|v| *v *= 1e4);
        let g = model.batch_gradient(&batch.examples()).unwrap();
        assert!(g.loss.is_finite() && g.grad.all_finite(), "{arch}");
    }
}

/// Rising versus falling ramps with noise; trivially separable by order.
fn ramps(n: usize, len: usize, seed: u64) -> Vec<FeatureMatrix<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let up = i % 2 == 1;
            let data = (0..len)
                .flat_map(|t| {
                    let s = t as f64 / (len - 1) as f64;
                    let v = if up { s } else { 1.0 - s };
                    [v + rng.gen_range(-0.1..0.1), rng.gen_range(-1.0..1.0)]
                })
                .collect();
            let label = if up { Label::Abnormal } else { Label::Normal };
            FeatureMatrix::new(format!("r{i}"), label, 2, data).unwrap()
        })
        .collect()
}

#[test]
fn every_architecture_learns_ramp_direction_within_30_epochs() {
    let (train_set, val_set) = (ramps(64, 10, 1), ramps(32, 10, 2));
    for arch in Architecture::ALL {
        let init = SequenceModel::<f64>::new(ModelConfig::new(arch, 2, 6, 6), 5).unwrap();
        let schedule = TrainSchedule { max_epochs: 30, batch_size: 16, initial_lr: 0.01, ..TrainSchedule::default() };
        let (model, history) = train(init, &train_set, &val_set, &schedule).unwrap();
        assert!(history.best_val_accuracy >= 0.98, "{arch}: {}", history.to_log());
        let correct = val_set
            .iter()
            .filter(|f| {
                let p = model.forward_classify(&f.data).unwrap();
                (p[1] >= p[0]) == (f.label == Label::Abnormal)
            })
            .count();
        assert!(correct as f64 / val_set.len() as f64 >= 0.98, "{arch}: {correct}/{}", val_set.len());
    }
}

#[test]
fn training_is_deterministic_and_survives_a_save_load_cycle() {
    let (train_set, val_set) = (ramps(32, 8, 3), ramps(16, 8, 4));
    let schedule = TrainSchedule { max_epochs: 4, batch_size: 8, seed: 21, ..TrainSchedule::default() };
    let run = || {
        let init = SequenceModel::<f64>::new(ModelConfig::new(Architecture::BiGru, 2, 4, 4), 21).unwrap();
        train(init, &train_set, &val_set, &schedule).unwrap()
    };
    let (a, ha) = run();
    let (b, hb) = run();
    assert_eq!(a, b);
    assert_eq!(ha, hb);
    let back = SequenceModel::<f64>::from_text(&a.to_text()).unwrap();
    for f in &val_set {
        assert_eq!(a.forward_classify(&f.data).unwrap(), back.forward_classify(&f.data).unwrap());
    }
}

#[test]
fn single_precision_model_tracks_double_precision() {
    let m64 = random_model(Architecture::Gru, 3, 4, 3, 8);
    let m32 = pcgnet::ModelF32::from_text(&m64.to_text()).unwrap();
    let x: Vec<f64> = (0..6 * 3).map(|i| (i as f64 * 0.3).sin()).collect();
    let x32: Vec<f32> = x.iter().map(|&v| v as f32).collect();
    let p64 = m64.forward_classify(&x).unwrap();
    let p32 = m32.forward_classify(&x32).unwrap();
    assert!((p64[1] - p32[1] as f64).abs() < 1e-4, "{p64:?} vs {p32:?}");
}
