#![allow(dead_code)]

pub mod oracles;

use pcgnet::rnn::{Architecture, Example, ModelConfig, SequenceModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Model with every tensor (peepholes, batch-norm scale and shift included)
/// drawn uniformly from ±0.5.
pub fn random_model(arch: Architecture, input: usize, hidden: usize, dense: usize, seed: u64) -> SequenceModel<f64> {
    let mut m = SequenceModel::<f64>::new(ModelConfig::new(arch, input, hidden, dense), seed).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xA5A5);
    for t in m.params.tensors_mut() {
        for v in t.iter_mut() {
            *v = rng.gen_range(-0.5..0.5);
        }
    }
    for g in &mut m.params.bn_gamma {
        *g += 1.0;
    }
    m
}

pub struct Batch {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub len: usize,
}

impl Batch {
    pub fn random(n: usize, len: usize, input: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Batch {
            features: (0..n).map(|_| (0..len * input).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect(),
            labels: (0..n).map(|i| i % 2).collect(),
            len,
        }
    }

    pub fn examples(&self) -> Vec<Example<'_, f64>> {
        self.features
            .iter()
            .zip(&self.labels)
            .map(|(f, &label)| Example { features: f, len: self.len, label })
            .collect()
    }
}

/// Largest `|analytic − numeric| / max(|analytic|, |numeric|, 1e-5)` over
/// every parameter, with central differences of step `h`.
pub fn max_gradient_error(model: &SequenceModel<f64>, batch: &Batch, h: f64) -> (f64, String) {
    let ex = batch.examples();
    let analytic = model.batch_gradient(&ex).unwrap().grad;
    let shapes = model.params.tensor_shapes();
    let mut worst = (0.0, String::new());
    let mut probe = model.clone();
    for (ti, (name, _, _)) in shapes.iter().enumerate() {
        let n = model.params.tensors()[ti].len();
        for i in 0..n {
            let orig = probe.params.tensors()[ti][i];
            probe.params.tensors_mut()[ti][i] = orig + h;
            let up = probe.batch_loss(&ex).unwrap();
            probe.params.tensors_mut()[ti][i] = orig - h;
            let down = probe.batch_loss(&ex).unwrap();
            probe.params.tensors_mut()[ti][i] = orig;
            let numeric = (up - down) / (2.0 * h);
            let a = analytic.tensors()[ti][i];
            let err = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-5);
            if err > worst.0 {
                worst = (err, format!("{name}[{i}] analytic {a:e} numeric {numeric:e}"));
            }
        }
    }
    worst
}
