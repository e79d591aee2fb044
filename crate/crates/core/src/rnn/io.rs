//! Versioned text model file.

use std::fmt::Write as _;

use super::model::{Architecture, ModelConfig, Readout, SequenceModel, SequenceModelParams, TrainingMeta};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::textfmt::{parse_values, write_tensor, write_values, Fields};

pub const FORMAT_TAG: &str = "pcgnet-rnn-model";

impl<T: Real> SequenceModel<T> {
    pub fn to_text(&self) -> String {
        let c = &self.config;
        let m = &self.meta;
        let mut s = format!("{FORMAT_TAG} v1\n");
        let _ = writeln!(s, "architecture {}", c.arch);
        let _ = writeln!(s, "input_dim {}", c.input_dim);
        let _ = writeln!(s, "hidden {}", c.hidden);
        let _ = writeln!(s, "dense {}", c.dense);
        let _ = writeln!(s, "readout {}", c.readout);
        let _ = writeln!(s, "meta.seed {}", m.seed);
        let _ = writeln!(s, "meta.epochs_run {}", m.epochs_run);
        let _ = writeln!(s, "meta.best_epoch {}", m.best_epoch);
        let _ = writeln!(s, "meta.best_val_accuracy {:.16e}", m.best_val_accuracy);
        let _ = writeln!(s, "schedule.initial_lr {:.16e}", m.initial_lr);
        let _ = writeln!(s, "schedule.min_lr {:.16e}", m.min_lr);
        let _ = writeln!(s, "schedule.patience {}", m.patience);
        let _ = writeln!(s, "schedule.max_epochs {}", m.max_epochs);
        let _ = writeln!(s, "schedule.batch_size {}", m.batch_size);
        write_values(&mut s, "feature.mean", &self.feature_mean);
        write_values(&mut s, "feature.std", &self.feature_std);
        write_values(&mut s, "bn.running_mean", &self.bn_running_mean);
        write_values(&mut s, "bn.running_var", &self.bn_running_var);
        for ((name, r, cols), t) in self.params.tensor_shapes().into_iter().zip(self.params.tensors()) {
            write_tensor(&mut s, &name, r, cols, t);
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut f = Fields::parse(text, FORMAT_TAG, 1)?;
        let arch: Architecture = f.take_scalar("architecture")?.parse()?;
        let readout: Readout = f.take_scalar("readout")?.parse()?;
        let config = ModelConfig {
            arch,
            input_dim: f.take("input_dim")?,
            hidden: f.take("hidden")?,
            dense: f.take("dense")?,
            readout,
        };
        let meta = TrainingMeta {
            seed: f.take("meta.seed")?,
            epochs_run: f.take("meta.epochs_run")?,
            best_epoch: f.take("meta.best_epoch")?,
            best_val_accuracy: f.take("meta.best_val_accuracy")?,
            initial_lr: f.take("schedule.initial_lr")?,
            min_lr: f.take("schedule.min_lr")?,
            patience: f.take("schedule.patience")?,
            max_epochs: f.take("schedule.max_epochs")?,
            batch_size: f.take("schedule.batch_size")?,
        };
        let mut vector = |key: &str, len: usize| -> Result<Vec<T>> {
            let v: Vec<T> = parse_values(&f.take_scalar(key)?)?;
            if v.len() != len {
                return Err(Error::parse(key, format!("expected {len} values, found {}", v.len())));
            }
            Ok(v)
        };
        let feature_mean = vector("feature.mean", config.input_dim)?;
        let feature_std = vector("feature.std", config.input_dim)?;
        let bn_running_mean = vector("bn.running_mean", config.dense)?;
        let bn_running_var = vector("bn.running_var", config.dense)?;
        let mut params = SequenceModelParams::<T>::zeros(&config);
        let shapes = params.tensor_shapes();
        for ((name, r, c), dst) in shapes.into_iter().zip(params.tensors_mut()) {
            let (rows, cols, values) = f.take_tensor::<T>(&name)?;
            if (rows, cols) != (r, c) {
                return Err(Error::parse(&name, format!("expected {r}x{c}, found {rows}x{cols}")));
            }
            dst.copy_from_slice(&values);
        }
        if !params.all_finite() || feature_std.iter().any(|s| !(*s > T::zero())) {
            return Err(Error::parse("model file", "non-finite parameter or non-positive feature std"));
        }
        Ok(SequenceModel { config, params, bn_running_mean, bn_running_var, feature_mean, feature_std, meta })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip_is_exact() {
        for arch in Architecture::ALL {
            let mut m = SequenceModel::<f64>::new(ModelConfig::new(arch, 3, 4, 5), 9).unwrap();
            m.feature_mean = vec![0.1, -0.2, 1.0 / 3.0];
            m.bn_running_var[2] = 2.5;
            m.meta.seed = 42;
            let back = SequenceModel::<f64>::from_text(&m.to_text()).unwrap();
            assert_eq!(back, m);
        }
    }

    #[test]
    fn corrupt_files_are_rejected() {
        let m = SequenceModel::<f64>::new(ModelConfig::new(Architecture::Gru, 3, 4, 5), 9).unwrap();
        let text = m.to_text();
        assert!(SequenceModel::<f64>::from_text(&text.replace("hidden 4", "hidden 5")).is_err());
        assert!(SequenceModel::<f64>::from_text(&text.replace("pcgnet-rnn-model v1", "pcgnet-rnn-model v2")).is_err());
    }
}
