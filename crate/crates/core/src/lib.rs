//! Phonocardiogram classification: heart-state segmentation with a
//! logistic-regression-emission hidden semi-Markov model, heart-cycle
//! extraction, MFCC features, recurrent classifiers trained by
//! backpropagation through time, classical baselines and an experiment
//! harness.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod cycles;
pub mod dataset;
pub mod dsp;
pub mod envelope;
pub mod error;
pub mod experiment;
pub mod hsmm;
pub mod linalg;
pub mod logistic;
pub mod metrics;
pub mod mfcc;
pub mod pipeline;
pub mod rnn;
pub mod scalar;
pub mod seed;
pub mod synth;
pub mod textfmt;

pub use error::{Error, Result};

/// Double-precision aliases used by the pipeline and the CLI.
pub type Model = rnn::SequenceModel<f64>;
pub type Features = mfcc::FeatureMatrix<f64>;
pub type EmissionModel = hsmm::LrEmissionModel<f64>;

/// Single-precision aliases for lighter inference.
pub type ModelF32 = rnn::SequenceModel<f32>;
pub type FeaturesF32 = mfcc::FeatureMatrix<f32>;
