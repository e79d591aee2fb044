//! Classical classifiers over fixed-length MFCC summaries: logistic
//! regression, kernel SVM and random forest.
//!
//! A segment is reduced to the mean and population standard deviation of
//! each coefficient over its frames (26 values for 13 coefficients). Vectors
//! are z-scored with training statistics stored in the model.

pub mod forest;
pub mod svm;

use std::fmt::Write as _;

use crate::dataset::Label;
use crate::error::{Error, Result};
use crate::logistic::{fit_irls, IrlsOptions, LogisticFit};
use crate::mfcc::FeatureMatrix;
use crate::rnn::{aggregate_posteriors, Decision};
use crate::scalar::sigmoid;
use crate::textfmt::{parse_values, write_values, Fields};

pub use forest::{train_forest, ForestOptions, Node, RandomForest, Tree};
pub use svm::{train_smo, Kernel, SmoOptions, SvmModel};

pub const FORMAT_TAG: &str = "pcgnet-baseline-model";
pub const LR_LAMBDAS: [f64; 4] = [1e-4, 1e-3, 1e-2, 1e-1];
pub const SVM_CS: [f64; 3] = [0.1, 1.0, 10.0];
pub const SVM_POLY_DEGREE: u32 = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryVector {
    pub values: Vec<f64>,
    pub label: Label,
}

/// Per-coefficient mean then per-coefficient std over frames.
pub fn summarize(fm: &FeatureMatrix<f64>) -> SummaryVector {
    let d = fm.n_coefficients;
    let n = fm.n_frames().max(1) as f64;
    let mut mean = vec![0.0; d];
    for row in fm.rows() {
        for (m, &v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; d];
    for row in fm.rows() {
        for ((s, &v), &m) in var.iter_mut().zip(row).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    let std = var.into_iter().map(|s| (s / n).sqrt());
    SummaryVector { values: mean.iter().copied().chain(std).collect(), label: fm.label }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    /// Constant columns get std 1.
    pub fn fit(vectors: &[Vec<f64>]) -> Self {
        let p = vectors.first().map_or(0, Vec::len);
        let n = vectors.len().max(1) as f64;
        let mut mean = vec![0.0; p];
        for v in vectors {
            for (m, &x) in mean.iter_mut().zip(v) {
                *m += x / n;
            }
        }
        let mut std = vec![0.0; p];
        for v in vectors {
            for ((s, &x), &m) in std.iter_mut().zip(v).zip(&mean) {
                *s += (x - m) * (x - m) / n;
            }
        }
        let std = std.into_iter().map(|s| if s.sqrt() > 1e-12 { s.sqrt() } else { 1.0 }).collect();
        Standardizer { mean, std }
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        v.iter().zip(&self.mean).zip(&self.std).map(|((&x, &m), &s)| (x - m) / s).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BaselineKind {
    LogReg,
    SvmLinear,
    SvmPoly,
    SvmRbf,
    Forest,
}

impl BaselineKind {
    pub const ALL: [BaselineKind; 5] = [
        BaselineKind::LogReg,
        BaselineKind::SvmLinear,
        BaselineKind::SvmPoly,
        BaselineKind::SvmRbf,
        BaselineKind::Forest,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BaselineKind::LogReg => "lr",
            BaselineKind::SvmLinear => "svm-linear",
            BaselineKind::SvmPoly => "svm-poly",
            BaselineKind::SvmRbf => "svm-rbf",
            BaselineKind::Forest => "rf",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Classifier {
    LogReg(LogisticFit<f64>),
    Svm(SvmModel),
    Forest(RandomForest),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineModel {
    pub kind: BaselineKind,
    pub standardizer: Standardizer,
    pub classifier: Classifier,
    /// Human-readable hyperparameters chosen on validation data.
    pub hyperparameters: String,
    pub val_accuracy: f64,
}

impl BaselineModel {
    /// Abnormal-class score in `[0, 1]` for one raw summary vector: `σ(f)`
    /// for LR and SVM, the vote fraction for the forest.
    pub fn score(&self, raw: &[f64]) -> Result<f64> {
        if raw.len() != self.standardizer.mean.len() {
            return Err(Error::Shape(format!(
                "summary vector has {} values, model expects {}",
                raw.len(),
                self.standardizer.mean.len()
            )));
        }
        let z = self.standardizer.apply(raw);
        Ok(match &self.classifier {
            Classifier::LogReg(f) => f.probability(&z),
            Classifier::Svm(m) => sigmoid(m.decision(&z)),
            Classifier::Forest(f) => f.vote_fraction(&z),
        })
    }
}

fn split_xy(data: &[SummaryVector]) -> Result<(Vec<Vec<f64>>, Vec<bool>)> {
    let mut x = Vec::with_capacity(data.len());
    let mut y = Vec::with_capacity(data.len());
    for v in data {
        let c = v.label.class_index().ok_or_else(|| Error::InvalidArgument("unlabeled summary vector".into()))?;
        x.push(v.values.clone());
        y.push(c == 1);
    }
    Ok((x, y))
}

fn accuracy(model: &BaselineModel, data: &[SummaryVector]) -> Result<f64> {
    if data.is_empty() {
        return Ok(0.0);
    }
    let mut correct = 0;
    for v in data {
        let predicted = if model.score(&v.values)? >= 0.5 { Label::Abnormal } else { Label::Normal };
        correct += (predicted == v.label) as usize;
    }
    Ok(correct as f64 / data.len() as f64)
}

/// Picks the candidate with the highest validation accuracy; ties keep the
/// earlier candidate. An empty validation set keeps the first candidate.
fn select(candidates: Vec<BaselineModel>, val: &[SummaryVector]) -> Result<BaselineModel> {
    let mut best: Option<BaselineModel> = None;
    for mut c in candidates {
        c.val_accuracy = accuracy(&c, val)?;
        if best.as_ref().is_none_or(|b| c.val_accuracy > b.val_accuracy) {
            best = Some(c);
        }
    }
    best.ok_or_else(|| Error::Empty("hyperparameter grid".into()))
}

fn prepare(train: &[SummaryVector]) -> Result<(Standardizer, Vec<Vec<f64>>, Vec<bool>)> {
    if train.is_empty() {
        return Err(Error::Empty("training set".into()));
    }
    let (x, y) = split_xy(train)?;
    if !y.iter().any(|&v| v) || y.iter().all(|&v| v) {
        return Err(Error::SingleClass);
    }
    let st = Standardizer::fit(&x);
    let z = x.iter().map(|v| st.apply(v)).collect();
    Ok((st, z, y))
}

/// Ridge logistic regression, λ chosen from [`LR_LAMBDAS`] on validation.
pub fn train_logreg(train: &[SummaryVector], val: &[SummaryVector]) -> Result<BaselineModel> {
    let (st, z, y) = prepare(train)?;
    let p = z[0].len();
    let flat: Vec<f64> = z.concat();
    let mut candidates = Vec::new();
    for &lambda in &LR_LAMBDAS {
        let fit = fit_irls(&flat, p, &y, &IrlsOptions { lambda, ..Default::default() })?;
        candidates.push(BaselineModel {
            kind: BaselineKind::LogReg,
            standardizer: st.clone(),
            classifier: Classifier::LogReg(fit),
            hyperparameters: format!("lambda={lambda:e}"),
            val_accuracy: 0.0,
        });
    }
    select(candidates, val)
}

/// SMO-trained SVM; C from [`SVM_CS`] and, for RBF, γ from `{1/p, 0.1, 1}`.
pub fn train_svm(train: &[SummaryVector], val: &[SummaryVector], kind: BaselineKind) -> Result<BaselineModel> {
    let (st, z, y) = prepare(train)?;
    let p = z[0].len() as f64;
    let kernels: Vec<Kernel> = match kind {
        BaselineKind::SvmLinear => vec![Kernel::Linear],
        BaselineKind::SvmPoly => vec![Kernel::Polynomial { degree: SVM_POLY_DEGREE, gamma: 1.0 / p, coef0: 1.0 }],
        BaselineKind::SvmRbf => [1.0 / p, 0.1, 1.0].iter().map(|&gamma| Kernel::Rbf { gamma }).collect(),
        other => return Err(Error::InvalidArgument(format!("{} is not an SVM", other.name()))),
    };
    let mut candidates = Vec::new();
    for kernel in kernels {
        for &c in &SVM_CS {
            let sol = train_smo(&z, &y, kernel, &SmoOptions { c, ..Default::default() })?;
            candidates.push(BaselineModel {
                kind,
                standardizer: st.clone(),
                classifier: Classifier::Svm(sol.model),
                hyperparameters: format!("kernel={} C={c}", kernel.describe()),
                val_accuracy: 0.0,
            });
        }
    }
    select(candidates, val)
}

pub fn train_random_forest(train: &[SummaryVector], val: &[SummaryVector], seed: u64) -> Result<BaselineModel> {
    let (st, z, y) = prepare(train)?;
    let forest = train_forest(&z, &y, &ForestOptions { seed, ..Default::default() })?;
    let mut m = BaselineModel {
        kind: BaselineKind::Forest,
        standardizer: st,
        classifier: Classifier::Forest(forest),
        hyperparameters: "trees=100 max_depth=12 mtry=floor(sqrt(p))".into(),
        val_accuracy: 0.0,
    };
    m.val_accuracy = accuracy(&m, val)?;
    Ok(m)
}

pub fn train_baseline(
    kind: BaselineKind,
    train: &[SummaryVector],
    val: &[SummaryVector],
    seed: u64,
) -> Result<BaselineModel> {
    match kind {
        BaselineKind::LogReg => train_logreg(train, val),
        BaselineKind::Forest => train_random_forest(train, val, seed),
        svm => train_svm(train, val, svm),
    }
}

/// Per-segment scores and the recording decision: the mean of
/// `(1 − s, s)` over segments, ties to Abnormal.
pub fn predict_baseline(model: &BaselineModel, vectors: &[Vec<f64>]) -> Result<(Vec<f64>, Option<Decision>)> {
    let scores = vectors.iter().map(|v| model.score(v)).collect::<Result<Vec<f64>>>()?;
    let posteriors: Vec<[f64; 2]> = scores.iter().map(|&s| [1.0 - s, s]).collect();
    Ok((scores, aggregate_posteriors(&posteriors)))
}

impl BaselineModel {
    pub fn to_text(&self) -> String {
        let mut s = format!("{FORMAT_TAG} v1\n");
        let _ = writeln!(s, "type {}", self.kind.name());
        let _ = writeln!(s, "hyperparameters {}", self.hyperparameters);
        let _ = writeln!(s, "val_accuracy {:.16e}", self.val_accuracy);
        write_values(&mut s, "standardizer.mean", &self.standardizer.mean);
        write_values(&mut s, "standardizer.std", &self.standardizer.std);
        match &self.classifier {
            Classifier::LogReg(f) => {
                let _ = writeln!(s, "converged {}", f.converged);
                write_values(&mut s, "weights", &f.weights);
            }
            Classifier::Svm(m) => {
                let _ = writeln!(s, "kernel {}", m.kernel.describe());
                let _ = writeln!(s, "c {:.16e}", m.c);
                let _ = writeln!(s, "bias {:.16e}", m.bias);
                let _ = writeln!(s, "converged {}", m.converged);
                let _ = writeln!(s, "n_support {}", m.support_vectors.len());
                write_values(&mut s, "coefficients", &m.coefficients);
                for (i, sv) in m.support_vectors.iter().enumerate() {
                    write_values(&mut s, &format!("sv.{i}"), sv);
                }
            }
            Classifier::Forest(f) => {
                let _ = writeln!(s, "n_trees {}", f.trees.len());
                let _ = writeln!(s, "n_features {}", f.n_features);
                // node: feature threshold left right, feature −1 marks a leaf
                // whose threshold field holds its class (0 or 1)
                for (i, t) in f.trees.iter().enumerate() {
                    let flat: Vec<f64> = t
                        .nodes
                        .iter()
                        .flat_map(|n| match *n {
                            Node::Leaf { positive } => [-1.0, positive as u8 as f64, 0.0, 0.0],
                            Node::Split { feature, threshold, left, right } => {
                                [feature as f64, threshold, left as f64, right as f64]
                            }
                        })
                        .collect();
                    write_values(&mut s, &format!("tree.{i}"), &flat);
                }
            }
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut f = Fields::parse(text, FORMAT_TAG, 1)?;
        let type_name = f.take_scalar("type")?;
        let kind = BaselineKind::ALL
            .into_iter()
            .find(|k| k.name() == type_name)
            .ok_or_else(|| Error::parse("baseline model", format!("unknown type {type_name:?}")))?;
        let hyperparameters = f.take_scalar("hyperparameters")?;
        let val_accuracy = f.take("val_accuracy")?;
        let standardizer = Standardizer {
            mean: parse_values(&f.take_scalar("standardizer.mean")?)?,
            std: parse_values(&f.take_scalar("standardizer.std")?)?,
        };
        let p = standardizer.mean.len();
        let classifier = match kind {
            BaselineKind::LogReg => {
                let converged = f.take_scalar("converged")? == "true";
                let weights: Vec<f64> = parse_values(&f.take_scalar("weights")?)?;
                if weights.len() != p + 1 {
                    return Err(Error::parse("weights", "length does not match the standardizer"));
                }
                Classifier::LogReg(LogisticFit { weights, converged, iterations: 0 })
            }
            BaselineKind::Forest => {
                let n_trees: usize = f.take("n_trees")?;
                let n_features: usize = f.take("n_features")?;
                let mut trees = Vec::with_capacity(n_trees);
                for i in 0..n_trees {
                    let key = format!("tree.{i}");
                    let flat: Vec<f64> = parse_values(&f.take_scalar(&key)?)?;
                    if !flat.len().is_multiple_of(4) || flat.is_empty() {
                        return Err(Error::parse(&key, "node records have 4 fields"));
                    }
                    let n_nodes = flat.len() / 4;
                    let nodes = flat
                        .chunks_exact(4)
                        .map(|c| {
                            if c[0] < 0.0 {
                                Ok(Node::Leaf { positive: c[1] != 0.0 })
                            } else {
                                let (feature, left, right) = (c[0] as usize, c[2] as usize, c[3] as usize);
                                if feature >= n_features || left >= n_nodes || right >= n_nodes {
                                    return Err(Error::parse(&key, "node index out of range"));
                                }
                                Ok(Node::Split { feature, threshold: c[1], left, right })
                            }
                        })
                        .collect::<Result<Vec<Node>>>()?;
                    trees.push(Tree { nodes });
                }
                Classifier::Forest(RandomForest { trees, n_features, oob_accuracy: None })
            }
            _ => {
                let kernel = Kernel::parse(&f.take_scalar("kernel")?)?;
                let c = f.take("c")?;
                let bias = f.take("bias")?;
                let converged = f.take_scalar("converged")? == "true";
                let n_support: usize = f.take("n_support")?;
                let coefficients: Vec<f64> = parse_values(&f.take_scalar("coefficients")?)?;
                if coefficients.len() != n_support {
                    return Err(Error::parse("coefficients", "length does not match n_support"));
                }
                let support_vectors = (0..n_support)
                    .map(|i| {
                        let sv: Vec<f64> = parse_values(&f.take_scalar(&format!("sv.{i}"))?)?;
                        if sv.len() != p {
                            return Err(Error::parse("support vector", "wrong dimension"));
                        }
                        Ok(sv)
                    })
                    .collect::<Result<Vec<_>>>()?;
                Classifier::Svm(SvmModel { kernel, c, support_vectors, coefficients, bias, converged, iterations: 0 })
            }
        };
        Ok(BaselineModel { kind, standardizer, classifier, hyperparameters, val_accuracy })
    }
}
