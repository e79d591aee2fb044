//! Confusion counts and the rates derived from them. Abnormal is positive.

use serde::Serialize;

use crate::dataset::Label;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Metrics {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    /// `TP / (TP + FN)`; undefined without abnormal truths.
    pub sensitivity: Option<f64>,
    /// `TN / (TN + FP)`; undefined without normal truths.
    pub specificity: Option<f64>,
    /// `(TP + TN) / total`.
    pub accuracy: f64,
    /// `(Se + Sp) / 2` when both are defined.
    pub macc: Option<f64>,
}

impl Metrics {
    pub fn from_counts(tp: usize, fp: usize, tn: usize, fn_: usize) -> Result<Self> {
        let total = tp + fp + tn + fn_;
        if total == 0 {
            return Err(Error::Empty("predictions".into()));
        }
        let rate = |num: usize, den: usize| (den > 0).then(|| num as f64 / den as f64);
        let sensitivity = rate(tp, tp + fn_);
        let specificity = rate(tn, tn + fp);
        let macc = sensitivity.zip(specificity).map(|(se, sp)| (se + sp) / 2.0);
        Ok(Metrics { tp, fp, tn, fn_, sensitivity, specificity, accuracy: (tp + tn) as f64 / total as f64, macc })
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }
}

/// Metrics over `(predicted, truth)` pairs. Both labels must be Normal or
/// Abnormal.
pub fn compute_metrics(pairs: &[(Label, Label)]) -> Result<Metrics> {
    let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
    for &(pred, truth) in pairs {
        match (pred, truth) {
            (Label::Abnormal, Label::Abnormal) => tp += 1,
            (Label::Abnormal, Label::Normal) => fp += 1,
            (Label::Normal, Label::Normal) => tn += 1,
            (Label::Normal, Label::Abnormal) => fn_ += 1,
            _ => return Err(Error::InvalidArgument("metrics need labelled predictions and truths".into())),
        }
    }
    Metrics::from_counts(tp, fp, tn, fn_)
}

/// A published result, kept for side-by-side display only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReferenceRow {
    pub source: &'static str,
    pub method: &'static str,
    pub sensitivity: f64,
    pub specificity: f64,
    pub accuracy: f64,
}

const fn row(source: &'static str, method: &'static str, se: f64, sp: f64, acc: f64) -> ReferenceRow {
    ReferenceRow { source, method, sensitivity: se, specificity: sp, accuracy: acc }
}

/// Recurrent models of the reference study.
pub const REFERENCE_RNN: [ReferenceRow; 4] = [
    row("reference study", "LSTM", 0.9995, 0.9671, 0.9706),
    row("reference study", "BLSTM", 0.9886, 0.9836, 0.9763),
    row("reference study", "GRU", 0.9669, 0.9793, 0.9542),
    row("reference study", "BiGRU", 0.9846, 0.9728, 0.9721),
];

/// Best baseline results of the reference study.
pub const REFERENCE_BASELINES: [ReferenceRow; 4] = [
    row("reference study", "SVM (best)", 0.8259, 0.8324, 0.8291),
    row("reference study", "LR (best)", 0.7121, 0.6879, 0.6991),
    row("reference study", "RF (best)", 0.6901, 0.6850, 0.6861),
    row("reference study", "RNNs (best)", 0.9886, 0.9836, 0.9763),
];

/// Earlier published systems on the same challenge data.
pub const REFERENCE_RELATED: [ReferenceRow; 5] = [
    row("Potes et al. 2016", "AdaBoost and CNN", 0.9424, 0.7781, 0.8602),
    row("Tschannen et al. 2016", "Wavelet-based CNN", 0.855, 0.859, 0.828),
    row("Rubin et al. 2017", "CNN", 0.7278, 0.9521, 0.8399),
    row("Nassralla et al. 2017", "DNNs", 0.63, 0.82, 0.80),
    row("Dominguez et al. 2018", "Modified AlexNet", 0.9512, 0.9320, 0.9416),
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn direct_arithmetic() {
        let m = Metrics::from_counts(5, 1, 4, 0).unwrap();
        assert_eq!(m.sensitivity, Some(1.0));
        assert_eq!(m.specificity, Some(0.8));
        assert_eq!(m.accuracy, 0.9);
        assert_eq!(m.macc, Some(0.9));
    }

    #[test]
    fn perfect_and_degenerate() {
        let pairs = [(Label::Abnormal, Label::Abnormal), (Label::Normal, Label::Normal)];
        let m = compute_metrics(&pairs).unwrap();
        assert_eq!((m.sensitivity, m.specificity, m.accuracy), (Some(1.0), Some(1.0), 1.0));
        let m = compute_metrics(&[(Label::Normal, Label::Normal)]).unwrap();
        assert_eq!(m.sensitivity, None);
        assert!(compute_metrics(&[]).is_err());
        assert!(compute_metrics(&[(Label::Unlabeled, Label::Normal)]).is_err());
    }
}
