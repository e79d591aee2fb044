use super::model::SequenceModel;
use crate::dataset::Label;
use crate::error::Result;
use crate::mfcc::FeatureMatrix;
use crate::scalar::Real;

/// Recording-level outcome: mean posterior and its label.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decision {
    pub label: Label,
    /// `(P(normal), P(abnormal))`.
    pub posterior: [f64; 2],
}

/// Arithmetic mean of `posteriors`; an exact tie goes to Abnormal.
/// `None` when there is nothing to average.
pub fn aggregate_posteriors(posteriors: &[[f64; 2]]) -> Option<Decision> {
    if posteriors.is_empty() {
        return None;
    }
    let n = posteriors.len() as f64;
    let mut mean = [0.0; 2];
    for p in posteriors {
        mean[0] += p[0];
        mean[1] += p[1];
    }
    mean[0] /= n;
    mean[1] /= n;
    let label = if mean[1] >= mean[0] { Label::Abnormal } else { Label::Normal };
    Some(Decision { label, posterior: mean })
}

/// Mean posterior over every (segment, model) pair. A recording without
/// segments is unclassifiable (`None`).
pub fn predict_recording<T: Real>(
    models: &[SequenceModel<T>],
    segments: &[FeatureMatrix<T>],
) -> Result<Option<Decision>> {
    let mut all = Vec::with_capacity(models.len() * segments.len());
    for seg in segments {
        for m in models {
            let p = m.forward_classify(&seg.data)?;
            all.push([p[0].to_f64_lossy(), p[1].to_f64_lossy()]);
        }
    }
    Ok(aggregate_posteriors(&all))
}
