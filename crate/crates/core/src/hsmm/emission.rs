use std::fmt::Write as _;

use super::{HeartState, StateSequence, N_STATES};
use crate::envelope::{ObservationSequence, N_FEATURES};
use crate::error::{Error, Result};
use crate::linalg::{Cholesky, SquareMatrix};
use crate::logistic::{fit_irls, IrlsOptions};
use crate::scalar::{log_sigmoid, Real};
use crate::textfmt::{parse_values, write_values, Fields};

const COV_RIDGE: f64 = 1e-6;
const FORMAT_TAG: &str = "pcgnet-emission-model";

/// One-vs-all logistic regressions over normalized observations, plus the
/// pieces of Bayes' rule: state priors and a single Gaussian for `p(O)`.
///
/// `p(O)` is evaluated on the normalized observation. That rescales every
/// state's emission by the same constant, so decoding is unaffected.
#[derive(Debug, Clone)]
pub struct LrEmissionModel<T> {
    /// Per state: 4 feature weights then the bias.
    pub weights: [[T; N_FEATURES + 1]; N_STATES],
    pub feature_mean: [T; N_FEATURES],
    pub feature_std: [T; N_FEATURES],
    pub prior: [T; N_STATES],
    pub obs_mean: [T; N_FEATURES],
    pub obs_cov: [[T; N_FEATURES]; N_FEATURES],
    /// False when any IRLS fit hit its iteration cap.
    pub converged: bool,
    chol: Cholesky<T>,
    log_norm: T,
}

impl<T: Real> LrEmissionModel<T> {
    pub fn new(
        weights: [[T; N_FEATURES + 1]; N_STATES],
        feature_mean: [T; N_FEATURES],
        feature_std: [T; N_FEATURES],
        prior: [T; N_STATES],
        obs_mean: [T; N_FEATURES],
        obs_cov: [[T; N_FEATURES]; N_FEATURES],
        converged: bool,
    ) -> Result<Self> {
        let psum: T = prior.iter().copied().sum();
        if prior.iter().any(|&p| !(p > T::zero())) || (psum - T::one()).abs() > T::of(1e-9) {
            return Err(Error::InvalidArgument("state priors must be positive and sum to 1".into()));
        }
        if feature_std.iter().any(|&s| !(s > T::zero())) {
            return Err(Error::InvalidArgument("feature scales must be positive".into()));
        }
        let mut cov = SquareMatrix::zeros(N_FEATURES);
        for i in 0..N_FEATURES {
            for j in 0..N_FEATURES {
                if (obs_cov[i][j] - obs_cov[j][i]).abs() > T::of(1e-12) * (T::one() + obs_cov[i][j].abs()) {
                    return Err(Error::InvalidArgument("observation covariance is not symmetric".into()));
                }
                *cov.get_mut(i, j) = obs_cov[i][j];
            }
        }
        let chol = cov.cholesky()?;
        let log_norm =
            -T::of(0.5) * (T::of_usize(N_FEATURES) * T::of((2.0 * std::f64::consts::PI).ln()) + chol.log_det());
        Ok(LrEmissionModel { weights, feature_mean, feature_std, prior, obs_mean, obs_cov, converged, chol, log_norm })
    }

    /// Same model with a different prior vector.
    pub fn with_prior(&self, prior: [T; N_STATES]) -> Result<Self> {
        Self::new(self.weights, self.feature_mean, self.feature_std, prior, self.obs_mean, self.obs_cov, self.converged)
    }

    pub fn normalize(&self, row: &[T; N_FEATURES]) -> [T; N_FEATURES] {
        let mut out = [T::zero(); N_FEATURES];
        for j in 0..N_FEATURES {
            out[j] = (row[j] - self.feature_mean[j]) / self.feature_std[j];
        }
        out
    }

    /// Linear predictor of state `j` on a normalized row.
    pub fn state_logit(&self, j: usize, z: &[T; N_FEATURES]) -> T {
        let w = &self.weights[j];
        (0..N_FEATURES).map(|k| w[k] * z[k]).sum::<T>() + w[N_FEATURES]
    }

    /// `ln p(O)` of a normalized row under the training Gaussian.
    pub fn log_observation_density(&self, z: &[T; N_FEATURES]) -> T {
        let d: Vec<T> = (0..N_FEATURES).map(|k| z[k] - self.obs_mean[k]).collect();
        self.log_norm - T::of(0.5) * self.chol.inv_quad(&d)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("{FORMAT_TAG} v1\n");
        let _ = writeln!(s, "converged {}", self.converged);
        write_values(&mut s, "feature_mean", &self.feature_mean);
        write_values(&mut s, "feature_std", &self.feature_std);
        write_values(&mut s, "prior", &self.prior);
        write_values(&mut s, "obs_mean", &self.obs_mean);
        let cov: Vec<T> = self.obs_cov.iter().flatten().copied().collect();
        write_values(&mut s, "obs_cov", &cov);
        for (j, state) in HeartState::ALL.iter().enumerate() {
            write_values(&mut s, &format!("weights.{}", state.name()), &self.weights[j]);
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut fields = Fields::parse(text, FORMAT_TAG, 1)?;
        let converged = fields.take_scalar("converged")? == "true";
        let arr4 = |v: Vec<T>, name: &str| -> Result<[T; N_FEATURES]> {
            v.try_into().map_err(|_| Error::parse(name, "expected 4 values"))
        };
        let feature_mean = arr4(parse_values(&fields.take_scalar("feature_mean")?)?, "feature_mean")?;
        let feature_std = arr4(parse_values(&fields.take_scalar("feature_std")?)?, "feature_std")?;
        let prior = arr4(parse_values(&fields.take_scalar("prior")?)?, "prior")?;
        let obs_mean = arr4(parse_values(&fields.take_scalar("obs_mean")?)?, "obs_mean")?;
        let cov: Vec<T> = parse_values(&fields.take_scalar("obs_cov")?)?;
        if cov.len() != N_FEATURES * N_FEATURES {
            return Err(Error::parse("obs_cov", "expected 16 values"));
        }
        let mut obs_cov = [[T::zero(); N_FEATURES]; N_FEATURES];
        for i in 0..N_FEATURES {
            obs_cov[i].copy_from_slice(&cov[i * N_FEATURES..(i + 1) * N_FEATURES]);
        }
        let mut weights = [[T::zero(); N_FEATURES + 1]; N_STATES];
        for (j, state) in HeartState::ALL.iter().enumerate() {
            let key = format!("weights.{}", state.name());
            let w: Vec<T> = parse_values(&fields.take_scalar(&key)?)?;
            weights[j] = w.try_into().map_err(|_| Error::parse(&key, "expected 5 values"))?;
        }
        Self::new(weights, feature_mean, feature_std, prior, obs_mean, obs_cov, converged)
    }
}

/// Per-state `ln b_j(O_t) = ln σ(w_jᵀÔ) + ln p(Ô) − ln P(ξ_j)`.
pub fn log_emission_likelihood<T: Real>(model: &LrEmissionModel<T>, row: &[T; N_FEATURES]) -> [T; N_STATES] {
    let z = model.normalize(row);
    let log_p_obs = model.log_observation_density(&z);
    let mut out = [T::zero(); N_STATES];
    for (j, o) in out.iter_mut().enumerate() {
        *o = log_sigmoid(model.state_logit(j, &z)) + log_p_obs - model.prior[j].ln();
    }
    out
}

/// Linear-space `b_j(O_t)`; may underflow to zero far from the training data.
pub fn emission_likelihood<T: Real>(model: &LrEmissionModel<T>, row: &[T; N_FEATURES]) -> [T; N_STATES] {
    log_emission_likelihood(model, row).map(T::exp)
}

/// Fits the emission model from observation sequences and aligned labels.
pub fn train_emission_lr<T: Real>(
    observations: &[ObservationSequence<T>],
    labels: &[StateSequence],
) -> Result<LrEmissionModel<T>> {
    if observations.len() != labels.len() {
        return Err(Error::Shape(format!(
            "{} observation sequences but {} label sequences",
            observations.len(),
            labels.len()
        )));
    }
    let mut rows: Vec<[T; N_FEATURES]> = Vec::new();
    let mut states: Vec<HeartState> = Vec::new();
    for (obs, lab) in observations.iter().zip(labels) {
        if obs.len() != lab.len() {
            return Err(Error::Shape(format!("{} observations labelled with {} states", obs.len(), lab.len())));
        }
        rows.extend_from_slice(&obs.values);
        states.extend_from_slice(&lab.states);
    }
    let n = rows.len();
    let mut counts = [0usize; N_STATES];
    for s in &states {
        counts[s.index()] += 1;
    }
    if let Some(j) = counts.iter().position(|&c| c == 0) {
        return Err(Error::MissingState(HeartState::from_index(j).to_string()));
    }

    let nt = T::of_usize(n);
    let mut feature_mean = [T::zero(); N_FEATURES];
    let mut feature_std = [T::one(); N_FEATURES];
    for k in 0..N_FEATURES {
        let m = rows.iter().map(|r| r[k]).sum::<T>() / nt;
        let v = rows.iter().map(|r| (r[k] - m) * (r[k] - m)).sum::<T>() / nt;
        feature_mean[k] = m;
        // constant features normalize to zero instead of dividing by zero
        feature_std[k] = if v.sqrt() > T::of(1e-12) { v.sqrt() } else { T::one() };
    }
    let mut flat = Vec::with_capacity(n * N_FEATURES);
    for r in &rows {
        for k in 0..N_FEATURES {
            flat.push((r[k] - feature_mean[k]) / feature_std[k]);
        }
    }

    let opts = IrlsOptions::default();
    let mut weights = [[T::zero(); N_FEATURES + 1]; N_STATES];
    let mut converged = true;
    for (j, w) in weights.iter_mut().enumerate() {
        let targets: Vec<bool> = states.iter().map(|s| s.index() == j).collect();
        let fit = fit_irls(&flat, N_FEATURES, &targets, &opts)?;
        converged &= fit.converged;
        w.copy_from_slice(&fit.weights);
    }
    let prior = counts.map(|c| T::of_usize(c) / nt);

    let mut obs_mean = [T::zero(); N_FEATURES];
    for k in 0..N_FEATURES {
        obs_mean[k] = flat.iter().skip(k).step_by(N_FEATURES).copied().sum::<T>() / nt;
    }
    let mut obs_cov = [[T::zero(); N_FEATURES]; N_FEATURES];
    for r in flat.chunks_exact(N_FEATURES) {
        for a in 0..N_FEATURES {
            for b in 0..=a {
                obs_cov[a][b] += (r[a] - obs_mean[a]) * (r[b] - obs_mean[b]);
            }
        }
    }
    for a in 0..N_FEATURES {
        for b in 0..=a {
            let v = obs_cov[a][b] / nt;
            obs_cov[a][b] = v;
            obs_cov[b][a] = v;
        }
        obs_cov[a][a] += T::of(COV_RIDGE);
    }
    LrEmissionModel::new(weights, feature_mean, feature_std, prior, obs_mean, obs_cov, converged)
}
