use super::N_STATES;
use crate::envelope::{ObservationSequence, OBSERVATION_RATE};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Mean S1 duration (physiological constant), seconds.
pub const S1_MEAN_SECS: f64 = 0.122;
/// Mean S2 duration (physiological constant), seconds.
pub const S2_MEAN_SECS: f64 = 0.092;
const STD_FRACTION: f64 = 0.25;
const MAX_DURATION_STDS: f64 = 3.5;

const MIN_HEART_PERIOD_SECS: f64 = 0.24;
const MAX_HEART_PERIOD_SECS: f64 = 2.0;
const MIN_SYSTOLE_SECS: f64 = 0.2;
const MIN_RATE_SECS: f64 = 3.0;

/// Per-state Gaussian durations in observation steps.
#[derive(Debug, Clone, PartialEq)]
pub struct DurationModel {
    pub means: [f64; N_STATES],
    pub stds: [f64; N_STATES],
    /// Longest segment the decoder considers, in steps.
    pub max_duration: usize,
}

impl DurationModel {
    pub fn new(means: [f64; N_STATES], stds: [f64; N_STATES], max_duration: usize) -> Result<Self> {
        if means.iter().any(|&m| !(m > 0.0)) || stds.iter().any(|&s| !(s > 0.0)) {
            return Err(Error::InvalidArgument(format!("duration means {means:?} and stds {stds:?} must be positive")));
        }
        if max_duration == 0 {
            return Err(Error::InvalidArgument("max_duration must be at least 1".into()));
        }
        Ok(DurationModel { means, stds, max_duration })
    }

    /// Most likely duration of `state` (mean rounded half up, clamped to the cap).
    pub fn mode(&self, state: usize) -> usize {
        ((self.means[state] + 0.5).floor() as usize).clamp(1, self.max_duration)
    }

    /// Cycle length implied by the means.
    pub fn cycle_steps(&self) -> f64 {
        self.means.iter().sum()
    }

    /// `table[j][d]` = ln P(duration = d | state j) for `d` in `1..=max_duration`,
    /// from a Gaussian discretized to the integers and renormalized over that
    /// range. Index 0 is unused.
    pub fn log_pmf_table<T: Real>(&self) -> Vec<Vec<T>> {
        (0..N_STATES)
            .map(|j| {
                let (mu, sd) = (self.means[j], self.stds[j]);
                let log_dens: Vec<f64> =
                    (1..=self.max_duration).map(|d| -0.5 * ((d as f64 - mu) / sd).powi(2)).collect();
                let m = log_dens.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let lse = m + log_dens.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
                std::iter::once(T::neg_infinity()).chain(log_dens.iter().map(|v| T::of(v - lse))).collect()
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeartRate {
    pub beats_per_minute: f64,
    pub systole_fraction: f64,
}

/// Durations for a heart rate. At 50 Hz: S1 and S2 fixed, systole fills the
/// S1→S2 interval, diastole the rest of the cycle; std is 25% of each mean
/// and the cap is `mean + 3.5·std` of the longest state.
pub fn build_duration_model(bpm: f64, systole_fraction: f64) -> Result<DurationModel> {
    if !(bpm > 0.0) || !(0.0..1.0).contains(&systole_fraction) {
        return Err(Error::InvalidArgument(format!("bpm {bpm} / systole fraction {systole_fraction} out of range")));
    }
    let cycle = 60.0 / bpm * OBSERVATION_RATE;
    let s1 = S1_MEAN_SECS * OBSERVATION_RATE;
    let s2 = S2_MEAN_SECS * OBSERVATION_RATE;
    let systole = systole_fraction * cycle - s1;
    let diastole = cycle - s1 - systole - s2;
    if systole <= 0.0 || diastole <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "{bpm} bpm with systole fraction {systole_fraction} leaves no room for systole/diastole"
        )));
    }
    let means = [s1, systole, s2, diastole];
    let stds = means.map(|m| STD_FRACTION * m);
    let max_duration =
        means.iter().zip(&stds).map(|(m, s)| m + MAX_DURATION_STDS * s).fold(0.0, f64::max).ceil() as usize;
    DurationModel::new(means, stds, max_duration)
}

/// Heart rate from the autocorrelation of the homomorphic envelope column.
///
/// The cycle is the highest local maximum of the normalized autocorrelation
/// at lags of 0.24–2 s (parabolic refinement). The systolic interval is the
/// largest autocorrelation between 0.2 s and half a cycle. A peak below
/// `max(0.2, 4/√T)` is treated as noise.
pub fn estimate_heart_rate<T: Real>(obs: &ObservationSequence<T>) -> Result<HeartRate> {
    let rate = obs.rate;
    let n = obs.len();
    if (n as f64) < MIN_RATE_SECS * rate {
        return Err(Error::SignalTooShort { required: (MIN_RATE_SECS * rate) as usize, actual: n });
    }
    let x: Vec<f64> = obs.values.iter().map(|r| r[0].to_f64_lossy()).collect();
    let mean = x.iter().sum::<f64>() / n as f64;
    let x: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let energy: f64 = x.iter().map(|v| v * v).sum();
    if energy <= 0.0 {
        return Err(Error::Unsegmentable("flat envelope".into()));
    }
    let min_lag = (MIN_HEART_PERIOD_SECS * rate).round() as usize;
    let max_lag = ((MAX_HEART_PERIOD_SECS * rate).round() as usize).min(n - 2);
    let acf: Vec<f64> =
        (0..=max_lag + 1).map(|k| x[..n - k].iter().zip(&x[k..]).map(|(a, b)| a * b).sum::<f64>() / energy).collect();

    let mut best: Option<usize> = None;
    for k in min_lag.max(1)..=max_lag {
        let is_peak = acf[k] > acf[k - 1] && acf[k] >= acf[k + 1];
        if is_peak && best.is_none_or(|b| acf[k] > acf[b]) {
            best = Some(k);
        }
    }
    let floor = (4.0 / (n as f64).sqrt()).max(0.2);
    let k = match best {
        Some(k) if acf[k] > floor => k,
        _ => return Err(Error::Unsegmentable("no periodic structure in the envelope".into())),
    };
    let (a, b, c) = (acf[k - 1], acf[k], acf[k + 1]);
    let denom = a - 2.0 * b + c;
    let shift = if denom.abs() > 1e-12 { (0.5 * (a - c) / denom).clamp(-0.5, 0.5) } else { 0.0 };
    let cycle_lag = k as f64 + shift;
    let bpm = 60.0 * rate / cycle_lag;

    let lo = (MIN_SYSTOLE_SECS * rate).round() as usize;
    let hi = ((cycle_lag / 2.0).round() as usize).max(lo);
    let sys_lag = (lo..=hi.min(acf.len() - 1))
        .max_by(|&i, &j| acf[i].partial_cmp(&acf[j]).unwrap().then(j.cmp(&i)))
        .unwrap_or(lo);
    let systole_fraction = (sys_lag as f64 / cycle_lag).clamp(0.2, 0.5);
    Ok(HeartRate { beats_per_minute: bpm, systole_fraction })
}
