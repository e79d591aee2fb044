//! The four per-time-step envelopes observed by the heart-state segmenter.
//!
//! All functions take audio at [`CANONICAL_RATE`](crate::dataset::CANONICAL_RATE)
//! (1000 Hz) and return one value per input sample, except
//! [`build_observations`] which downsamples to [`OBSERVATION_RATE`].
//!
//! | envelope     | construction                                             |
//! |--------------|----------------------------------------------------------|
//! | homomorphic  | `exp(lowpass_8Hz(ln(|analytic| + ε)))`                   |
//! | Hilbert      | `|analytic|`                                             |
//! | wavelet      | `lowpass_8Hz(|bandpass_25–100Hz|)`                       |
//! | PSD          | mean power in 40–60 Hz over 50 ms Hamming windows        |

use std::io::Write;

use crate::dsp::{analytic_signal, lowpass1_zero_phase, Biquad, BiquadKind};
use crate::error::{Error, Result};
use crate::scalar::Real;

pub const AUDIO_RATE: f64 = 1000.0;
pub const OBSERVATION_RATE: f64 = 50.0;
/// Audio samples per observation step.
pub const DECIMATION: usize = 20;
pub const N_FEATURES: usize = 4;

pub const HOMOMORPHIC_EPS: f64 = 1e-8;
const SMOOTHING_HZ: f64 = 8.0;
const MIN_FILTER_LEN: usize = 64;
const WAVELET_BAND: (f64, f64) = (25.0, 100.0);
const PSD_BAND: (usize, usize) = (40, 60);
const PSD_WINDOW: usize = 50;
const PSD_HOP: usize = 20;

/// `T × 4` observation matrix at 50 Hz, columns z-scored per recording.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSequence<T> {
    /// Columns: homomorphic, Hilbert, wavelet, PSD.
    pub values: Vec<[T; N_FEATURES]>,
    pub rate: f64,
}

impl<T: Real> ObservationSequence<T> {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        self.values.iter().map(|row| row[j]).collect()
    }
}

fn require_len(signal_len: usize, required: usize) -> Result<()> {
    if signal_len < required {
        Err(Error::SignalTooShort { required, actual: signal_len })
    } else {
        Ok(())
    }
}

pub fn hilbert_envelope<T: Real>(signal: &[T]) -> Result<Vec<T>> {
    require_len(signal.len(), 1)?;
    Ok(analytic_signal(signal).iter().map(|z| z.norm()).collect())
}

pub fn homomorphic_envelope<T: Real>(signal: &[T]) -> Result<Vec<T>> {
    require_len(signal.len(), MIN_FILTER_LEN)?;
    let eps = T::of(HOMOMORPHIC_EPS);
    let log_amp: Vec<T> = analytic_signal(signal).iter().map(|z| (z.norm() + eps).ln()).collect();
    Ok(lowpass1_zero_phase(&log_amp, SMOOTHING_HZ, AUDIO_RATE).into_iter().map(T::exp).collect())
}

pub fn wavelet_envelope<T: Real>(signal: &[T]) -> Result<Vec<T>> {
    require_len(signal.len(), MIN_FILTER_LEN)?;
    let hp = Biquad::new(BiquadKind::HighPass, WAVELET_BAND.0, AUDIO_RATE);
    let lp = Biquad::new(BiquadKind::LowPass, WAVELET_BAND.1, AUDIO_RATE);
    let band = lp.zero_phase(&hp.zero_phase(signal));
    let rectified: Vec<T> = band.into_iter().map(|v| v.abs()).collect();
    // rounding can leave -0.0-ish noise; clamp keeps the envelope nonnegative
    Ok(lowpass1_zero_phase(&rectified, SMOOTHING_HZ, AUDIO_RATE).into_iter().map(|v| v.max(T::zero())).collect())
}

/// Short-time mean power in the 40–60 Hz band (1 Hz spacing), linearly
/// interpolated from window centres back to every input sample.
pub fn psd_envelope<T: Real>(signal: &[T]) -> Result<Vec<T>> {
    require_len(signal.len(), PSD_WINDOW)?;
    let n = signal.len();
    let window: Vec<T> = (0..PSD_WINDOW)
        .map(|i| T::of(0.54 - 0.46 * (2.0 * std::f64::consts::PI * i as f64 / (PSD_WINDOW - 1) as f64).cos()))
        .collect();
    let freqs: Vec<usize> = (PSD_BAND.0..=PSD_BAND.1).collect();
    let twiddles: Vec<Vec<(T, T)>> = freqs
        .iter()
        .map(|&f| {
            (0..PSD_WINDOW)
                .map(|i| {
                    let ph = -2.0 * std::f64::consts::PI * f as f64 * i as f64 / AUDIO_RATE;
                    (T::of(ph.cos()), T::of(ph.sin()))
                })
                .collect()
        })
        .collect();
    let n_windows = (n - PSD_WINDOW) / PSD_HOP + 1;
    let mut centres = Vec::with_capacity(n_windows);
    let mut powers = Vec::with_capacity(n_windows);
    let norm = T::one() / T::of_usize(freqs.len());
    for w in 0..n_windows {
        let start = w * PSD_HOP;
        let frame: Vec<T> = signal[start..start + PSD_WINDOW].iter().zip(&window).map(|(&x, &h)| x * h).collect();
        let mut total = T::zero();
        for tw in &twiddles {
            let (mut re, mut im) = (T::zero(), T::zero());
            for (x, &(c, s)) in frame.iter().zip(tw) {
                re += *x * c;
                im += *x * s;
            }
            total += re * re + im * im;
        }
        centres.push(start as f64 + (PSD_WINDOW as f64 - 1.0) / 2.0);
        powers.push(total * norm);
    }
    Ok(interpolate(&centres, &powers, n))
}

fn interpolate<T: Real>(at: &[f64], values: &[T], n: usize) -> Vec<T> {
    let mut out = Vec::with_capacity(n);
    let mut j = 0;
    for i in 0..n {
        let t = i as f64;
        if t <= at[0] {
            out.push(values[0]);
            continue;
        }
        if t >= at[at.len() - 1] {
            out.push(values[values.len() - 1]);
            continue;
        }
        while at[j + 1] < t {
            j += 1;
        }
        let frac = T::of((t - at[j]) / (at[j + 1] - at[j]));
        out.push(values[j] + (values[j + 1] - values[j]) * frac);
    }
    out
}

/// Block mean over non-overlapping groups of [`DECIMATION`] samples.
fn decimate<T: Real>(x: &[T]) -> Vec<T> {
    let inv = T::one() / T::of_usize(DECIMATION);
    x.chunks_exact(DECIMATION).map(|c| c.iter().copied().sum::<T>() * inv).collect()
}

/// Z-score in place; constant columns become all zeros.
pub(crate) fn zscore<T: Real>(x: &mut [T]) {
    let n = T::of_usize(x.len().max(1));
    let mean = x.iter().copied().sum::<T>() / n;
    let var = x.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() / n;
    let std = var.sqrt();
    let tiny = T::epsilon() * (mean.abs() + T::one()) * T::of(16.0);
    for v in x.iter_mut() {
        *v = if std > tiny { (*v - mean) / std } else { T::zero() };
    }
}

/// Computes the four envelopes, block-averages them to 50 Hz and z-scores
/// each column. Output has `floor(len / 20)` rows.
pub fn build_observations<T: Real>(signal: &[T]) -> Result<ObservationSequence<T>> {
    require_len(signal.len(), AUDIO_RATE as usize)?;
    let mut columns = [
        decimate(&homomorphic_envelope(signal)?),
        decimate(&hilbert_envelope(signal)?),
        decimate(&wavelet_envelope(signal)?),
        decimate(&psd_envelope(signal)?),
    ];
    for c in columns.iter_mut() {
        zscore(c);
    }
    let rows = columns[0].len();
    let values = (0..rows).map(|t| [columns[0][t], columns[1][t], columns[2][t], columns[3][t]]).collect();
    Ok(ObservationSequence { values, rate: OBSERVATION_RATE })
}

/// Writes `t_seconds,hom,hil,wav,psd` rows for plotting.
pub fn write_envelope_dump<T: Real, W: Write>(obs: &ObservationSequence<T>, mut out: W) -> std::io::Result<()> {
    writeln!(out, "t_seconds,hom,hil,wav,psd")?;
    for (t, row) in obs.values.iter().enumerate() {
        writeln!(out, "{:.3},{},{},{},{}", t as f64 / obs.rate, row[0], row[1], row[2], row[3])?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn corr(a: &[f64], b: &[f64]) -> f64 {
        let n = a.len() as f64;
        let ma = a.iter().sum::<f64>() / n;
        let mb = b.iter().sum::<f64>() / n;
        let c: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
        let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
        let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
        c / (va * vb).sqrt()
    }

    fn tone(freq: f64, amp: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| amp * (2.0 * PI * freq * i as f64 / AUDIO_RATE).sin()).collect()
    }

    fn interior(x: &[f64]) -> &[f64] {
        let e = x.len() / 20;
        &x[e..x.len() - e]
    }

    #[test]
    fn homomorphic_zero_signal_is_epsilon_floor() {
        let env = homomorphic_envelope(&vec![0.0_f64; 500]).unwrap();
        assert!(env.iter().all(|&v| (v - HOMOMORPHIC_EPS).abs() < 1e-20));
    }

    #[test]
    fn homomorphic_tracks_am_modulator() {
        let n = 4000;
        let modulator: Vec<f64> = (0..n).map(|i| 1.0 + 0.5 * (2.0 * PI * 2.0 * i as f64 / AUDIO_RATE).sin()).collect();
        let signal: Vec<f64> = modulator
            .iter()
            .enumerate()
            .map(|(i, m)| 0.5 * m * (2.0 * PI * 50.0 * i as f64 / AUDIO_RATE).sin())
            .collect();
        let env = homomorphic_envelope(&signal).unwrap();
        assert!(corr(interior(&env), interior(&modulator)) > 0.95);
    }

    #[test]
    fn homomorphic_scales_linearly() {
        let n = 2000;
        let signal: Vec<f64> = (0..n)
            .map(|i| {
                (1.0 + 0.5 * (2.0 * PI * 2.0 * i as f64 / AUDIO_RATE).sin())
                    * (2.0 * PI * 50.0 * i as f64 / AUDIO_RATE).sin()
                    * 0.05
            })
            .collect();
        let scaled: Vec<f64> = signal.iter().map(|v| v * 10.0).collect();
        let a = homomorphic_envelope(&signal).unwrap();
        let b = homomorphic_envelope(&scaled).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((y / (10.0 * x) - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn homomorphic_rejects_short_signal() {
        assert!(matches!(homomorphic_envelope(&[0.0_f64; 63]), Err(Error::SignalTooShort { .. })));
    }

    #[test]
    fn hilbert_of_sine_is_amplitude() {
        let env = hilbert_envelope(&tone(37.0, 0.7, 2000)).unwrap();
        for v in interior(&env) {
            assert!((v - 0.7).abs() < 0.02 * 0.7);
        }
        assert!(hilbert_envelope(&[0.0_f64; 64]).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn hilbert_recovers_gaussian_profile_of_chirp() {
        let n = 3000;
        let dur = n as f64 / AUDIO_RATE;
        let profile: Vec<f64> = (0..n).map(|i| (-((i as f64 - 1500.0) / 400.0).powi(2)).exp()).collect();
        let signal: Vec<f64> = (0..n)
            .map(|i| {
                let t = i as f64 / AUDIO_RATE;
                // instantaneous frequency 20 → 200 Hz
                let phase = 2.0 * PI * (20.0 * t + 0.5 * (180.0 / dur) * t * t);
                profile[i] * phase.sin()
            })
            .collect();
        let env = hilbert_envelope(&signal).unwrap();
        assert!(corr(&env, &profile) > 0.99);
    }

    #[test]
    fn wavelet_localizes_burst() {
        let n = 2000;
        let centre = 1000.0;
        let signal: Vec<f64> = (0..n)
            .map(|i| {
                let t = i as f64;
                (-((t - centre) / 25.0).powi(2)).exp() * (2.0 * PI * 50.0 * t / AUDIO_RATE).sin()
            })
            .collect();
        let env = wavelet_envelope(&signal).unwrap();
        let peak = argmax(&env);
        assert!((peak as f64 - centre).abs() <= 20.0, "peak at {peak}");
    }

    #[test]
    fn wavelet_rejects_out_of_band_tone() {
        let e50: f64 = wavelet_envelope(&tone(50.0, 1.0, 2000)).unwrap().iter().map(|v| v * v).sum();
        let e400: f64 = wavelet_envelope(&tone(400.0, 1.0, 2000)).unwrap().iter().map(|v| v * v).sum();
        assert!(e400 < 0.1 * e50, "{e400} vs {e50}");
        assert!(wavelet_envelope(&[0.0_f64; 100]).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn psd_band_power() {
        let p50 = psd_envelope(&tone(50.0, 1.0, 2000)).unwrap();
        let p200 = psd_envelope(&tone(200.0, 1.0, 2000)).unwrap();
        let inner = interior(&p50);
        let m = inner.iter().sum::<f64>() / inner.len() as f64;
        assert!(inner.iter().all(|v| (v - m).abs() < 0.1 * m), "50 Hz envelope not flat");
        assert!(p200.iter().zip(&p50).all(|(a, b)| *a < 0.1 * b));
        assert!(psd_envelope(&[0.0_f64; 200]).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn psd_is_quadratic() {
        let x = tone(47.0, 0.3, 700);
        let x2: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        let a = psd_envelope(&x).unwrap();
        let b = psd_envelope(&x2).unwrap();
        for (p, q) in a.iter().zip(&b) {
            assert!((q - 4.0 * p).abs() <= 1e-6 * q.abs().max(1e-300));
        }
        assert!(psd_envelope(&[0.0_f64; 49]).is_err());
    }

    #[test]
    fn observations_shape_and_normalization() {
        let signal: Vec<f64> = (0..10_000)
            .map(|i| {
                let t = i as f64 / AUDIO_RATE;
                (1.2 + (2.0 * PI * 1.1 * t).sin()) * (2.0 * PI * 60.0 * t).sin() * 0.3
            })
            .collect();
        let obs = build_observations(&signal).unwrap();
        assert_eq!(obs.len(), 500);
        for j in 0..N_FEATURES {
            let col = obs.column(j);
            let m = col.iter().sum::<f64>() / col.len() as f64;
            let s = (col.iter().map(|v| (v - m).powi(2)).sum::<f64>() / col.len() as f64).sqrt();
            assert!(m.abs() < 1e-6 && (s - 1.0).abs() < 1e-3, "column {j}: mean {m} std {s}");
        }
        assert!(build_observations(&signal[..999]).is_err());
    }

    #[test]
    fn constant_column_normalizes_to_zero() {
        let mut c = vec![3.0_f64; 10];
        zscore(&mut c);
        assert!(c.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn envelopes_are_time_aligned_with_impulse() {
        let mut signal = vec![0.0_f64; 3000];
        let at = 1500;
        signal[at] = 1.0;
        let envs = [
            homomorphic_envelope(&signal).unwrap(),
            hilbert_envelope(&signal).unwrap(),
            wavelet_envelope(&signal).unwrap(),
            psd_envelope(&signal).unwrap(),
        ];
        for (k, env) in envs.iter().enumerate() {
            let peak = argmax(env);
            assert!((peak as i64 - at as i64).abs() <= 40, "envelope {k} peaks at {peak}");
            assert!(env.iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn generic_over_f32() {
        let x: Vec<f32> = tone(50.0, 0.5, 1200).into_iter().map(|v| v as f32).collect();
        let obs = build_observations(&x).unwrap();
        assert_eq!(obs.len(), 60);
    }

    fn argmax(x: &[f64]) -> usize {
        x.iter().enumerate().fold((0, f64::MIN), |b, (i, &v)| if v > b.1 { (i, v) } else { b }).0
    }
}
