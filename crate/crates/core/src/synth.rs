//! Parametric synthetic phonocardiograms with known heart-state boundaries.
//!
//! Each cycle holds an S1 burst (Gaussian-windowed 45–55 Hz tone) and a
//! softer, shorter S2 burst (60–75 Hz). Every cycle also carries one burst of
//! 150–300 Hz band-limited noise with a Hann envelope. In abnormal
//! recordings the burst sits in systole (a systolic murmur); in normal ones
//! an identical burst sits in diastole. Both classes therefore have the same
//! spectral content and differ only in where the noise falls within the
//! cycle.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::{Label, SignalRecording};
use crate::dsp::{Biquad, BiquadKind};
use crate::envelope::DECIMATION;
use crate::hsmm::{HeartState, StateSequence};
use crate::seed::derive_indexed;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub sample_rate: u32,
    pub duration_secs: (f64, f64),
    pub bpm: (f64, f64),
    /// S1 onset to S2 onset, as a fraction of the cycle.
    pub systole_fraction: (f64, f64),
    /// Relative beat-to-beat period jitter (standard deviation).
    pub beat_jitter: f64,
    pub noise_level: f64,
    pub murmur_level: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            sample_rate: 1000,
            duration_secs: (8.0, 12.0),
            bpm: (60.0, 100.0),
            systole_fraction: (0.32, 0.38),
            beat_jitter: 0.03,
            noise_level: 0.02,
            murmur_level: 0.3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticRecording {
    pub recording: SignalRecording,
    /// Ground-truth state of every audio sample.
    pub states: Vec<HeartState>,
    /// Audio samples where S1 begins (sample 0 excluded).
    pub s1_onsets: Vec<usize>,
    pub bpm: f64,
    pub systole_fraction: f64,
}

impl SyntheticRecording {
    /// Ground truth at the observation rate: the state at the centre of each
    /// block of 20 samples.
    pub fn step_labels(&self) -> StateSequence {
        let steps = self.states.len() / DECIMATION;
        StateSequence::from_states((0..steps).map(|k| self.states[k * DECIMATION + DECIMATION / 2]).collect())
    }
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    // Box–Muller
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

struct Cycle {
    onset: f64,
    s1: f64,
    systole: f64,
    s2: f64,
    diastole: f64,
}

/// One synthetic recording, fully determined by `seed`.
pub fn synth_recording(id: &str, label: Label, seed: u64, cfg: &SynthConfig) -> SyntheticRecording {
    use std::f64::consts::PI;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fs = cfg.sample_rate as f64;
    let uniform = |rng: &mut ChaCha8Rng, r: (f64, f64)| if r.1 > r.0 { rng.gen_range(r.0..r.1) } else { r.0 };
    let duration = uniform(&mut rng, cfg.duration_secs);
    let bpm = uniform(&mut rng, cfg.bpm);
    let sys_frac = uniform(&mut rng, cfg.systole_fraction);
    let f1 = rng.gen_range(45.0..55.0);
    let f2 = rng.gen_range(60.0..75.0);
    let n = (duration * fs).round() as usize;
    let period = 60.0 / bpm;

    // lay out cycles from a random phase before t = 0
    let mut cycles = Vec::new();
    let mut t = -rng.gen_range(0.0..period);
    while t < duration {
        let p = period * (1.0 + cfg.beat_jitter * gaussian(&mut rng).clamp(-2.5, 2.5));
        let s1 = 0.12 * rng.gen_range(0.9..1.1);
        let s2 = 0.09 * rng.gen_range(0.9..1.1);
        let systole = (sys_frac * p - s1).max(0.04);
        let diastole = (p - s1 - systole - s2).max(0.05);
        cycles.push(Cycle { onset: t, s1, systole, s2, diastole });
        t += s1 + systole + s2 + diastole;
    }

    let mut states = vec![HeartState::Diastole; n];
    let mut s1_onsets = Vec::new();
    for c in &cycles {
        let bounds = [c.onset, c.onset + c.s1, c.onset + c.s1 + c.systole, c.onset + c.s1 + c.systole + c.s2];
        let end = bounds[3] + c.diastole;
        let to_idx = |x: f64| ((x * fs).round().max(0.0) as usize).min(n);
        for (k, state) in HeartState::ALL.iter().enumerate() {
            let a = to_idx(bounds[k]);
            let b = if k == 3 { to_idx(end) } else { to_idx(bounds[k + 1]) };
            for s in &mut states[a..b] {
                *s = *state;
            }
        }
        let onset = to_idx(c.onset);
        if onset > 0 && onset < n {
            s1_onsets.push(onset);
        }
    }

    // band-limited murmur noise source, unit RMS
    let white: Vec<f64> = (0..n).map(|_| gaussian(&mut rng)).collect();
    let hp = Biquad::new(BiquadKind::HighPass, 150.0, fs);
    let lp = Biquad::new(BiquadKind::LowPass, 300.0, fs);
    let band = lp.zero_phase(&hp.zero_phase(&white));
    let rms = (band.iter().map(|v| v * v).sum::<f64>() / n.max(1) as f64).sqrt().max(1e-12);

    let mut x: Vec<f64> = (0..n).map(|_| cfg.noise_level * gaussian(&mut rng)).collect();
    let add_burst = |x: &mut [f64], centre: f64, sigma: f64, freq: f64, amp: f64, phase: f64| {
        let lo = (((centre - 4.0 * sigma) * fs).floor().max(0.0)) as usize;
        let hi = (((centre + 4.0 * sigma) * fs).ceil().max(0.0) as usize).min(n);
        for (i, v) in x.iter_mut().enumerate().take(hi).skip(lo) {
            let dt = i as f64 / fs - centre;
            *v += amp * (-0.5 * (dt / sigma).powi(2)).exp() * (2.0 * PI * freq * dt + phase).sin();
        }
    };
    for c in &cycles {
        let a1 = rng.gen_range(0.7..1.0);
        let a2 = rng.gen_range(0.45..0.7);
        let ph1 = rng.gen_range(0.0..2.0 * PI);
        let ph2 = rng.gen_range(0.0..2.0 * PI);
        add_burst(&mut x, c.onset + c.s1 / 2.0, c.s1 / 6.0, f1, a1, ph1);
        let s2_start = c.onset + c.s1 + c.systole;
        add_burst(&mut x, s2_start + c.s2 / 2.0, c.s2 / 6.0, f2, a2, ph2);

        let len = 0.7 * c.systole;
        let start = match label {
            Label::Abnormal => c.onset + c.s1 + 0.15 * c.systole,
            _ => s2_start + c.s2 + 0.3 * c.diastole,
        };
        let amp = cfg.murmur_level * rng.gen_range(0.8..1.2);
        let lo = ((start * fs).round().max(0.0) as usize).min(n);
        let hi = (((start + len) * fs).round().max(0.0) as usize).min(n);
        let width = ((len * fs).round()).max(1.0);
        for i in lo..hi {
            let u = (i as f64 - start * fs) / width;
            let hann = 0.5 - 0.5 * (2.0 * PI * u.clamp(0.0, 1.0)).cos();
            x[i] += amp * hann * band[i] / rms;
        }
    }

    let peak = x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if peak > 0.95 {
        let g = 0.95 / peak;
        x.iter_mut().for_each(|v| *v *= g);
    }
    let recording = SignalRecording { id: id.to_string(), samples: x, sample_rate: cfg.sample_rate, label };
    SyntheticRecording { recording, states, s1_onsets, bpm, systole_fraction: sys_frac }
}

/// `n` recordings `syn0000…`, alternating normal/abnormal.
pub fn synth_dataset(n: usize, seed: u64, cfg: &SynthConfig) -> Vec<SyntheticRecording> {
    (0..n)
        .map(|i| {
            let label = if i % 2 == 0 { Label::Normal } else { Label::Abnormal };
            synth_recording(&format!("syn{i:04}"), label, derive_indexed(seed, i as u64), cfg)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_bounded() {
        let cfg = SynthConfig::default();
        let a = synth_recording("a", Label::Abnormal, 11, &cfg);
        let b = synth_recording("a", Label::Abnormal, 11, &cfg);
        assert_eq!(a.recording, b.recording);
        assert!(a.recording.samples.iter().all(|v| v.abs() <= 1.0));
        assert!(SignalRecording::new("a", a.recording.samples.clone(), 1000, Label::Abnormal).is_ok());
    }

    #[test]
    fn onsets_match_planted_rate() {
        let cfg =
            SynthConfig { duration_secs: (30.0, 30.0), bpm: (60.0, 60.0), beat_jitter: 0.0, ..Default::default() };
        let r = synth_recording("x", Label::Normal, 5, &cfg);
        assert!((29..=30).contains(&r.s1_onsets.len()), "{}", r.s1_onsets.len());
        let seq = r.step_labels();
        assert!(seq.follows_cycle());
        assert_eq!(seq.len(), 1500);
    }

    #[test]
    fn dataset_alternates_labels() {
        let d = synth_dataset(4, 1, &SynthConfig { duration_secs: (4.0, 4.0), ..Default::default() });
        let labels: Vec<Label> = d.iter().map(|r| r.recording.label).collect();
        assert_eq!(labels, vec![Label::Normal, Label::Abnormal, Label::Normal, Label::Abnormal]);
        assert_eq!(d[2].recording.id, "syn0002");
    }
}
