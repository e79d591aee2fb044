use std::io::Write;

use super::{
    build_duration_model, estimate_heart_rate, log_emission_likelihood, train_emission_lr, viterbi_hsmm, HeartRate,
    HeartState, LrEmissionModel, StateSequence, N_STATES,
};
use crate::dataset::{resample, SignalRecording, CANONICAL_RATE};
use crate::envelope::{build_observations, ObservationSequence, DECIMATION};
use crate::error::{Error, Result};
use crate::synth::{synth_dataset, SynthConfig, SyntheticRecording};

pub const MIN_RECORDING_SECS: f64 = 3.0;

/// One run of a state, in audio samples at 1000 Hz (`end` exclusive).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Interval {
    pub start: usize,
    pub end: usize,
    pub state: HeartState,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Segmentation {
    pub recording_id: String,
    /// Decoded states at 50 Hz.
    pub states: StateSequence,
    /// S1 onsets in audio samples at 1000 Hz.
    pub s1_onset_samples: Vec<usize>,
    pub intervals: Vec<Interval>,
    pub heart_rate: HeartRate,
    pub n_samples: usize,
}

impl Segmentation {
    pub fn count(&self, state: HeartState) -> usize {
        self.intervals.iter().filter(|i| i.state == state).count()
    }
}

/// Trained segmenter: an emission model shared by every decode.
#[derive(Debug, Clone)]
pub struct Segmenter {
    pub emission: LrEmissionModel<f64>,
}

impl Segmenter {
    pub fn new(emission: LrEmissionModel<f64>) -> Self {
        Segmenter { emission }
    }

    /// Trains on recordings with known per-step labels.
    pub fn train(labelled: &[(&SignalRecording, StateSequence)]) -> Result<Self> {
        let mut obs = Vec::with_capacity(labelled.len());
        let mut labels = Vec::with_capacity(labelled.len());
        for (rec, lab) in labelled {
            let rec = resample(rec, CANONICAL_RATE)?;
            let o = build_observations(&rec.samples)?;
            let t = o.len().min(lab.len());
            obs.push(ObservationSequence { values: o.values[..t].to_vec(), rate: o.rate });
            labels.push(StateSequence::from_states(lab.states[..t].to_vec()));
        }
        Ok(Segmenter::new(train_emission_lr(&obs, &labels)?))
    }

    pub fn train_on_synthetic(recordings: &[SyntheticRecording]) -> Result<Self> {
        let labelled: Vec<_> = recordings.iter().map(|r| (&r.recording, r.step_labels())).collect();
        Self::train(&labelled)
    }

    /// Segmenter fit on `n` generated recordings; the default when no
    /// annotated data is supplied.
    pub fn train_default(seed: u64, n: usize) -> Result<Self> {
        let cfg = SynthConfig { duration_secs: (10.0, 14.0), ..SynthConfig::default() };
        Self::train_on_synthetic(&synth_dataset(n, seed, &cfg))
    }

    pub fn segment(&self, rec: &SignalRecording) -> Result<Segmentation> {
        segment_recording(&self.emission, rec)
    }
}

/// Full segmentation of one recording: envelopes → emissions → heart rate →
/// durations → Viterbi, then state runs mapped back to audio samples
/// (observation step `k` covers samples `20k..20k+20`).
pub fn segment_recording(model: &LrEmissionModel<f64>, rec: &SignalRecording) -> Result<Segmentation> {
    if rec.duration_secs() < MIN_RECORDING_SECS {
        return Err(Error::SignalTooShort {
            required: (MIN_RECORDING_SECS * rec.sample_rate as f64) as usize,
            actual: rec.samples.len(),
        });
    }
    let audio = resample(rec, CANONICAL_RATE)?;
    let obs = build_observations(&audio.samples)?;
    let emissions: Vec<[f64; N_STATES]> = obs.values.iter().map(|row| log_emission_likelihood(model, row)).collect();
    let heart_rate = estimate_heart_rate(&obs)?;
    let durations = build_duration_model(heart_rate.beats_per_minute, heart_rate.systole_fraction)?;
    if (emissions.len() as f64) < durations.cycle_steps() {
        return Err(Error::SignalTooShort {
            required: durations.cycle_steps().ceil() as usize,
            actual: emissions.len(),
        });
    }
    let decoded = viterbi_hsmm(&emissions, &durations)?;
    let n_samples = audio.samples.len();
    let runs = decoded.sequence.runs();
    let last = runs.len() - 1;
    let intervals: Vec<Interval> = runs
        .iter()
        .enumerate()
        .map(|(i, &(state, a, b))| Interval {
            start: a * DECIMATION,
            end: if i == last { n_samples } else { b * DECIMATION },
            state,
        })
        .collect();
    let s1_onset_samples = decoded.sequence.s1_onsets.iter().map(|&k| k * DECIMATION).collect();
    Ok(Segmentation {
        recording_id: rec.id.clone(),
        states: decoded.sequence,
        s1_onset_samples,
        intervals,
        heart_rate,
        n_samples,
    })
}

/// Writes `start_seconds,end_seconds,state` lines.
pub fn write_intervals<W: Write>(intervals: &[Interval], rate: u32, mut out: W) -> std::io::Result<()> {
    let r = rate as f64;
    for iv in intervals {
        writeln!(out, "{:.3},{:.3},{}", iv.start as f64 / r, iv.end as f64 / r, iv.state)?;
    }
    Ok(())
}

/// Parses the interval format; also accepted as a training annotation.
pub fn read_intervals(text: &str, rate: u32) -> Result<Vec<Interval>> {
    let r = rate as f64;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let loc = format!("interval line {}", i + 1);
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 3 {
            return Err(Error::parse(&loc, "expected start,end,state"));
        }
        let start: f64 = cols[0].trim().parse().map_err(|_| Error::parse(&loc, "bad start"))?;
        let end: f64 = cols[1].trim().parse().map_err(|_| Error::parse(&loc, "bad end"))?;
        if !(end >= start) {
            return Err(Error::parse(&loc, "end before start"));
        }
        out.push(Interval {
            start: (start * r).round() as usize,
            end: (end * r).round() as usize,
            state: cols[2].parse()?,
        });
    }
    Ok(out)
}

impl StateSequence {
    /// Per-step labels from audio-rate intervals, sampling the centre of each
    /// 20-sample block. Steps not covered by any interval are an error.
    pub fn from_intervals(intervals: &[Interval], n_steps: usize) -> Result<Self> {
        let mut states = Vec::with_capacity(n_steps);
        for k in 0..n_steps {
            let centre = k * DECIMATION + DECIMATION / 2;
            let iv = intervals
                .iter()
                .find(|iv| iv.start <= centre && centre < iv.end)
                .ok_or_else(|| Error::parse("annotation", format!("sample {centre} not covered")))?;
            states.push(iv.state);
        }
        Ok(StateSequence::from_states(states))
    }
}
