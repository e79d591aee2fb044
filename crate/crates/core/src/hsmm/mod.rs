//! Heart-state segmentation with a logistic-regression hidden semi-Markov model.
//!
//! Pipeline per recording: [`build_observations`](crate::envelope::build_observations)
//! → [`LrEmissionModel`] log-likelihoods → [`estimate_heart_rate`] →
//! [`build_duration_model`] → [`viterbi_hsmm`].

mod duration;
mod emission;
mod segmenter;
mod viterbi;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use duration::{build_duration_model, estimate_heart_rate, DurationModel, HeartRate, S1_MEAN_SECS, S2_MEAN_SECS};
pub use emission::{emission_likelihood, log_emission_likelihood, train_emission_lr, LrEmissionModel};
pub use segmenter::{
    read_intervals, segment_recording, write_intervals, Interval, Segmentation, Segmenter, MIN_RECORDING_SECS,
};
pub use viterbi::{path_score, viterbi_hsmm, Decoding};

pub const N_STATES: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum HeartState {
    S1,
    Systole,
    S2,
    Diastole,
}

impl HeartState {
    pub const ALL: [HeartState; N_STATES] = [HeartState::S1, HeartState::Systole, HeartState::S2, HeartState::Diastole];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> HeartState {
        Self::ALL[i % N_STATES]
    }

    /// S1 → Systole → S2 → Diastole → S1.
    pub fn successor(self) -> HeartState {
        Self::from_index(self.index() + 1)
    }

    pub fn predecessor(self) -> HeartState {
        Self::from_index(self.index() + N_STATES - 1)
    }

    pub fn name(self) -> &'static str {
        match self {
            HeartState::S1 => "S1",
            HeartState::Systole => "systole",
            HeartState::S2 => "S2",
            HeartState::Diastole => "diastole",
        }
    }
}

impl fmt::Display for HeartState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for HeartState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "s1" => Ok(HeartState::S1),
            "systole" => Ok(HeartState::Systole),
            "s2" => Ok(HeartState::S2),
            "diastole" => Ok(HeartState::Diastole),
            other => Err(Error::parse("heart state", format!("unknown state {other:?}"))),
        }
    }
}

/// Per-step heart states at the observation rate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateSequence {
    pub states: Vec<HeartState>,
    /// Steps where the sequence enters S1 from diastole. Step 0 is never an
    /// onset, because the sound may have started before the recording.
    pub s1_onsets: Vec<usize>,
}

impl StateSequence {
    pub fn from_states(states: Vec<HeartState>) -> Self {
        let s1_onsets =
            (1..states.len()).filter(|&t| states[t] == HeartState::S1 && states[t - 1] != HeartState::S1).collect();
        StateSequence { states, s1_onsets }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// True when every change of state moves to the cyclic successor.
    pub fn follows_cycle(&self) -> bool {
        self.states.windows(2).all(|w| w[0] == w[1] || w[1] == w[0].successor())
    }

    /// Maximal runs as `(state, start, end_exclusive)`.
    pub fn runs(&self) -> Vec<(HeartState, usize, usize)> {
        let mut out = Vec::new();
        let mut start = 0;
        for t in 1..=self.states.len() {
            if t == self.states.len() || self.states[t] != self.states[start] {
                out.push((self.states[start], start, t));
                start = t;
            }
        }
        out
    }
}
