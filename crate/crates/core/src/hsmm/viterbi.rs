//! Explicit-duration Viterbi over the cyclic heart-state chain.
//!
//! A path is a sequence of segments `(state, duration)` where each state is
//! the cyclic successor of the previous one. Its score is
//!
//! ```text
//! Σ_t ln b_{q_t}(O_t) + Σ_{complete segments} ln P(d | state)
//! ```
//!
//! The first segment starts in the state with the largest emission at t = 0
//! (lowest index on ties). The last segment is treated as cut off by the end
//! of the recording and carries no duration term. Every segment, including
//! the last, is at most `max_duration` long.
//!
//! Scores are accumulated segment by segment in time order: the emission
//! sum of a segment is added left to right starting from zero, then added to
//! the running score, then the duration term is added. Any implementation
//! following that order reproduces [`Decoding::score`] bit for bit.

use super::{DurationModel, HeartState, StateSequence, N_STATES};
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct Decoding<T> {
    pub sequence: StateSequence,
    pub score: T,
}

fn initial_state<T: Real>(first: &[T; N_STATES]) -> usize {
    let mut best = 0;
    for j in 1..N_STATES {
        if first[j] > first[best] {
            best = j;
        }
    }
    best
}

fn check_emissions<T: Real>(emissions: &[[T; N_STATES]]) -> Result<()> {
    if emissions.is_empty() {
        return Err(Error::Empty("cannot decode an empty emission matrix".into()));
    }
    for (t, row) in emissions.iter().enumerate() {
        if row.iter().any(|v| v.is_nan()) {
            return Err(Error::InvalidArgument(format!("NaN emission at step {t}")));
        }
        if row.iter().all(|v| *v == T::neg_infinity()) {
            return Err(Error::DeadEmission(t));
        }
    }
    Ok(())
}

/// Most probable segmentation of `emissions` (`T × 4` log-likelihoods).
pub fn viterbi_hsmm<T: Real>(emissions: &[[T; N_STATES]], durations: &DurationModel) -> Result<Decoding<T>> {
    check_emissions(emissions)?;
    let n = emissions.len();
    let max_d = durations.max_duration;
    let log_pmf = durations.log_pmf_table::<T>();
    let neg_inf = T::neg_infinity();

    // entry[s][j]: best score of a path whose next segment has state j and starts at s
    let mut entry = vec![[neg_inf; N_STATES]; n + 1];
    // start of the segment (state = predecessor of j) that ended at s - 1
    let mut back = vec![[usize::MAX; N_STATES]; n + 1];
    let s0 = initial_state(&emissions[0]);
    entry[0][s0] = T::zero();

    let mut best_final = neg_inf;
    let mut final_seg: Option<(usize, usize)> = None;

    for start in 0..n {
        for j in 0..N_STATES {
            let base = entry[start][j];
            if base == neg_inf {
                continue;
            }
            let next = (j + 1) % N_STATES;
            let mut seg = T::zero();
            for d in 1..=max_d.min(n - start) {
                seg += emissions[start + d - 1][j];
                let end = start + d;
                let before_duration = base + seg;
                if end == n {
                    // `>=`: later starts are shorter segments and win ties
                    if before_duration >= best_final && before_duration > neg_inf {
                        best_final = before_duration;
                        final_seg = Some((start, j));
                    }
                } else {
                    let cand = before_duration + log_pmf[j][d];
                    if cand >= entry[end][next] && cand > neg_inf {
                        entry[end][next] = cand;
                        back[end][next] = start;
                    }
                }
            }
        }
    }

    let (mut start, mut state) =
        final_seg.ok_or_else(|| Error::InvalidArgument("no segmentation with finite score".into()))?;
    let mut states = vec![HeartState::S1; n];
    let mut end = n;
    loop {
        for s in &mut states[start..end] {
            *s = HeartState::from_index(state);
        }
        if start == 0 {
            break;
        }
        let prev_start = back[start][state];
        end = start;
        start = prev_start;
        state = (state + N_STATES - 1) % N_STATES;
    }
    Ok(Decoding { sequence: StateSequence::from_states(states), score: best_final })
}

/// Score of an arbitrary path under the decoder's objective, or `None` when
/// the path is not one the decoder may return (wrong start state, illegal
/// transition, or a segment longer than `max_duration`).
pub fn path_score<T: Real>(emissions: &[[T; N_STATES]], durations: &DurationModel, states: &[HeartState]) -> Option<T> {
    if emissions.is_empty() || states.len() != emissions.len() {
        return None;
    }
    if states[0].index() != initial_state(&emissions[0]) {
        return None;
    }
    let seq = StateSequence::from_states(states.to_vec());
    if !seq.follows_cycle() {
        return None;
    }
    let log_pmf = durations.log_pmf_table::<T>();
    let runs = seq.runs();
    let mut score = T::zero();
    for (k, &(state, start, end)) in runs.iter().enumerate() {
        let d = end - start;
        if d > durations.max_duration {
            return None;
        }
        let mut seg = T::zero();
        for row in &emissions[start..end] {
            seg += row[state.index()];
        }
        score += seg;
        if k + 1 < runs.len() {
            score += log_pmf[state.index()][d];
        }
    }
    Some(score)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sharp_priors_with_flat_emissions_decode_the_modes() {
        let d = DurationModel::new([5.0, 8.0, 4.0, 10.0], [0.3; 4], 12).unwrap();
        let emissions = vec![[0.0_f64; 4]; 30];
        let dec = viterbi_hsmm(&emissions, &d).unwrap();
        let runs = dec.sequence.runs();
        let lens: Vec<usize> = runs.iter().map(|r| r.2 - r.1).collect();
        assert_eq!(&lens[..4], &[5, 8, 4, 10]);
        assert_eq!(runs[0].0, HeartState::S1);
    }

    #[test]
    fn planted_path_is_recovered() {
        let d = DurationModel::new([3.0, 5.0, 3.0, 7.0], [0.75, 1.25, 0.75, 1.75], 14).unwrap();
        let mut planted = Vec::new();
        let lens = [3, 5, 3, 7, 4, 4, 2, 9, 3, 6];
        for (k, &l) in lens.iter().enumerate() {
            planted.extend(std::iter::repeat_n(HeartState::from_index(k), l));
        }
        let emissions: Vec<[f64; 4]> = planted
            .iter()
            .map(|s| {
                let mut row = [-30.0; 4];
                row[s.index()] = 0.0;
                row
            })
            .collect();
        let dec = viterbi_hsmm(&emissions, &d).unwrap();
        assert_eq!(dec.sequence.states, planted);
    }

    #[test]
    fn errors_on_empty_and_dead_columns() {
        let d = DurationModel::new([2.0; 4], [1.0; 4], 4).unwrap();
        assert!(viterbi_hsmm::<f64>(&[], &d).is_err());
        let e = vec![[0.0, 0.0, 0.0, 0.0], [f64::NEG_INFINITY; 4]];
        assert!(matches!(viterbi_hsmm(&e, &d), Err(Error::DeadEmission(1))));
    }

    #[test]
    fn returned_score_matches_path_score() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let d = DurationModel::new([2.0, 3.0, 2.0, 4.0], [1.0; 4], 6).unwrap();
        for _ in 0..50 {
            let t = rng.gen_range(1..40);
            let e: Vec<[f64; 4]> = (0..t).map(|_| [0; 4].map(|_: i32| rng.gen_range(-3.0..0.0))).collect();
            let dec = viterbi_hsmm(&e, &d).unwrap();
            assert_eq!(path_score(&e, &d, &dec.sequence.states), Some(dec.score));
        }
    }

    #[test]
    fn ties_prefer_shorter_final_segment() {
        // S1(1)+systole(2) and S1(2)+systole(1) score identically because the
        // S1 duration Gaussian is centred between 1 and 2; the shorter last
        // segment wins.
        let d = DurationModel::new([1.5, 1.5, 1.0, 1.0], [1.0; 4], 2).unwrap();
        let ninf = f64::NEG_INFINITY;
        let e = vec![[0.0, 0.0, ninf, ninf]; 3];
        let dec = viterbi_hsmm(&e, &d).unwrap();
        assert_eq!(dec.sequence.states, vec![HeartState::S1, HeartState::S1, HeartState::Systole]);
    }
}
