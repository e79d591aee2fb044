use pcgnet::hsmm::{
    emission_likelihood, log_emission_likelihood, path_score, viterbi_hsmm, DurationModel, HeartState, LrEmissionModel,
    Segmenter, N_STATES,
};
use pcgnet::synth::{synth_dataset, SynthConfig};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_problem(seed: u64, n: usize, max_d: usize) -> (Vec<[f64; N_STATES]>, DurationModel) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let emissions = (0..n).map(|_| std::array::from_fn(|_| rng.gen_range(-8.0..0.0))).collect();
    let means = std::array::from_fn(|_| rng.gen_range(1.0..=max_d as f64));
    let stds = std::array::from_fn(|_| rng.gen_range(0.3..3.0));
    (emissions, DurationModel::new(means, stds, max_d).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn decoded_paths_follow_the_cycle_within_duration_caps(seed in any::<u64>(), n in 1usize..80, max_d in 1usize..12) {
        let (em, dm) = random_problem(seed, n, max_d);
        let dec = viterbi_hsmm(&em, &dm).unwrap();
        prop_assert_eq!(dec.sequence.len(), n);
        prop_assert!(dec.sequence.follows_cycle());
        for (_, start, end) in dec.sequence.runs() {
            prop_assert!(end - start <= max_d);
        }
        prop_assert_eq!(path_score(&em, &dm, &dec.sequence.states), Some(dec.score));
    }

    #[test]
    fn decoded_score_dominates_random_legal_paths(seed in any::<u64>(), n in 1usize..60) {
        let max_d = 6;
        let (em, dm) = random_problem(seed, n, max_d);
        let dec = viterbi_hsmm(&em, &dm).unwrap();
        let mut s0 = 0;
        for j in 1..N_STATES {
            if em[0][j] > em[0][s0] {
                s0 = j;
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        for _ in 0..20 {
            let mut states = Vec::with_capacity(n);
            let mut s = s0;
            while states.len() < n {
                let d = rng.gen_range(1..=max_d).min(n - states.len());
                states.extend(std::iter::repeat_n(HeartState::from_index(s), d));
                s = (s + 1) % N_STATES;
            }
            let score = path_score(&em, &dm, &states).unwrap();
            prop_assert!(score <= dec.score);
        }
    }

    #[test]
    fn duration_pmf_is_normalized(m in 1.0f64..30.0, s in 0.2f64..10.0, max_d in 1usize..60) {
        let dm = DurationModel::new([m; 4], [s; 4], max_d).unwrap();
        for row in dm.log_pmf_table::<f64>() {
            let total: f64 = row[1..].iter().map(|v| v.exp()).sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn log_and_linear_emissions_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let cov = [[1.0, 0.2, 0.0, 0.0], [0.2, 1.0, 0.1, 0.0], [0.0, 0.1, 1.0, 0.3], [0.0, 0.0, 0.3, 1.0]];
    for _ in 0..50 {
        let weights = std::array::from_fn(|_| std::array::from_fn(|_| rng.gen_range(-3.0..3.0)));
        let model = LrEmissionModel::new(weights, [0.0; 4], [1.0; 4], [0.25; 4], [0.0; 4], cov, true).unwrap();
        let row: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-3.0..3.0));
        let lin = emission_likelihood(&model, &row);
        let log = log_emission_likelihood(&model, &row);
        for j in 0..N_STATES {
            assert!((lin[j].ln() - log[j]).abs() < 1e-12 * log[j].abs().max(1.0));
        }
        assert_eq!(LrEmissionModel::<f64>::from_text(&model.to_text()).unwrap().weights, model.weights);
    }
}

#[test]
fn segmentation_of_generated_audio_is_cyclic_and_survives_a_model_round_trip() {
    let segmenter = Segmenter::train_default(5, 20).unwrap();
    let reloaded = Segmenter::new(LrEmissionModel::from_text(&segmenter.emission.to_text()).unwrap());
    for r in synth_dataset(5, 99, &SynthConfig::default()) {
        let a = segmenter.segment(&r.recording).unwrap();
        assert!(a.states.follows_cycle());
        assert_eq!(a.intervals.last().unwrap().end, r.recording.samples.len());
        assert_eq!(a, reloaded.segment(&r.recording).unwrap());
        let bpm = a.heart_rate.beats_per_minute;
        assert!((bpm - r.bpm).abs() < 0.1 * r.bpm, "estimated {bpm}, planted {}", r.bpm);
    }
}
