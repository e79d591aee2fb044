mod common;

use common::oracles;
use pcgnet::cycles::{extract_cycles, read_segment_index, write_segment_index};
use pcgnet::dataset::{Label, SignalRecording};
use pcgnet::mfcc::{compute_mfcc, dct2_orthonormal, featurize_segment, Mfcc, MfccConfig};
use pcgnet::synth::{synth_recording, SynthConfig};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn noise(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

#[test]
fn fft_pipeline_matches_direct_dft_oracle() {
    let cfg = MfccConfig::default();
    for seed in 0..4 {
        let x = noise(400, seed);
        let got = compute_mfcc(&x, &cfg).unwrap();
        let want = oracles::mfcc(&x, &cfg);
        assert_eq!(got.len(), want.len() * 13);
        for (a, b) in got.iter().zip(want.iter().flatten()) {
            assert!((a - b).abs() < 1e-9 * b.abs().max(1.0), "{a} vs {b}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn scaling_the_signal_shifts_only_c0(seed in any::<u64>(), a in 0.05f64..20.0) {
        let cfg = MfccConfig::default();
        let x = noise(300, seed);
        let y: Vec<f64> = x.iter().map(|v| a * v).collect();
        let (fx, fy) = (compute_mfcc(&x, &cfg).unwrap(), compute_mfcc(&y, &cfg).unwrap());
        let shift = 2.0 * a.ln() * (cfg.n_mel_filters as f64).sqrt();
        for (i, (p, q)) in fx.iter().zip(&fy).enumerate() {
            let expected = if i % 13 == 0 { p + shift } else { *p };
            prop_assert!((q - expected).abs() < 1e-8, "coefficient {} {} vs {}", i % 13, q, expected);
        }
    }

    #[test]
    fn dct_preserves_norms(v in prop::collection::vec(-100.0f64..100.0, 1..64)) {
        let c = dct2_orthonormal(&v);
        let (n1, n2): (f64, f64) = (v.iter().map(|x| x * x).sum(), c.iter().map(|x| x * x).sum());
        prop_assert!((n1 - n2).abs() <= 1e-10 * n1.max(1.0));
    }

    #[test]
    fn frame_count_follows_window_and_hop(n in 25usize..5000) {
        let cfg = MfccConfig::default();
        let f = compute_mfcc(&vec![0.1; n], &cfg).unwrap();
        prop_assert_eq!(f.len() / 13, (n - 25) / 10 + 1);
    }

    #[test]
    fn cycle_windows_count_and_tile(n_onsets in 0usize..40, n_idx in 0usize..3, stride in 1usize..9) {
        let n_cycles = [2, 5, 8][n_idx];
        let onsets: Vec<usize> = (0..n_onsets).map(|i| 10 + i * 50).collect();
        let rec = SignalRecording { id: "r".into(), samples: vec![0.0; 10 + n_onsets * 50], sample_rate: 1000, label: Label::Abnormal };
        let segs = extract_cycles(&rec, &onsets, n_cycles, stride).unwrap();
        let expected = if n_onsets > n_cycles { (n_onsets - 1 - n_cycles) / stride + 1 } else { 0 };
        prop_assert_eq!(segs.len(), expected);
        for (i, s) in segs.iter().enumerate() {
            prop_assert_eq!(s.start, onsets[i * stride]);
            prop_assert_eq!(s.end, onsets[i * stride + n_cycles]);
            prop_assert_eq!(s.label, Label::Abnormal);
        }
        if stride >= n_cycles {
            for w in segs.windows(2) {
                prop_assert!(w[0].end <= w[1].start);
            }
        }
    }
}

#[test]
fn eleven_onsets_give_two_disjoint_or_six_sliding_windows() {
    let onsets: Vec<usize> = (0..11).map(|i| 100 + 800 * i).collect();
    let rec = SignalRecording { id: "r".into(), samples: vec![0.0; 9000], sample_rate: 1000, label: Label::Normal };
    assert_eq!(extract_cycles(&rec, &onsets, 5, 5).unwrap().len(), 2);
    assert_eq!(extract_cycles(&rec, &onsets, 5, 1).unwrap().len(), 6);
}

#[test]
fn five_cycle_segments_of_generated_audio_hold_five_beats() {
    let r = synth_recording(
        "s",
        Label::Abnormal,
        3,
        &SynthConfig { duration_secs: (20.0, 20.0), ..SynthConfig::default() },
    );
    let segs = extract_cycles(&r.recording, &r.s1_onsets, 5, 5).unwrap();
    assert!(!segs.is_empty());
    let mfcc = Mfcc::new(MfccConfig::default()).unwrap();
    for s in &segs {
        let inside = r.s1_onsets.iter().filter(|&&o| o >= s.start && o < s.end).count();
        assert_eq!(inside, 5);
        let expected_secs = 5.0 * 60.0 / r.bpm;
        assert!((s.duration_secs() - expected_secs).abs() < 0.25 * expected_secs);
        let f = featurize_segment(s, &mfcc).unwrap();
        assert_eq!(f.n_frames(), (s.samples.len() - 25) / 10 + 1);
    }
    let mut buf = Vec::new();
    write_segment_index(&segs, &mut buf).unwrap();
    let back = read_segment_index(std::str::from_utf8(&buf).unwrap()).unwrap();
    assert_eq!(back.len(), segs.len());
}
