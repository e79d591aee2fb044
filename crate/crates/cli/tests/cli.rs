use std::path::Path;
use std::process::{Command, Output};

fn pcgnet(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pcgnet"))
        .args(args)
        .current_dir(cwd)
        .env_remove("PCG_DATA_ROOT")
        .output()
        .expect("binary runs")
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

#[test]
fn no_arguments_prints_usage_and_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let out = pcgnet(&[], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(text(&out.stderr).contains("Usage"));
}

#[test]
fn unknown_flags_and_values_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(pcgnet(&["segment", "--bogus"], dir.path()).status.code(), Some(1));
    assert_eq!(pcgnet(&["train", "--arch", "transformer"], dir.path()).status.code(), Some(1));
    assert_eq!(pcgnet(&["--help"], dir.path()).status.code(), Some(0));
}

#[test]
fn missing_input_file_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = pcgnet(&["segment", "absent.wav"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(text(&out.stderr).contains("absent.wav"));
}

#[test]
fn synthesized_recording_segments_into_heart_sound_intervals() {
    let dir = tempfile::tempdir().unwrap();
    let out = pcgnet(&["synth", "--out", "data", "--n", "2", "--seed", "4"], dir.path());
    assert!(out.status.success(), "{}", text(&out.stderr));
    let wav = std::fs::read_dir(dir.path().join("data"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .find(|p| p.extension().is_some_and(|e| e == "wav"))
        .unwrap();
    let out = pcgnet(&["segment", wav.to_str().unwrap(), "--out", "seg.csv"], dir.path());
    assert!(out.status.success(), "{}", text(&out.stderr));
    let rows = std::fs::read_to_string(dir.path().join("seg.csv")).unwrap();
    for state in ["S1", "systole", "S2", "diastole"] {
        assert!(rows.lines().any(|l| l.ends_with(&format!(",{state}"))), "{state} missing from\n{rows}");
    }
}

#[test]
fn trained_model_predicts_a_label_with_posteriors() {
    let dir = tempfile::tempdir().unwrap();
    let out = pcgnet(&["synth", "--out", "data", "--n", "12", "--seed", "2"], dir.path());
    assert!(out.status.success(), "{}", text(&out.stderr));
    let out = pcgnet(
        &[
            "train",
            "--arch",
            "gru",
            "--data",
            "data",
            "--hidden",
            "4",
            "--dense",
            "4",
            "--max-epochs",
            "2",
            "--out",
            "gru.txt",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", text(&out.stderr));
    assert!(dir.path().join("gru.txt").exists());
    let out = pcgnet(&["predict", "--model", "gru.txt", "data/syn0000.wav"], dir.path());
    assert!(out.status.success(), "{}", text(&out.stderr));
    let line = text(&out.stdout);
    assert!(line.starts_with("syn0000 "), "{line}");
    assert!(line.contains(" normal ") || line.contains(" abnormal ") || line.contains("unclassifiable"), "{line}");
    if !line.contains("unclassifiable") {
        assert!(line.contains("p_normal=") && line.contains("p_abnormal="), "{line}");
    }
}

#[test]
fn two_cycle_recording_yields_two_s1_and_two_s2_rows() {
    use pcgnet::dataset::{write_wav, Label, SignalRecording};
    use pcgnet::synth::{synth_recording, SynthConfig};
    let cfg = SynthConfig {
        duration_secs: (8.0, 8.0),
        bpm: (38.0, 38.0),
        beat_jitter: 0.0,
        murmur_level: 0.0,
        ..SynthConfig::default()
    };
    let dir = tempfile::tempdir().unwrap();
    for seed in 0..6 {
        let r = synth_recording("two", Label::Normal, seed, &cfg);
        let (a, b) = (r.s1_onsets[0], r.s1_onsets[2]);
        let rec = SignalRecording::new("two", r.recording.samples[a..b].to_vec(), 1000, Label::Normal).unwrap();
        write_wav(dir.path().join("two.wav"), &rec).unwrap();
        let out = pcgnet(&["segment", "two.wav"], dir.path());
        assert!(out.status.success(), "{}", text(&out.stderr));
        let rows = text(&out.stdout);
        let count = |s: &str| rows.lines().filter(|l| l.ends_with(&format!(",{s}"))).count();
        assert_eq!((count("S1"), count("S2")), (2, 2), "seed {seed}\n{rows}");
    }
}
