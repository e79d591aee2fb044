use std::collections::BTreeSet;
use std::fs;

use pcgnet::experiment::{read_predictions, recompute_metrics, run_experiment, ExperimentConfig};
use pcgnet::mfcc::read_feature_dump;
use pcgnet::pipeline::write_synthetic_dataset;
use pcgnet::rnn::Architecture;
use pcgnet::synth::{synth_dataset, SynthConfig};
use pcgnet::Error;

fn small_config(out: &std::path::Path) -> ExperimentConfig {
    let mut cfg = ExperimentConfig { output_dir: out.to_path_buf(), ..ExperimentConfig::default() };
    cfg.synthetic.n_recordings = 24;
    cfg.architectures = vec![Architecture::Gru, Architecture::Blstm];
    cfg.hidden = 4;
    cfg.dense = 4;
    cfg.seeds = 2;
    cfg.schedule.max_epochs = 2;
    cfg
}

#[test]
fn synthetic_run_persists_traceable_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let report = run_experiment(&cfg).unwrap();
    let split: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("split.json")).unwrap()).unwrap();
    let test_ids: BTreeSet<String> =
        split["test"].as_array().unwrap().iter().map(|v| v.as_str().unwrap().to_string()).collect();
    assert!(!test_ids.is_empty());
    assert_eq!(report.results.len(), 2 + 5);
    for r in &report.results {
        let path = dir.path().join(&r.prediction_file);
        let rows = read_predictions(&fs::read_to_string(&path).unwrap()).unwrap();
        let ids: Vec<&String> = rows.iter().map(|r| &r.id).collect();
        assert_eq!(ids.len(), test_ids.len(), "{}", r.method);
        assert_eq!(ids.into_iter().cloned().collect::<BTreeSet<_>>(), test_ids);
        assert_eq!(recompute_metrics(&path).unwrap(), r.metrics, "{}", r.method);
        assert_eq!(r.n_classified + r.unclassifiable.len(), test_ids.len());
    }
    for arch in ["gru", "blstm"] {
        let r = report.result(arch).unwrap();
        assert_eq!(r.training.len(), 2);
        for t in &r.training {
            assert!(dir.path().join(&t.log_file).exists());
        }
        assert!(dir.path().join(format!("models/{arch}_seed1.txt")).exists());
    }
    let features = read_feature_dump(fs::File::open(dir.path().join("features.bin")).unwrap()).unwrap();
    assert_eq!(features.len(), report.dataset.segment_counts.iter().sum::<usize>());
    assert_eq!(fs::read_dir(dir.path().join("segmentation")).unwrap().count(), 24 - report.dataset.excluded.len());
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(json["references"]["rnn"][1]["method"], "BLSTM");
    assert_eq!(json["references"]["rnn"][1]["accuracy"], 0.9763);
    let reloaded = ExperimentConfig::load(&dir.path().join("config.toml")).unwrap();
    assert_eq!(reloaded, cfg);
    assert!(report.to_text().contains("Dominguez"));
}

#[test]
fn directory_datasets_run_with_an_annotation_trained_segmenter() {
    let data = tempfile::tempdir().unwrap();
    let cfg_synth = SynthConfig { duration_secs: (12.0, 16.0), ..SynthConfig::default() };
    write_synthetic_dataset(data.path(), &synth_dataset(16, 3, &cfg_synth)).unwrap();
    let out = tempfile::tempdir().unwrap();
    let mut cfg = small_config(out.path());
    cfg.data_dir = Some(data.path().to_path_buf());
    cfg.architectures = vec![Architecture::Lstm];
    cfg.seeds = 1;
    cfg.baselines = false;
    cfg.segmenter.annotations = Some(data.path().to_path_buf());
    let report = run_experiment(&cfg).unwrap();
    assert_eq!(report.dataset.n_recordings, 16);
    assert_eq!(report.dataset.source_database, "synthetic");
    assert_eq!(report.results.len(), 1);
}

#[test]
fn missing_data_directory_is_a_data_error() {
    let out = tempfile::tempdir().unwrap();
    let mut cfg = small_config(out.path());
    cfg.data_dir = Some(out.path().join("absent"));
    let err = run_experiment(&cfg).unwrap_err();
    assert!(err.is_data_error());
    assert!(matches!(err, Error::MissingReference(_)));
    cfg.data_dir = None;
    cfg.n_cycles = 4;
    assert!(!run_experiment(&cfg).unwrap_err().is_data_error());
}
