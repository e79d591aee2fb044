//! End-to-end runs: load, split, segment, featurize, train every
//! architecture over several seeds, evaluate per recording, and report.
//!
//! A run directory holds everything needed to audit the report:
//!
//! ```text
//! config.toml  manifest.csv  split.json  segmenter.txt
//! segmentation/<id>.csv  segments.csv  features.bin
//! models/<method>[_seed<i>].txt  logs/<arch>_seed<i>.log
//! predictions/<method>.csv  report.json  report.txt
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::baselines::{predict_baseline, summarize, train_baseline, BaselineKind, SummaryVector};
use crate::cycles::{write_segment_index, CycleSegment, ALLOWED_CYCLE_COUNTS};
use crate::dataset::{stratified_split, DatasetSplit, Label, SplitRole};
use crate::error::{Error, Result};
use crate::hsmm::{write_intervals, LrEmissionModel, Segmenter};
use crate::metrics::{compute_metrics, Metrics, ReferenceRow, REFERENCE_BASELINES, REFERENCE_RELATED, REFERENCE_RNN};
use crate::mfcc::{write_feature_dump, FeatureMatrix, Mfcc, MfccConfig};
use crate::pipeline::{
    load_directory, load_synthetic, prepare_all, train_segmenter_from_annotations, CycleOptions, LoadedData,
    PreparedRecording,
};
use crate::rnn::{
    predict_recording, train, Architecture, Decision, ModelConfig, Readout, SequenceModel, TrainSchedule,
};
use crate::seed::{derive_indexed, derive_seed};
use crate::synth::SynthConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSettings {
    pub n_recordings: usize,
    pub duration_secs: [f64; 2],
    pub bpm: [f64; 2],
    pub noise_level: f64,
    pub murmur_level: f64,
}

impl Default for SyntheticSettings {
    fn default() -> Self {
        SyntheticSettings {
            n_recordings: 60,
            duration_secs: [16.0, 24.0],
            bpm: [60.0, 100.0],
            noise_level: 0.02,
            murmur_level: 0.3,
        }
    }
}

impl SyntheticSettings {
    pub fn synth_config(&self) -> SynthConfig {
        SynthConfig {
            duration_secs: (self.duration_secs[0], self.duration_secs[1]),
            bpm: (self.bpm[0], self.bpm[1]),
            noise_level: self.noise_level,
            murmur_level: self.murmur_level,
            ..SynthConfig::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleSettings {
    pub initial_lr: f64,
    pub patience: usize,
    pub min_lr: f64,
    pub max_epochs: usize,
    pub batch_size: usize,
}

impl Default for ScheduleSettings {
    fn default() -> Self {
        let d = TrainSchedule::default();
        ScheduleSettings {
            initial_lr: d.initial_lr,
            patience: d.patience,
            min_lr: d.min_lr,
            max_epochs: d.max_epochs,
            batch_size: d.batch_size,
        }
    }
}

impl ScheduleSettings {
    pub fn schedule(&self, seed: u64) -> TrainSchedule {
        TrainSchedule {
            initial_lr: self.initial_lr,
            patience: self.patience,
            min_lr: self.min_lr,
            max_epochs: self.max_epochs,
            batch_size: self.batch_size,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SegmenterSettings {
    /// A saved emission model; takes precedence over the other fields.
    pub model: Option<PathBuf>,
    /// Directory of `<id>.wav` + `<id>.states.csv` training pairs.
    pub annotations: Option<PathBuf>,
    /// Generated recordings used when neither of the above is set.
    pub synthetic_recordings: usize,
}

impl Default for SegmenterSettings {
    fn default() -> Self {
        SegmenterSettings { model: None, annotations: None, synthetic_recordings: 40 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub master_seed: u64,
    /// PhysioNet-style directory; the synthetic generator is used when absent.
    pub data_dir: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub n_cycles: usize,
    /// Onsets between consecutive windows; defaults to `n_cycles`.
    pub stride: Option<usize>,
    pub architectures: Vec<Architecture>,
    pub hidden: usize,
    pub dense: usize,
    pub readout: Readout,
    pub seeds: usize,
    pub schedule: ScheduleSettings,
    pub baselines: bool,
    /// Train, validation and test fractions.
    pub split: [f64; 3],
    pub synthetic: SyntheticSettings,
    pub segmenter: SegmenterSettings,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            master_seed: 0,
            data_dir: None,
            output_dir: PathBuf::from("run"),
            n_cycles: 5,
            stride: None,
            architectures: Architecture::ALL.to_vec(),
            hidden: 64,
            dense: 32,
            readout: Readout::Last,
            seeds: 3,
            schedule: ScheduleSettings::default(),
            baselines: true,
            split: [0.75, 0.15, 0.10],
            synthetic: SyntheticSettings::default(),
            segmenter: SegmenterSettings::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::parse("config", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Parse { message, .. } => Error::parse(path.display().to_string(), message),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn stride(&self) -> usize {
        self.stride.unwrap_or(self.n_cycles)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if !ALLOWED_CYCLE_COUNTS.contains(&self.n_cycles) {
            return bad("n_cycles must be 2, 5 or 8");
        }
        if self.stride() == 0 {
            return bad("stride must be positive");
        }
        if self.architectures.is_empty() && !self.baselines {
            return bad("nothing to train: no architectures and baselines disabled");
        }
        if self.hidden == 0 || self.dense == 0 {
            return bad("hidden and dense must be positive");
        }
        if self.seeds == 0 {
            return bad("seeds must be positive");
        }
        if self.data_dir.is_none() && self.synthetic.n_recordings < 4 {
            return bad("synthetic.n_recordings must be at least 4");
        }
        self.schedule.schedule(0).validate()
    }
}

/// Summary of one training run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainingSummary {
    pub seed: u64,
    pub epochs_run: usize,
    pub best_epoch: usize,
    pub initial_val_accuracy: f64,
    pub best_val_accuracy: f64,
    pub log_file: String,
}

/// Test-split result of one architecture (all seeds) or one baseline.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodResult {
    pub method: String,
    pub family: String,
    /// `None` when no test recording could be classified.
    pub metrics: Option<Metrics>,
    pub n_classified: usize,
    pub unclassifiable: Vec<String>,
    pub prediction_file: String,
    pub hyperparameters: String,
    pub training: Vec<TrainingSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetSummary {
    pub source_database: String,
    pub n_recordings: usize,
    pub n_abnormal: usize,
    pub n_normal: usize,
    pub split_seed: u64,
    pub split_sizes: [usize; 3],
    pub segment_counts: [usize; 3],
    /// Recordings contributing no segments, with the reason.
    pub excluded: BTreeMap<String, String>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct References {
    pub rnn: Vec<ReferenceRow>,
    pub baselines: Vec<ReferenceRow>,
    pub related: Vec<ReferenceRow>,
}

impl Default for References {
    fn default() -> Self {
        References {
            rnn: REFERENCE_RNN.to_vec(),
            baselines: REFERENCE_BASELINES.to_vec(),
            related: REFERENCE_RELATED.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub config: ExperimentConfig,
    pub dataset: DatasetSummary,
    pub results: Vec<MethodResult>,
    pub references: References,
}

impl RunReport {
    pub fn result(&self, method: &str) -> Option<&MethodResult> {
        self.results.iter().find(|r| r.method == method)
    }

    /// Best test accuracy among the baseline methods.
    pub fn best_baseline_accuracy(&self) -> Option<f64> {
        self.results
            .iter()
            .filter(|r| r.family == "baseline")
            .filter_map(|r| r.metrics.map(|m| m.accuracy))
            .fold(None, |acc, a| Some(acc.map_or(a, |b: f64| b.max(a))))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let d = &self.dataset;
        let mut s = String::new();
        let _ = writeln!(
            s,
            "dataset {}: {} recordings ({} abnormal, {} normal), split {}/{}/{} recordings, {}/{}/{} segments, {} excluded",
            d.source_database,
            d.n_recordings,
            d.n_abnormal,
            d.n_normal,
            d.split_sizes[0],
            d.split_sizes[1],
            d.split_sizes[2],
            d.segment_counts[0],
            d.segment_counts[1],
            d.segment_counts[2],
            d.excluded.len()
        );
        let _ = writeln!(
            s,
            "cycles {} stride {} hidden {} dense {} seeds {} master seed {}\n",
            self.config.n_cycles,
            self.config.stride(),
            self.config.hidden,
            self.config.dense,
            self.config.seeds,
            self.config.master_seed
        );
        let _ = writeln!(
            s,
            "{:<12} {:>7} {:>7} {:>7} {:>7} {:>5} {:>5} {:>5} {:>5} {:>6}",
            "method", "Se", "Sp", "Acc", "MAcc", "TP", "FP", "TN", "FN", "uncls"
        );
        let opt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.4}"));
        for r in &self.results {
            match &r.metrics {
                Some(m) => {
                    let _ = writeln!(
                        s,
                        "{:<12} {:>7} {:>7} {:>7.4} {:>7} {:>5} {:>5} {:>5} {:>5} {:>6}",
                        r.method,
                        opt(m.sensitivity),
                        opt(m.specificity),
                        m.accuracy,
                        opt(m.macc),
                        m.tp,
                        m.fp,
                        m.tn,
                        m.fn_,
                        r.unclassifiable.len()
                    );
                }
                None => {
                    let _ = writeln!(
                        s,
                        "{:<12} {:>7} {:>7} {:>7} {:>7} {:>5} {:>5} {:>5} {:>5} {:>6}",
                        r.method,
                        "-",
                        "-",
                        "-",
                        "-",
                        "-",
                        "-",
                        "-",
                        "-",
                        r.unclassifiable.len()
                    );
                }
            }
        }
        for r in self.results.iter().filter(|r| !r.hyperparameters.is_empty()) {
            let _ = writeln!(s, "  {}: {}", r.method, r.hyperparameters);
        }
        let _ = writeln!(s, "\nreference values (display only)");
        let _ = writeln!(s, "{:<24} {:<20} {:>7} {:>7} {:>7}", "source", "method", "Se", "Sp", "Acc");
        for row in self.references.rnn.iter().chain(&self.references.baselines).chain(&self.references.related) {
            let _ = writeln!(
                s,
                "{:<24} {:<20} {:>7.4} {:>7.4} {:>7.4}",
                row.source, row.method, row.sensitivity, row.specificity, row.accuracy
            );
        }
        s
    }
}

/// One test-recording outcome as written to a prediction file.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRow {
    pub id: String,
    pub truth: Label,
    /// `None` for unclassifiable recordings.
    pub decision: Option<Decision>,
    pub n_segments: usize,
}

pub const PREDICTION_HEADER: &str = "id,truth,predicted,p_normal,p_abnormal,n_segments";

pub fn write_predictions(rows: &[PredictionRow]) -> String {
    let mut s = format!("{PREDICTION_HEADER}\n");
    for r in rows {
        match &r.decision {
            Some(d) => {
                let _ = writeln!(
                    s,
                    "{},{},{},{:.16e},{:.16e},{}",
                    r.id, r.truth, d.label, d.posterior[0], d.posterior[1], r.n_segments
                );
            }
            None => {
                let _ = writeln!(s, "{},{},unclassifiable,,,{}", r.id, r.truth, r.n_segments);
            }
        }
    }
    s
}

pub fn read_predictions(text: &str) -> Result<Vec<PredictionRow>> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(PREDICTION_HEADER) {
        return Err(Error::parse("predictions", "missing header"));
    }
    let mut out = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let loc = format!("predictions line {}", i + 2);
        let c: Vec<&str> = line.split(',').collect();
        if c.len() != 6 {
            return Err(Error::parse(&loc, "expected 6 columns"));
        }
        let truth: Label = c[1].parse()?;
        let n_segments = c[5].parse().map_err(|_| Error::parse(&loc, "bad segment count"))?;
        let decision = if c[2] == "unclassifiable" {
            None
        } else {
            let p = |s: &str| s.parse::<f64>().map_err(|_| Error::parse(&loc, "bad posterior"));
            Some(Decision { label: c[2].parse()?, posterior: [p(c[3])?, p(c[4])?] })
        };
        out.push(PredictionRow { id: c[0].to_string(), truth, decision, n_segments });
    }
    Ok(out)
}

/// Metrics over the classified rows; `None` when there are none.
pub fn metrics_from_predictions(rows: &[PredictionRow]) -> Result<Option<Metrics>> {
    let pairs: Vec<(Label, Label)> = rows.iter().filter_map(|r| r.decision.map(|d| (d.label, r.truth))).collect();
    if pairs.is_empty() {
        return Ok(None);
    }
    compute_metrics(&pairs).map(Some)
}

/// Re-reads a prediction file and recomputes its metrics.
pub fn recompute_metrics(path: &Path) -> Result<Option<Metrics>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    metrics_from_predictions(&read_predictions(&text)?)
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn load_data(cfg: &ExperimentConfig) -> Result<LoadedData> {
    match &cfg.data_dir {
        Some(dir) => load_directory(dir),
        None => {
            let s = &cfg.synthetic;
            Ok(load_synthetic(s.n_recordings, derive_seed(cfg.master_seed, "synthetic"), &s.synth_config()))
        }
    }
}

pub fn build_segmenter(settings: &SegmenterSettings, master_seed: u64) -> Result<Segmenter> {
    if let Some(path) = &settings.model {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        return Ok(Segmenter::new(LrEmissionModel::from_text(&text)?));
    }
    if let Some(dir) = &settings.annotations {
        return train_segmenter_from_annotations(dir);
    }
    Segmenter::train_default(derive_seed(master_seed, "segmenter"), settings.synthetic_recordings)
}

fn role_index(role: SplitRole) -> usize {
    match role {
        SplitRole::Train => 0,
        SplitRole::Validation => 1,
        SplitRole::Test => 2,
    }
}

/// Per-role features in recording-id order.
struct SplitFeatures<'a> {
    train: Vec<FeatureMatrix<f64>>,
    val: Vec<FeatureMatrix<f64>>,
    test: Vec<&'a PreparedRecording>,
}

fn split_features<'a>(prepared: &'a [PreparedRecording], split: &DatasetSplit) -> SplitFeatures<'a> {
    let mut out = SplitFeatures { train: Vec::new(), val: Vec::new(), test: Vec::new() };
    for p in prepared {
        match split.role_of(&p.id) {
            Some(SplitRole::Train) => out.train.extend(p.features.iter().cloned()),
            Some(SplitRole::Validation) => out.val.extend(p.features.iter().cloned()),
            Some(SplitRole::Test) => out.test.push(p),
            None => {}
        }
    }
    out
}

fn method_result(
    method: String,
    family: &str,
    rows: &[PredictionRow],
    prediction_file: String,
    hyperparameters: String,
    training: Vec<TrainingSummary>,
) -> Result<MethodResult> {
    Ok(MethodResult {
        method,
        family: family.to_string(),
        metrics: metrics_from_predictions(rows)?,
        n_classified: rows.iter().filter(|r| r.decision.is_some()).count(),
        unclassifiable: rows.iter().filter(|r| r.decision.is_none()).map(|r| r.id.clone()).collect(),
        prediction_file,
        hyperparameters,
        training,
    })
}

/// Runs the whole pipeline and writes every artifact under
/// `cfg.output_dir`. Identical configs give byte-identical outputs.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunReport> {
    cfg.validate()?;
    let out = &cfg.output_dir;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    write_file(&out.join("config.toml"), cfg.to_toml())?;

    let data = load_data(cfg)?;
    for w in &data.warnings {
        log::warn!("{w}");
    }
    let mut manifest = String::from("id,label,sample_rate,n_samples\n");
    for r in &data.recordings {
        let _ = writeln!(manifest, "{},{},{},{}", r.id, r.label, r.sample_rate, r.samples.len());
    }
    write_file(&out.join("manifest.csv"), manifest)?;

    let labelled: Vec<(&str, Label)> =
        data.recordings.iter().filter(|r| r.label != Label::Unlabeled).map(|r| (r.id.as_str(), r.label)).collect();
    let split = stratified_split(&labelled, cfg.split, derive_seed(cfg.master_seed, "split"))?;
    write_file(&out.join("split.json"), serde_json::to_string_pretty(&split).expect("split serializes"))?;

    let segmenter = build_segmenter(&cfg.segmenter, cfg.master_seed)?;
    write_file(&out.join("segmenter.txt"), segmenter.emission.to_text())?;

    let in_split: Vec<_> = data.recordings.iter().filter(|r| split.role_of(&r.id).is_some()).cloned().collect();
    let mfcc = Mfcc::<f64>::new(MfccConfig::default())?;
    let cycles = CycleOptions { n_cycles: cfg.n_cycles, stride: cfg.stride() };
    let prepared = prepare_all(&in_split, &segmenter, &mfcc, cycles)?;

    let mut all_segments: Vec<CycleSegment> = Vec::new();
    let mut all_features: Vec<FeatureMatrix<f64>> = Vec::new();
    let mut excluded = BTreeMap::new();
    let mut segment_counts = [0usize; 3];
    for p in &prepared {
        if let Some(seg) = &p.segmentation {
            let mut buf = Vec::new();
            write_intervals(&seg.intervals, crate::dataset::CANONICAL_RATE, &mut buf).expect("write to memory");
            write_file(&out.join("segmentation").join(format!("{}.csv", p.id)), buf)?;
        }
        if let Some(reason) = &p.excluded {
            excluded.insert(p.id.clone(), reason.clone());
        }
        if let Some(role) = split.role_of(&p.id) {
            segment_counts[role_index(role)] += p.segments.len();
        }
        all_segments.extend(p.segments.iter().cloned());
        all_features.extend(p.features.iter().cloned());
    }
    let mut buf = Vec::new();
    write_segment_index(&all_segments, &mut buf).expect("write to memory");
    write_file(&out.join("segments.csv"), buf)?;
    let path = out.join("features.bin");
    let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
    write_feature_dump(&all_features, BufWriter::new(file)).map_err(|e| Error::io(&path, e))?;

    let sets = split_features(&prepared, &split);
    if sets.train.is_empty() {
        return Err(Error::Empty("no training segments after segmentation".into()));
    }
    if sets.val.is_empty() {
        return Err(Error::Empty("no validation segments after segmentation".into()));
    }
    let input_dim = sets.train[0].n_coefficients;
    let mut results = Vec::new();

    for &arch in &cfg.architectures {
        let arch_seed = derive_seed(cfg.master_seed, &format!("rnn/{}", arch.name()));
        let mut models = Vec::with_capacity(cfg.seeds);
        let mut training = Vec::with_capacity(cfg.seeds);
        for i in 0..cfg.seeds {
            let seed = derive_indexed(arch_seed, i as u64);
            let model_cfg =
                ModelConfig { readout: cfg.readout, ..ModelConfig::new(arch, input_dim, cfg.hidden, cfg.dense) };
            let init = SequenceModel::<f64>::new(model_cfg, seed)?;
            log::info!("training {arch} seed {i}");
            let (model, history) = train(init, &sets.train, &sets.val, &cfg.schedule.schedule(seed))
                .map_err(|e| e.at_stage(&format!("train-{}", arch.name()), &format!("seed{i}")))?;
            let stem = format!("{}_seed{i}", arch.name());
            write_file(&out.join("models").join(format!("{stem}.txt")), model.to_text())?;
            let log_file = format!("logs/{stem}.log");
            write_file(&out.join(&log_file), history.to_log())?;
            training.push(TrainingSummary {
                seed,
                epochs_run: history.epochs.len(),
                best_epoch: history.best_epoch,
                initial_val_accuracy: history.initial_val_accuracy,
                best_val_accuracy: history.best_val_accuracy,
                log_file,
            });
            models.push(model);
        }
        let rows = sets
            .test
            .iter()
            .map(|p| {
                let decision = predict_recording(&models, &p.features).map_err(|e| e.at_stage("predict", &p.id))?;
                Ok(PredictionRow { id: p.id.clone(), truth: p.label, decision, n_segments: p.features.len() })
            })
            .collect::<Result<Vec<_>>>()?;
        let file = format!("predictions/{}.csv", arch.name());
        write_file(&out.join(&file), write_predictions(&rows))?;
        results.push(method_result(arch.name().to_string(), "rnn", &rows, file, String::new(), training)?);
    }

    if cfg.baselines {
        let train_vecs: Vec<SummaryVector> = sets.train.iter().map(summarize).collect();
        let val_vecs: Vec<SummaryVector> = sets.val.iter().map(summarize).collect();
        for kind in BaselineKind::ALL {
            let model = train_baseline(
                kind,
                &train_vecs,
                &val_vecs,
                derive_seed(cfg.master_seed, &format!("baseline/{}", kind.name())),
            )
            .map_err(|e| e.at_stage(&format!("train-{}", kind.name()), "all"))?;
            write_file(&out.join("models").join(format!("{}.txt", kind.name())), model.to_text())?;
            let rows = sets
                .test
                .iter()
                .map(|p| {
                    let vectors: Vec<Vec<f64>> = p.features.iter().map(|f| summarize(f).values).collect();
                    let (_, decision) = predict_baseline(&model, &vectors).map_err(|e| e.at_stage("predict", &p.id))?;
                    Ok(PredictionRow { id: p.id.clone(), truth: p.label, decision, n_segments: p.features.len() })
                })
                .collect::<Result<Vec<_>>>()?;
            let file = format!("predictions/{}.csv", kind.name());
            write_file(&out.join(&file), write_predictions(&rows))?;
            let hp = format!("{} (validation accuracy {:.4})", model.hyperparameters, model.val_accuracy);
            results.push(method_result(kind.name().to_string(), "baseline", &rows, file, hp, Vec::new())?);
        }
    }

    let n_abnormal = data.recordings.iter().filter(|r| r.label == Label::Abnormal).count();
    let n_normal = data.recordings.iter().filter(|r| r.label == Label::Normal).count();
    let report = RunReport {
        config: cfg.clone(),
        dataset: DatasetSummary {
            source_database: data.source_database,
            n_recordings: data.recordings.len(),
            n_abnormal,
            n_normal,
            split_seed: split.seed,
            split_sizes: [split.train.len(), split.validation.len(), split.test.len()],
            segment_counts,
            excluded,
            warnings: data.warnings,
        },
        results,
        references: References::default(),
    };
    write_file(&out.join("report.json"), report.to_json())?;
    write_file(&out.join("report.txt"), report.to_text())?;
    Ok(report)
}
