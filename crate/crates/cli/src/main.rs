use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pcgnet::baselines::{predict_baseline, summarize, BaselineModel};
use pcgnet::cycles::write_segment_index;
use pcgnet::dataset::{load_wav, resample, stratified_split, Label, CANONICAL_RATE};
use pcgnet::experiment::{
    build_segmenter, metrics_from_predictions, run_experiment, write_predictions, ExperimentConfig, PredictionRow,
    SegmenterSettings, SyntheticSettings,
};
use pcgnet::hsmm::{write_intervals, Segmenter};
use pcgnet::mfcc::{write_feature_dump, Mfcc, MfccConfig};
use pcgnet::pipeline::{
    load_directory, load_synthetic, prepare_all, prepare_recording, train_segmenter_from_annotations,
    write_synthetic_dataset, CycleOptions,
};
use pcgnet::rnn::{predict_recording, train, Architecture, Decision, ModelConfig, SequenceModel, TrainSchedule};
use pcgnet::seed::derive_seed;
use pcgnet::synth::synth_dataset;
use pcgnet::{Error, Result};

const DATA_ROOT_VAR: &str = "PCG_DATA_ROOT";
const BASELINE_TAG: &str = "pcgnet-baseline-model";

#[derive(Parser)]
#[command(name = "pcgnet", version, about = "Heart sound segmentation and abnormal heartbeat classification")]
#[command(arg_required_else_help = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct SegmenterArgs {
    /// Saved segmenter emission model (default: trained on generated audio).
    #[arg(long)]
    segmenter: Option<PathBuf>,
}

impl SegmenterArgs {
    fn load(&self) -> Result<Segmenter> {
        let settings = SegmenterSettings { model: self.segmenter.clone(), ..SegmenterSettings::default() };
        build_segmenter(&settings, 0)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Segment one recording into S1/systole/S2/diastole intervals.
    Segment {
        wav: PathBuf,
        /// Interval file to write (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        segmenter: SegmenterArgs,
    },
    /// Segment a dataset directory and write cycle segments and MFCCs.
    Featurize {
        dir: PathBuf,
        #[arg(long, default_value = "features")]
        out: PathBuf,
        #[arg(long, default_value_t = 5)]
        cycles: usize,
        /// Onsets between windows (default: the cycle count).
        #[arg(long)]
        stride: Option<usize>,
        #[command(flatten)]
        segmenter: SegmenterArgs,
    },
    /// Train one recurrent classifier.
    Train {
        #[arg(long)]
        arch: Architecture,
        #[arg(long, default_value_t = 5)]
        cycles: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Dataset directory (default: generated recordings).
        #[arg(long)]
        data: Option<PathBuf>,
        /// Generated recordings when no directory is given.
        #[arg(long, default_value_t = 60)]
        synthetic_n: usize,
        #[arg(long, default_value_t = 64)]
        hidden: usize,
        #[arg(long, default_value_t = 32)]
        dense: usize,
        #[arg(long, default_value_t = 100)]
        max_epochs: usize,
        #[arg(long, default_value = "model.txt")]
        out: PathBuf,
        #[command(flatten)]
        segmenter: SegmenterArgs,
    },
    /// Evaluate a saved model on every labelled recording of a directory.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 5)]
        cycles: usize,
        /// Prediction file to write.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        segmenter: SegmenterArgs,
    },
    /// Classify one recording with one or more saved models.
    Predict {
        /// Repeat to average several models.
        #[arg(long = "model", required = true)]
        models: Vec<PathBuf>,
        wav: PathBuf,
        #[arg(long, default_value_t = 5)]
        cycles: usize,
        #[command(flatten)]
        segmenter: SegmenterArgs,
    },
    /// Run the full pipeline from a TOML config.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a generated dataset with ground-truth state intervals.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 60)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 16.0)]
        min_secs: f64,
        #[arg(long, default_value_t = 24.0)]
        max_secs: f64,
    },
    /// Train a segmenter from `<id>.wav` + `<id>.states.csv` pairs.
    TrainSegmenter {
        #[arg(long)]
        annotations: PathBuf,
        #[arg(long, default_value = "segmenter.txt")]
        out: PathBuf,
    },
}

/// Relative paths missing from the working directory are looked up under
/// the data root.
fn data_path(path: &Path) -> PathBuf {
    if path.is_relative() && !path.exists() {
        if let Some(root) = std::env::var_os(DATA_ROOT_VAR) {
            return Path::new(&root).join(path);
        }
    }
    path.to_path_buf()
}

fn write_out(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::Io { path: parent.into(), source: e })?;
    }
    fs::write(path, contents).map_err(|e| Error::Io { path: path.into(), source: e })
}

enum Classifier {
    Rnn(Box<SequenceModel<f64>>),
    Baseline(BaselineModel),
}

fn load_classifiers(paths: &[PathBuf]) -> Result<Vec<Classifier>> {
    paths
        .iter()
        .map(|p| {
            let text = fs::read_to_string(p).map_err(|e| Error::Io { path: p.clone(), source: e })?;
            if text.starts_with(BASELINE_TAG) {
                Ok(Classifier::Baseline(BaselineModel::from_text(&text)?))
            } else {
                Ok(Classifier::Rnn(Box::new(SequenceModel::from_text(&text)?)))
            }
        })
        .collect()
}

/// Mean posterior over every model's recording-level posterior.
fn classify(classifiers: &[Classifier], features: &[pcgnet::Features]) -> Result<Option<Decision>> {
    if features.is_empty() {
        return Ok(None);
    }
    let mut posteriors = Vec::with_capacity(classifiers.len());
    for c in classifiers {
        let d = match c {
            Classifier::Rnn(m) => predict_recording(std::slice::from_ref(m), features)?,
            Classifier::Baseline(m) => {
                let v: Vec<Vec<f64>> = features.iter().map(|f| summarize(f).values).collect();
                predict_baseline(m, &v)?.1
            }
        };
        posteriors.extend(d.map(|d| d.posterior));
    }
    Ok(pcgnet::rnn::aggregate_posteriors(&posteriors))
}

fn mfcc() -> Result<Mfcc<f64>> {
    Mfcc::new(MfccConfig::default())
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Segment { wav, out, segmenter } => {
            let rec = resample(&load_wav(data_path(&wav))?, CANONICAL_RATE)?;
            let seg = segmenter.load()?.segment(&rec)?;
            let mut buf = Vec::new();
            write_intervals(&seg.intervals, CANONICAL_RATE, &mut buf).expect("write to memory");
            match out {
                Some(path) => write_out(&path, buf)?,
                None => {
                    std::io::stdout().write_all(&buf).map_err(|e| Error::Io { path: "stdout".into(), source: e })?
                }
            }
            eprintln!(
                "{}: heart rate {:.1} bpm, {} S1 onsets",
                rec.id,
                seg.heart_rate.beats_per_minute,
                seg.s1_onset_samples.len()
            );
        }
        Command::Featurize { dir, out, cycles, stride, segmenter } => {
            let data = load_directory(&data_path(&dir))?;
            let opts = CycleOptions { n_cycles: cycles, stride: stride.unwrap_or(cycles) };
            let prepared = prepare_all(&data.recordings, &segmenter.load()?, &mfcc()?, opts)?;
            let segments: Vec<_> = prepared.iter().flat_map(|p| p.segments.iter().cloned()).collect();
            let features: Vec<_> = prepared.iter().flat_map(|p| p.features.iter().cloned()).collect();
            let mut buf = Vec::new();
            write_segment_index(&segments, &mut buf).expect("write to memory");
            write_out(&out.join("segments.csv"), buf)?;
            let path = out.join("features.bin");
            let file = fs::File::create(&path).map_err(|e| Error::Io { path: path.clone(), source: e })?;
            write_feature_dump(&features, BufWriter::new(file)).map_err(|e| Error::Io { path, source: e })?;
            let excluded = prepared.iter().filter(|p| p.excluded.is_some()).count();
            println!("{} recordings, {} segments, {} excluded", prepared.len(), segments.len(), excluded);
        }
        Command::Train { arch, cycles, seed, data, synthetic_n, hidden, dense, max_epochs, out, segmenter } => {
            let loaded = match data {
                Some(dir) => load_directory(&data_path(&dir))?,
                None => {
                    let s = SyntheticSettings { n_recordings: synthetic_n, ..SyntheticSettings::default() };
                    load_synthetic(s.n_recordings, derive_seed(seed, "synthetic"), &s.synth_config())
                }
            };
            let items: Vec<(&str, Label)> = loaded
                .recordings
                .iter()
                .filter(|r| r.label != Label::Unlabeled)
                .map(|r| (r.id.as_str(), r.label))
                .collect();
            let split = stratified_split(&items, [0.75, 0.15, 0.10], derive_seed(seed, "split"))?;
            let opts = CycleOptions { n_cycles: cycles, stride: cycles };
            let prepared = prepare_all(&loaded.recordings, &segmenter.load()?, &mfcc()?, opts)?;
            let pick = |ids: &[String]| -> Vec<pcgnet::Features> {
                prepared.iter().filter(|p| ids.contains(&p.id)).flat_map(|p| p.features.iter().cloned()).collect()
            };
            let (train_set, val_set) = (pick(&split.train), pick(&split.validation));
            if train_set.is_empty() {
                return Err(Error::Empty("no training segments".into()));
            }
            let cfg = ModelConfig::new(arch, train_set[0].n_coefficients, hidden, dense);
            let schedule = TrainSchedule { max_epochs, seed, ..TrainSchedule::default() };
            let (model, history) = train(SequenceModel::new(cfg, seed)?, &train_set, &val_set, &schedule)?;
            write_out(&out, model.to_text())?;
            print!("{}", history.to_log());
            println!(
                "best validation accuracy {:.4} at epoch {}; model written to {}",
                history.best_val_accuracy,
                history.best_epoch,
                out.display()
            );
        }
        Command::Evaluate { model, data, cycles, out, segmenter } => {
            let classifiers = load_classifiers(&[model])?;
            let loaded = load_directory(&data_path(&data))?;
            let labelled: Vec<_> = loaded.recordings.into_iter().filter(|r| r.label != Label::Unlabeled).collect();
            let opts = CycleOptions { n_cycles: cycles, stride: cycles };
            let prepared = prepare_all(&labelled, &segmenter.load()?, &mfcc()?, opts)?;
            let rows = prepared
                .iter()
                .map(|p| {
                    let decision = classify(&classifiers, &p.features)?;
                    Ok(PredictionRow { id: p.id.clone(), truth: p.label, decision, n_segments: p.features.len() })
                })
                .collect::<Result<Vec<_>>>()?;
            if let Some(path) = out {
                write_out(&path, write_predictions(&rows))?;
            }
            let unclassifiable = rows.iter().filter(|r| r.decision.is_none()).count();
            match metrics_from_predictions(&rows)? {
                Some(m) => {
                    let opt = |v: Option<f64>| v.map_or("undefined".to_string(), |v| format!("{v:.4}"));
                    println!(
                        "Se {} Sp {} Acc {:.4} MAcc {} (TP {} FP {} TN {} FN {}), {} unclassifiable",
                        opt(m.sensitivity),
                        opt(m.specificity),
                        m.accuracy,
                        opt(m.macc),
                        m.tp,
                        m.fp,
                        m.tn,
                        m.fn_,
                        unclassifiable
                    );
                }
                None => println!("no recording could be classified ({unclassifiable} unclassifiable)"),
            }
        }
        Command::Predict { models, wav, cycles, segmenter } => {
            let classifiers = load_classifiers(&models)?;
            let rec = load_wav(data_path(&wav))?;
            let opts = CycleOptions { n_cycles: cycles, stride: cycles };
            let p = prepare_recording(&rec, &segmenter.load()?, &mfcc()?, opts)?;
            match classify(&classifiers, &p.features)? {
                Some(d) => println!(
                    "{} {} p_normal={:.4} p_abnormal={:.4} segments={}",
                    rec.id,
                    d.label,
                    d.posterior[0],
                    d.posterior[1],
                    p.features.len()
                ),
                None => println!("{} unclassifiable segments=0", rec.id),
            }
        }
        Command::Experiment { config, out } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(dir) = &cfg.data_dir {
                cfg.data_dir = Some(data_path(dir));
            }
            if let Some(out) = out {
                cfg.output_dir = out;
            }
            let report = run_experiment(&cfg)?;
            print!("{}", report.to_text());
            println!("\nartifacts in {}", cfg.output_dir.display());
        }
        Command::Synth { out, n, seed, min_secs, max_secs } => {
            let s = SyntheticSettings {
                n_recordings: n,
                duration_secs: [min_secs, max_secs],
                ..SyntheticSettings::default()
            };
            if n == 0 || !(min_secs > 0.0 && min_secs <= max_secs) {
                return Err(Error::InvalidArgument("need n > 0 and 0 < min-secs <= max-secs".into()));
            }
            write_synthetic_dataset(&out, &synth_dataset(n, seed, &s.synth_config()))?;
            println!("{n} recordings written to {}", out.display());
        }
        Command::TrainSegmenter { annotations, out } => {
            let seg = train_segmenter_from_annotations(&data_path(&annotations))?;
            write_out(&out, seg.emission.to_text())?;
            println!("segmenter written to {}", out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_data_error() { 2 } else { 1 })
        }
    }
}
