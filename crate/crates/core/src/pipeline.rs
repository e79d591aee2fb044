//! Per-recording pipeline steps shared by the experiment harness and the
//! command line: load, resample, segment, cut cycles, compute MFCCs.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::cycles::{extract_cycles, CycleSegment};
use crate::dataset::{
    load_manifest, load_wav, resample, write_wav, Label, SignalRecording, CANONICAL_RATE, REFERENCE_FILE,
};
use crate::envelope::DECIMATION;
use crate::error::{Error, Result};
use crate::hsmm::{read_intervals, write_intervals, Interval, Segmentation, Segmenter, StateSequence};
use crate::mfcc::{featurize_segment, FeatureMatrix, Mfcc};
use crate::synth::{synth_dataset, SynthConfig, SyntheticRecording};

/// Ground-truth state intervals written next to synthetic audio.
pub const STATES_SUFFIX: &str = ".states.csv";

#[derive(Debug, Clone)]
pub struct LoadedData {
    pub recordings: Vec<SignalRecording>,
    pub source_database: String,
    pub warnings: Vec<String>,
}

/// Every labelled recording of a PhysioNet-style directory, sorted by id.
pub fn load_directory(dir: &Path) -> Result<LoadedData> {
    let manifest = load_manifest(dir)?;
    if manifest.entries.is_empty() {
        return Err(Error::Empty(format!("no loadable recordings in {}", dir.display())));
    }
    let recordings = manifest
        .entries
        .par_iter()
        .map(|e| {
            let mut rec = load_wav(&e.path)?;
            rec.id = e.id.clone();
            rec.label = e.label;
            Ok(rec)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LoadedData { recordings, source_database: manifest.source_database, warnings: manifest.warnings })
}

pub fn load_synthetic(n: usize, seed: u64, cfg: &SynthConfig) -> LoadedData {
    LoadedData {
        recordings: synth_dataset(n, seed, cfg).into_iter().map(|s| s.recording).collect(),
        source_database: "synthetic".into(),
        warnings: Vec::new(),
    }
}

/// Audio intervals of a synthetic recording's true states.
pub fn truth_intervals(rec: &SyntheticRecording) -> Vec<Interval> {
    let mut out: Vec<Interval> = Vec::new();
    for (i, &s) in rec.states.iter().enumerate() {
        match out.last_mut() {
            Some(last) if last.state == s => last.end = i + 1,
            _ => out.push(Interval { start: i, end: i + 1, state: s }),
        }
    }
    out
}

/// Writes 16-bit WAVs, a `REFERENCE.csv` and per-recording true state
/// intervals into `dir`.
pub fn write_synthetic_dataset(dir: &Path, recordings: &[SyntheticRecording]) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut reference = String::new();
    for r in recordings {
        let rec = &r.recording;
        write_wav(dir.join(format!("{}.wav", rec.id)), rec)?;
        reference.push_str(&format!("{},{}\n", rec.id, rec.label.reference_code()));
        let mut buf = Vec::new();
        write_intervals(&truth_intervals(r), rec.sample_rate, &mut buf).expect("write to memory");
        let path = dir.join(format!("{}{STATES_SUFFIX}", rec.id));
        fs::write(&path, buf).map_err(|e| Error::io(&path, e))?;
    }
    let path = dir.join(REFERENCE_FILE);
    fs::write(&path, reference).map_err(|e| Error::io(&path, e))
}

/// One recording carried through segmentation and feature extraction.
#[derive(Debug, Clone)]
pub struct PreparedRecording {
    pub id: String,
    pub label: Label,
    pub segmentation: Option<Segmentation>,
    pub segments: Vec<CycleSegment>,
    pub features: Vec<FeatureMatrix<f64>>,
    /// Why the recording contributes no segments, if it was excluded.
    pub excluded: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CycleOptions {
    pub n_cycles: usize,
    pub stride: usize,
}

fn is_unsegmentable(e: &Error) -> bool {
    matches!(e, Error::Unsegmentable(_) | Error::SignalTooShort { .. })
}

pub fn prepare_recording(
    rec: &SignalRecording,
    segmenter: &Segmenter,
    mfcc: &Mfcc<f64>,
    cycles: CycleOptions,
) -> Result<PreparedRecording> {
    let audio = resample(rec, CANONICAL_RATE).map_err(|e| e.at_stage("resample", &rec.id))?;
    let mut out = PreparedRecording {
        id: rec.id.clone(),
        label: rec.label,
        segmentation: None,
        segments: Vec::new(),
        features: Vec::new(),
        excluded: None,
    };
    let seg = match segmenter.segment(&audio) {
        Ok(s) => s,
        Err(e) if is_unsegmentable(&e) => {
            log::warn!("{}: excluded, {e}", rec.id);
            out.excluded = Some(e.to_string());
            return Ok(out);
        }
        Err(e) => return Err(e.at_stage("segment", &rec.id)),
    };
    out.segments = extract_cycles(&audio, &seg.s1_onset_samples, cycles.n_cycles, cycles.stride)
        .map_err(|e| e.at_stage("extract-cycles", &rec.id))?;
    if out.segments.is_empty() {
        out.excluded = Some(format!("fewer than {} S1 onsets", cycles.n_cycles + 1));
    }
    out.features = out
        .segments
        .iter()
        .map(|s| featurize_segment(s, mfcc))
        .collect::<Result<_>>()
        .map_err(|e| e.at_stage("mfcc", &rec.id))?;
    out.segmentation = Some(seg);
    Ok(out)
}

/// [`prepare_recording`] over many recordings in parallel; output order
/// follows the input.
pub fn prepare_all(
    recordings: &[SignalRecording],
    segmenter: &Segmenter,
    mfcc: &Mfcc<f64>,
    cycles: CycleOptions,
) -> Result<Vec<PreparedRecording>> {
    recordings.par_iter().map(|r| prepare_recording(r, segmenter, mfcc, cycles)).collect()
}

/// Resolves `path` against the data root when it is relative.
pub fn resolve_data_path(path: &Path, data_root: Option<&Path>) -> PathBuf {
    match data_root {
        Some(root) if path.is_relative() => root.join(path),
        _ => path.to_path_buf(),
    }
}

/// Trains a segmenter from every `<id>.wav` in `dir` that has a matching
/// `<id>.states.csv` interval file.
pub fn train_segmenter_from_annotations(dir: &Path) -> Result<Segmenter> {
    let mut pairs = Vec::new();
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut wavs: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("wav")))
        .collect();
    wavs.sort();
    for wav in wavs {
        let stem = wav.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
        let ann = dir.join(format!("{stem}{STATES_SUFFIX}"));
        if !ann.exists() {
            continue;
        }
        let rec = resample(&load_wav(&wav)?, CANONICAL_RATE)?;
        let text = fs::read_to_string(&ann).map_err(|e| Error::io(&ann, e))?;
        let intervals = read_intervals(&text, CANONICAL_RATE)?;
        let n_steps = rec.samples.len() / DECIMATION;
        let states = StateSequence::from_intervals(&intervals, n_steps).map_err(|e| e.at_stage("annotation", &stem))?;
        pairs.push((rec, states));
    }
    if pairs.is_empty() {
        return Err(Error::Empty(format!("no annotated recordings in {}", dir.display())));
    }
    let labelled: Vec<_> = pairs.iter().map(|(r, s)| (r, s.clone())).collect();
    Segmenter::train(&labelled)
}
