//! Recordings, label files, resampling and train/validation/test splits.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rate every downstream stage assumes.
pub const CANONICAL_RATE: u32 = 1000;

/// Name of the label file inside a dataset directory.
pub const REFERENCE_FILE: &str = "REFERENCE.csv";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Normal,
    Abnormal,
    Unlabeled,
}

impl Label {
    /// Class index used by the classifiers: Normal = 0, Abnormal = 1.
    pub fn class_index(self) -> Option<usize> {
        match self {
            Label::Normal => Some(0),
            Label::Abnormal => Some(1),
            Label::Unlabeled => None,
        }
    }

    pub fn from_class_index(i: usize) -> Label {
        if i == 1 {
            Label::Abnormal
        } else {
            Label::Normal
        }
    }

    /// PhysioNet convention: -1 normal, 1 abnormal.
    pub fn from_reference_code(code: &str) -> Option<Label> {
        match code.trim() {
            "-1" => Some(Label::Normal),
            "1" => Some(Label::Abnormal),
            _ => None,
        }
    }

    pub fn reference_code(self) -> &'static str {
        match self {
            Label::Normal => "-1",
            Label::Abnormal => "1",
            Label::Unlabeled => "0",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Normal => "normal",
            Label::Abnormal => "abnormal",
            Label::Unlabeled => "unlabeled",
        })
    }
}

impl std::str::FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "normal" | "-1" => Ok(Label::Normal),
            "abnormal" | "1" => Ok(Label::Abnormal),
            "unlabeled" | "0" => Ok(Label::Unlabeled),
            other => Err(Error::parse("label", format!("unknown label {other:?}"))),
        }
    }
}

/// Mono audio in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalRecording {
    pub id: String,
    pub samples: Vec<f64>,
    pub sample_rate: u32,
    pub label: Label,
}

impl SignalRecording {
    pub fn new(id: impl Into<String>, samples: Vec<f64>, sample_rate: u32, label: Label) -> Result<Self> {
        let id = id.into();
        if samples.is_empty() {
            return Err(Error::Empty(format!("recording {id} has no samples")));
        }
        if sample_rate == 0 {
            return Err(Error::InvalidArgument("sample rate must be positive".into()));
        }
        if let Some(bad) = samples.iter().find(|s| !s.is_finite() || s.abs() > 1.0) {
            return Err(Error::InvalidArgument(format!("sample {bad} of {id} outside [-1, 1]")));
        }
        Ok(SignalRecording { id, samples, sample_rate, label })
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }
}

/// Reads a PCM WAV file, keeping the first channel.
///
/// Integer samples are divided by `2^(bits-1)`, so 16-bit `-32768` maps to
/// exactly `-1.0`. The recording id is the file stem.
pub fn load_wav(path: impl AsRef<Path>) -> Result<SignalRecording> {
    let path = path.as_ref();
    let wav_err = |e: hound::Error| match e {
        hound::Error::IoError(io) => Error::io(path, io),
        other => Error::Wav { path: path.to_path_buf(), message: other.to_string() },
    };
    let mut reader = hound::WavReader::open(path).map_err(wav_err)?;
    let spec = reader.spec();
    if spec.sample_format != hound::SampleFormat::Int {
        return Err(Error::UnsupportedEncoding(format!("{}: floating point samples", path.display())));
    }
    if spec.bits_per_sample == 0 || spec.bits_per_sample > 32 {
        return Err(Error::UnsupportedEncoding(format!("{}: {} bits", path.display(), spec.bits_per_sample)));
    }
    let channels = spec.channels.max(1) as usize;
    let scale = (1_u64 << (spec.bits_per_sample - 1)) as f64;
    let mut samples = Vec::with_capacity(reader.len() as usize / channels);
    for (i, s) in reader.samples::<i32>().enumerate() {
        let s = s.map_err(wav_err)?;
        if i % channels == 0 {
            samples.push(s as f64 / scale);
        }
    }
    if samples.is_empty() {
        return Err(Error::EmptyAudio(path.to_path_buf()));
    }
    let id = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    Ok(SignalRecording { id, samples, sample_rate: spec.sample_rate, label: Label::Unlabeled })
}

/// Writes 16-bit mono PCM. Samples are scaled by 32768, rounded and clamped.
pub fn write_wav(path: impl AsRef<Path>, rec: &SignalRecording) -> Result<()> {
    let path = path.as_ref();
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: rec.sample_rate,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let wav_err = |e: hound::Error| match e {
        hound::Error::IoError(io) => Error::io(path, io),
        other => Error::Wav { path: path.to_path_buf(), message: other.to_string() },
    };
    let mut writer = hound::WavWriter::create(path, spec).map_err(wav_err)?;
    for &s in &rec.samples {
        let q = (s * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
        writer.write_sample(q).map_err(wav_err)?;
    }
    writer.finalize().map_err(wav_err)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub path: PathBuf,
    pub label: Label,
    pub database: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DatasetManifest {
    /// Sorted by id.
    pub entries: Vec<ManifestEntry>,
    pub source_database: String,
    /// Non-fatal problems found while loading (e.g. labels without audio).
    pub warnings: Vec<String>,
}

/// Database letter from a PhysioNet-style id (`a0001` → `A`).
pub fn database_of(id: &str) -> String {
    if id.starts_with("syn") {
        return "synthetic".into();
    }
    match id.chars().next() {
        Some(c @ 'a'..='f') if id[1..].chars().all(|c| c.is_ascii_digit()) && id.len() > 1 => {
            c.to_ascii_uppercase().to_string()
        }
        _ => "unknown".into(),
    }
}

/// Loads `REFERENCE.csv` from `dir` and pairs every id with `<id>.wav`.
pub fn load_manifest(dir: impl AsRef<Path>) -> Result<DatasetManifest> {
    let dir = dir.as_ref();
    let reference = dir.join(REFERENCE_FILE);
    if !reference.is_file() {
        return Err(Error::MissingReference(reference));
    }
    let text = fs::read_to_string(&reference).map_err(|e| Error::io(&reference, e))?;
    let mut seen = HashSet::new();
    let mut entries = Vec::new();
    let mut warnings = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let location = format!("{}:{}", reference.display(), lineno + 1);
        let (id, code) = line.split_once(',').ok_or_else(|| Error::parse(&location, "expected `id,label`"))?;
        let id = id.trim().to_string();
        let label = Label::from_reference_code(code)
            .ok_or_else(|| Error::parse(&location, format!("label {:?} is not -1 or 1", code.trim())))?;
        if !seen.insert(id.clone()) {
            return Err(Error::DuplicateId(id));
        }
        let path = dir.join(format!("{id}.wav"));
        if !path.is_file() {
            let msg = format!("{id}: listed in {REFERENCE_FILE} but {} is missing; skipped", path.display());
            log::warn!("{msg}");
            warnings.push(msg);
            continue;
        }
        let database = database_of(&id);
        entries.push(ManifestEntry { id, path, label, database });
    }
    entries.sort_by(|a, b| a.id.cmp(&b.id));
    let source_database = summarize_databases(&entries);
    Ok(DatasetManifest { entries, source_database, warnings })
}

fn summarize_databases(entries: &[ManifestEntry]) -> String {
    let mut dbs: Vec<&str> = entries.iter().map(|e| e.database.as_str()).collect();
    dbs.dedup();
    dbs.sort_unstable();
    dbs.dedup();
    match dbs.as_slice() {
        [] => "unknown".into(),
        [one] => (*one).to_string(),
        _ => "mixed".into(),
    }
}

impl DatasetManifest {
    pub fn ids(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.id.as_str()).collect()
    }

    pub fn from_entries(mut entries: Vec<ManifestEntry>) -> Result<Self> {
        entries.sort_by(|a, b| a.id.cmp(&b.id));
        for pair in entries.windows(2) {
            if pair[0].id == pair[1].id {
                return Err(Error::DuplicateId(pair[0].id.clone()));
            }
        }
        if let Some(e) = entries.iter().find(|e| e.label == Label::Unlabeled) {
            return Err(Error::InvalidArgument(format!("{} is unlabeled", e.id)));
        }
        let source_database = summarize_databases(&entries);
        Ok(DatasetManifest { entries, source_database, warnings: Vec::new() })
    }

    /// Text export: a `version: 1` line, a header, then `id,path,label,database` rows.
    pub fn to_text(&self) -> String {
        let mut out = String::from("version: 1\n");
        out.push_str(&format!("source_database: {}\n", self.source_database));
        out.push_str("id,path,label,database\n");
        for e in &self.entries {
            out.push_str(&format!("{},{},{},{}\n", e.id, e.path.display(), e.label, e.database));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        match lines.next().map(str::trim) {
            Some("version: 1") => {}
            other => return Err(Error::parse("manifest", format!("unsupported version line {other:?}"))),
        }
        let source_database = lines
            .next()
            .and_then(|l| l.strip_prefix("source_database:"))
            .map(|s| s.trim().to_string())
            .ok_or_else(|| Error::parse("manifest", "missing source_database line"))?;
        if lines.next().map(str::trim) != Some("id,path,label,database") {
            return Err(Error::parse("manifest", "missing column header"));
        }
        let mut entries = Vec::new();
        for (i, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 4 {
                return Err(Error::parse(format!("manifest row {}", i + 1), "expected 4 columns"));
            }
            entries.push(ManifestEntry {
                id: cols[0].to_string(),
                path: PathBuf::from(cols[1]),
                label: cols[2].parse()?,
                database: cols[3].to_string(),
            });
        }
        let mut m = DatasetManifest::from_entries(entries)?;
        m.source_database = source_database;
        Ok(m)
    }
}

/// Band-limited resampling by windowed-sinc interpolation.
///
/// The kernel is a Blackman-windowed sinc with 16 zero crossings per side at
/// a cutoff of 0.95 × the lower Nyquist rate. Weights are normalized per
/// output sample, so DC passes exactly and the map stays linear.
pub fn resample(rec: &SignalRecording, target_rate: u32) -> Result<SignalRecording> {
    if target_rate == 0 {
        return Err(Error::InvalidArgument("target rate must be positive".into()));
    }
    if target_rate == rec.sample_rate {
        return Ok(rec.clone());
    }
    if target_rate as u64 > 4 * rec.sample_rate as u64 {
        return Err(Error::InvalidArgument(format!(
            "refusing to upsample {} Hz to {} Hz (more than 4x)",
            rec.sample_rate, target_rate
        )));
    }
    let samples = resample_samples(&rec.samples, rec.sample_rate as f64, target_rate as f64);
    Ok(SignalRecording { id: rec.id.clone(), samples, sample_rate: target_rate, label: rec.label })
}

pub(crate) fn resample_samples(x: &[f64], from: f64, to: f64) -> Vec<f64> {
    const ZERO_CROSSINGS: f64 = 16.0;
    let ratio = to / from;
    let n_out = ((x.len() as f64) * ratio).round().max(1.0) as usize;
    // cutoff in cycles per input sample
    let fc = 0.5 * ratio.min(1.0) * 0.95;
    let half_width = ZERO_CROSSINGS / (2.0 * fc);
    let mut out = Vec::with_capacity(n_out);
    for k in 0..n_out {
        let t = k as f64 / ratio;
        let lo = ((t - half_width).ceil().max(0.0)) as usize;
        let hi = ((t + half_width).floor() as isize).min(x.len() as isize - 1);
        let (mut acc, mut wsum) = (0.0, 0.0);
        if hi >= lo as isize {
            for (j, &xj) in x.iter().enumerate().take(hi as usize + 1).skip(lo) {
                let tau = t - j as f64;
                let w = windowed_sinc(tau, fc, half_width);
                acc += w * xj;
                wsum += w;
            }
        }
        out.push(if wsum.abs() > 1e-12 { acc / wsum } else { 0.0 });
    }
    out
}

fn windowed_sinc(tau: f64, fc: f64, half_width: f64) -> f64 {
    use std::f64::consts::PI;
    let arg = 2.0 * fc * tau;
    let sinc = if arg.abs() < 1e-12 { 1.0 } else { (PI * arg).sin() / (PI * arg) };
    // Blackman window over [-half_width, half_width]
    let u = (tau / half_width + 1.0) * 0.5;
    let w = 0.42 - 0.5 * (2.0 * PI * u).cos() + 0.08 * (4.0 * PI * u).cos();
    2.0 * fc * sinc * w.max(0.0)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub train: Vec<String>,
    pub validation: Vec<String>,
    pub test: Vec<String>,
    pub seed: u64,
}

impl DatasetSplit {
    pub fn role_of(&self, id: &str) -> Option<SplitRole> {
        if self.train.iter().any(|x| x == id) {
            Some(SplitRole::Train)
        } else if self.validation.iter().any(|x| x == id) {
            Some(SplitRole::Validation)
        } else if self.test.iter().any(|x| x == id) {
            Some(SplitRole::Test)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SplitRole {
    Train,
    Validation,
    Test,
}

/// Stratified split of a manifest by recording id.
pub fn split_dataset(manifest: &DatasetManifest, ratios: [f64; 3], seed: u64) -> Result<DatasetSplit> {
    let items: Vec<(&str, Label)> = manifest.entries.iter().map(|e| (e.id.as_str(), e.label)).collect();
    stratified_split(&items, ratios, seed)
}

/// Splits `(id, label)` pairs so every split keeps the global class ratio.
///
/// Per class, ids are sorted, shuffled with a seeded ChaCha stream and cut
/// into counts allocated by the largest-remainder method. Output lists are
/// sorted by id.
pub fn stratified_split(items: &[(&str, Label)], ratios: [f64; 3], seed: u64) -> Result<DatasetSplit> {
    if items.is_empty() {
        return Err(Error::Empty("cannot split an empty manifest".into()));
    }
    if ratios.iter().any(|r| !(0.0..=1.0).contains(r)) || (ratios.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!("split ratios {ratios:?} must be in [0,1] and sum to 1")));
    }
    let active_splits = ratios.iter().filter(|&&r| r > 0.0).count();
    let mut by_class: BTreeMap<Label, Vec<&str>> = BTreeMap::new();
    for &(id, label) in items {
        by_class.entry(label).or_default().push(id);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut split = DatasetSplit { train: vec![], validation: vec![], test: vec![], seed };
    for (label, mut ids) in by_class {
        if ids.len() < active_splits {
            return Err(Error::CannotStratify { class: label.to_string(), count: ids.len() });
        }
        ids.sort_unstable();
        ids.shuffle(&mut rng);
        let counts = largest_remainder(ids.len(), &ratios);
        let (a, rest) = ids.split_at(counts[0]);
        let (b, c) = rest.split_at(counts[1]);
        split.train.extend(a.iter().map(|s| s.to_string()));
        split.validation.extend(b.iter().map(|s| s.to_string()));
        split.test.extend(c.iter().map(|s| s.to_string()));
    }
    split.train.sort();
    split.validation.sort();
    split.test.sort();
    Ok(split)
}

/// Integer allocation of `n` items in proportion to `ratios`; every split with
/// a positive ratio gets at least one item when `n` allows.
fn largest_remainder(n: usize, ratios: &[f64; 3]) -> [usize; 3] {
    let exact: Vec<f64> = ratios.iter().map(|r| r * n as f64).collect();
    let mut counts = [0usize; 3];
    for i in 0..3 {
        counts[i] = (exact[i] + 1e-9).floor() as usize;
    }
    let mut left = n - counts.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|&a, &b| {
        let fa = exact[a] - counts[a] as f64;
        let fb = exact[b] - counts[b] as f64;
        fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
    });
    for &i in order.iter().cycle().take(3 * n) {
        if left == 0 {
            break;
        }
        if ratios[i] > 0.0 {
            counts[i] += 1;
            left -= 1;
        }
    }
    // guarantee every active split is populated
    for i in 0..3 {
        if ratios[i] > 0.0 && counts[i] == 0 {
            if let Some(donor) = (0..3).filter(|&j| counts[j] > 1).max_by_key(|&j| counts[j]) {
                counts[donor] -= 1;
                counts[i] += 1;
            }
        }
    }
    counts
}
