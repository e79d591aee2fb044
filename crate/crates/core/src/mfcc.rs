//! Mel-frequency cepstral coefficients over short Hamming-windowed frames.

use std::io::{Read, Write};
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::cycles::CycleSegment;
use crate::dataset::Label;
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct MfccConfig {
    pub sample_rate: u32,
    pub window_ms: f64,
    pub hop_ms: f64,
    pub n_coefficients: usize,
    pub n_mel_filters: usize,
    pub fft_size: usize,
    pub mel_low: f64,
    pub mel_high: f64,
    pub log_floor: f64,
}

impl Default for MfccConfig {
    fn default() -> Self {
        MfccConfig {
            sample_rate: 1000,
            window_ms: 25.0,
            hop_ms: 10.0,
            n_coefficients: 13,
            n_mel_filters: 26,
            fft_size: 256,
            mel_low: 0.0,
            mel_high: 500.0,
            log_floor: 1e-10,
        }
    }
}

impl MfccConfig {
    pub fn window_len(&self) -> usize {
        (self.window_ms * self.sample_rate as f64 / 1000.0).round() as usize
    }

    pub fn hop_len(&self) -> usize {
        (self.hop_ms * self.sample_rate as f64 / 1000.0).round() as usize
    }

    pub fn n_bins(&self) -> usize {
        self.fft_size / 2 + 1
    }

    pub fn n_frames(&self, n_samples: usize) -> usize {
        if n_samples < self.window_len() {
            0
        } else {
            (n_samples - self.window_len()) / self.hop_len() + 1
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(format!("mfcc config: {m}")));
        if self.sample_rate == 0 || self.window_len() == 0 || self.hop_len() == 0 {
            return bad("rate, window and hop must be positive");
        }
        if self.fft_size < self.window_len() {
            return bad("fft_size shorter than the window");
        }
        if self.n_coefficients == 0 || self.n_coefficients > self.n_mel_filters {
            return bad("need 1 ≤ n_coefficients ≤ n_mel_filters");
        }
        if !(self.mel_low >= 0.0 && self.mel_low < self.mel_high && self.mel_high <= self.sample_rate as f64 / 2.0) {
            return bad("need 0 ≤ mel_low < mel_high ≤ sample_rate / 2");
        }
        if !(self.log_floor > 0.0) {
            return bad("log_floor must be positive");
        }
        Ok(())
    }
}

pub fn hz_to_mel(f: f64) -> f64 {
    2595.0 * (1.0 + f / 700.0).log10()
}

pub fn mel_to_hz(m: f64) -> f64 {
    700.0 * (10f64.powf(m / 2595.0) - 1.0)
}

/// `0.54 − 0.46·cos(2πn/(N−1))`.
pub fn hamming<T: Real>(n: usize) -> Vec<T> {
    if n == 1 {
        return vec![T::one()];
    }
    (0..n).map(|i| T::of(0.54 - 0.46 * (2.0 * std::f64::consts::PI * i as f64 / (n - 1) as f64).cos())).collect()
}

/// Hamming-windowed frames, each zero-padded to `fft_size`.
pub fn frame_signal<T: Real>(samples: &[T], cfg: &MfccConfig) -> Result<Vec<Vec<T>>> {
    cfg.validate()?;
    let (w, hop) = (cfg.window_len(), cfg.hop_len());
    if samples.len() < w {
        return Err(Error::SignalTooShort { required: w, actual: samples.len() });
    }
    let window = hamming::<T>(w);
    Ok((0..cfg.n_frames(samples.len()))
        .map(|f| {
            let mut frame = vec![T::zero(); cfg.fft_size];
            for (i, (dst, &wi)) in frame.iter_mut().zip(&window).enumerate() {
                *dst = samples[f * hop + i] * wi;
            }
            frame
        })
        .collect())
}

/// Triangular filters with centres equally spaced in mel.
#[derive(Debug, Clone)]
pub struct MelFilterbank<T> {
    /// `n_mel_filters + 2` edge/centre frequencies in Hz; filter `m` spans
    /// `points[m]..points[m + 2]` and peaks at `points[m + 1]`.
    pub points_hz: Vec<f64>,
    /// `n_mel_filters` rows of `fft_size / 2 + 1` weights.
    pub weights: Vec<Vec<T>>,
}

impl<T: Real> MelFilterbank<T> {
    pub fn centers_hz(&self) -> &[f64] {
        &self.points_hz[1..self.points_hz.len() - 1]
    }

    /// Weight of filter `m` at frequency `f` (Hz), on the continuous axis.
    pub fn response(&self, m: usize, f: f64) -> f64 {
        let (lo, c, hi) = (self.points_hz[m], self.points_hz[m + 1], self.points_hz[m + 2]);
        if f <= lo || f >= hi {
            0.0
        } else if f <= c {
            (f - lo) / (c - lo)
        } else {
            (hi - f) / (hi - c)
        }
    }
}

pub fn mel_filterbank<T: Real>(cfg: &MfccConfig) -> Result<MelFilterbank<T>> {
    cfg.validate()?;
    let (m_lo, m_hi) = (hz_to_mel(cfg.mel_low), hz_to_mel(cfg.mel_high));
    let n = cfg.n_mel_filters;
    let points_hz: Vec<f64> = (0..n + 2).map(|i| mel_to_hz(m_lo + (m_hi - m_lo) * i as f64 / (n + 1) as f64)).collect();
    let mut bank = MelFilterbank { points_hz, weights: Vec::with_capacity(n) };
    let bin_hz = cfg.sample_rate as f64 / cfg.fft_size as f64;
    for m in 0..n {
        let row = (0..cfg.n_bins()).map(|k| T::of(bank.response(m, k as f64 * bin_hz))).collect();
        bank.weights.push(row);
    }
    Ok(bank)
}

/// Orthonormal DCT-II of the whole input.
pub fn dct2_orthonormal<T: Real>(x: &[T]) -> Vec<T> {
    let n = x.len();
    let table = dct_table::<T>(n, n);
    table.iter().map(|row| row.iter().zip(x).map(|(&a, &b)| a * b).sum()).collect()
}

fn dct_table<T: Real>(n_out: usize, n: usize) -> Vec<Vec<T>> {
    (0..n_out)
        .map(|k| {
            let s = if k == 0 { (1.0 / n as f64).sqrt() } else { (2.0 / n as f64).sqrt() };
            (0..n)
                .map(|i| T::of(s * (std::f64::consts::PI * k as f64 * (2 * i + 1) as f64 / (2 * n) as f64).cos()))
                .collect()
        })
        .collect()
}

/// Frames × coefficients, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix<T> {
    pub segment_id: String,
    pub label: Label,
    pub n_coefficients: usize,
    pub data: Vec<T>,
}

impl<T: Real> FeatureMatrix<T> {
    pub fn new(segment_id: impl Into<String>, label: Label, n_coefficients: usize, data: Vec<T>) -> Result<Self> {
        if n_coefficients == 0 || !data.len().is_multiple_of(n_coefficients) {
            return Err(Error::Shape(format!("{} values do not fill rows of {n_coefficients}", data.len())));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite feature value".into()));
        }
        Ok(FeatureMatrix { segment_id: segment_id.into(), label, n_coefficients, data })
    }

    pub fn n_frames(&self) -> usize {
        self.data.len() / self.n_coefficients
    }

    pub fn row(&self, t: usize) -> &[T] {
        &self.data[t * self.n_coefficients..(t + 1) * self.n_coefficients]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, T> {
        self.data.chunks_exact(self.n_coefficients)
    }
}

/// Reusable extractor: window, filterbank, DCT table and FFT plan built once.
pub struct Mfcc<T: Real> {
    cfg: MfccConfig,
    window: Vec<T>,
    bank: MelFilterbank<T>,
    dct: Vec<Vec<T>>,
    fft: Arc<dyn Fft<T>>,
}

impl<T: Real> Mfcc<T> {
    pub fn new(cfg: MfccConfig) -> Result<Self> {
        cfg.validate()?;
        let bank = mel_filterbank(&cfg)?;
        let fft = FftPlanner::new().plan_fft_forward(cfg.fft_size);
        Ok(Mfcc {
            window: hamming(cfg.window_len()),
            dct: dct_table(cfg.n_coefficients, cfg.n_mel_filters),
            bank,
            fft,
            cfg,
        })
    }

    pub fn config(&self) -> &MfccConfig {
        &self.cfg
    }

    /// Row-major `frames × n_coefficients`.
    pub fn compute(&self, samples: &[T]) -> Result<Vec<T>> {
        let (w, hop, nfft) = (self.cfg.window_len(), self.cfg.hop_len(), self.cfg.fft_size);
        if samples.len() < w {
            return Err(Error::SignalTooShort { required: w, actual: samples.len() });
        }
        let n_frames = self.cfg.n_frames(samples.len());
        let floor = T::of(self.cfg.log_floor);
        let scale = T::one() / T::of_usize(nfft);
        let mut out = Vec::with_capacity(n_frames * self.cfg.n_coefficients);
        let mut buf = vec![Complex::new(T::zero(), T::zero()); nfft];
        let mut scratch = vec![Complex::new(T::zero(), T::zero()); self.fft.get_inplace_scratch_len()];
        let mut power = vec![T::zero(); self.cfg.n_bins()];
        let mut log_mel = vec![T::zero(); self.cfg.n_mel_filters];
        for f in 0..n_frames {
            for (i, b) in buf.iter_mut().enumerate() {
                let v = if i < w { samples[f * hop + i] * self.window[i] } else { T::zero() };
                *b = Complex::new(v, T::zero());
            }
            self.fft.process_with_scratch(&mut buf, &mut scratch);
            for (p, b) in power.iter_mut().zip(&buf) {
                *p = b.norm_sqr() * scale;
            }
            for (lm, row) in log_mel.iter_mut().zip(&self.bank.weights) {
                let e: T = row.iter().zip(&power).map(|(&a, &b)| a * b).sum();
                *lm = e.max(floor).ln();
            }
            for row in &self.dct {
                out.push(row.iter().zip(&log_mel).map(|(&a, &b)| a * b).sum());
            }
        }
        Ok(out)
    }
}

pub fn compute_mfcc<T: Real>(samples: &[T], cfg: &MfccConfig) -> Result<Vec<T>> {
    Mfcc::new(cfg.clone())?.compute(samples)
}

/// Features for one cycle segment; the segment must be at the configured rate.
pub fn featurize_segment(segment: &CycleSegment, extractor: &Mfcc<f64>) -> Result<FeatureMatrix<f64>> {
    if segment.sample_rate != extractor.cfg.sample_rate {
        return Err(Error::InvalidArgument(format!(
            "segment at {} Hz, features configured for {} Hz",
            segment.sample_rate, extractor.cfg.sample_rate
        )));
    }
    let data = extractor.compute(&segment.samples)?;
    FeatureMatrix::new(segment.id(), segment.label, extractor.cfg.n_coefficients, data)
}

const DUMP_MAGIC: &[u8; 8] = b"PCGMFCC\0";
const DUMP_VERSION: u32 = 1;

fn label_code(l: Label) -> u8 {
    match l {
        Label::Normal => 0,
        Label::Abnormal => 1,
        Label::Unlabeled => 2,
    }
}

/// Binary feature dump, all integers and floats little-endian:
///
/// ```text
/// magic    8 bytes  "PCGMFCC\0"
/// version  u32      1
/// count    u32      number of matrices
/// then per matrix:
///   id_len u32, id UTF-8 bytes,
///   label  u8 (0 normal, 1 abnormal, 2 unlabeled),
///   frames u32, coeffs u32,
///   frames·coeffs f64 values, row-major
/// ```
pub fn write_feature_dump<W: Write>(features: &[FeatureMatrix<f64>], mut out: W) -> std::io::Result<()> {
    out.write_all(DUMP_MAGIC)?;
    out.write_all(&DUMP_VERSION.to_le_bytes())?;
    out.write_all(&(features.len() as u32).to_le_bytes())?;
    for fm in features {
        out.write_all(&(fm.segment_id.len() as u32).to_le_bytes())?;
        out.write_all(fm.segment_id.as_bytes())?;
        out.write_all(&[label_code(fm.label)])?;
        out.write_all(&(fm.n_frames() as u32).to_le_bytes())?;
        out.write_all(&(fm.n_coefficients as u32).to_le_bytes())?;
        for v in &fm.data {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_feature_dump<R: Read>(mut input: R) -> Result<Vec<FeatureMatrix<f64>>> {
    let io = |e: std::io::Error| Error::parse("feature dump", e.to_string());
    let u32_at = |r: &mut R| -> Result<u32> {
        let mut b = [0u8; 4];
        r.read_exact(&mut b).map_err(io)?;
        Ok(u32::from_le_bytes(b))
    };
    let mut magic = [0u8; 8];
    input.read_exact(&mut magic).map_err(io)?;
    if &magic != DUMP_MAGIC {
        return Err(Error::parse("feature dump", "bad magic"));
    }
    let version = u32_at(&mut input)?;
    if version != DUMP_VERSION {
        return Err(Error::parse("feature dump", format!("unsupported version {version}")));
    }
    let count = u32_at(&mut input)?;
    let mut out = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let id_len = u32_at(&mut input)? as usize;
        let mut id = vec![0u8; id_len];
        input.read_exact(&mut id).map_err(io)?;
        let id = String::from_utf8(id).map_err(|_| Error::parse("feature dump", "segment id is not UTF-8"))?;
        let mut code = [0u8; 1];
        input.read_exact(&mut code).map_err(io)?;
        let label = match code[0] {
            0 => Label::Normal,
            1 => Label::Abnormal,
            2 => Label::Unlabeled,
            c => return Err(Error::parse("feature dump", format!("bad label code {c}"))),
        };
        let frames = u32_at(&mut input)? as usize;
        let coeffs = u32_at(&mut input)? as usize;
        let mut data = Vec::with_capacity(frames * coeffs);
        let mut b = [0u8; 8];
        for _ in 0..frames * coeffs {
            input.read_exact(&mut b).map_err(io)?;
            data.push(f64::from_le_bytes(b));
        }
        out.push(FeatureMatrix::new(id, label, coeffs, data)?);
    }
    Ok(out)
}
