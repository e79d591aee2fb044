//! Segments of whole heart cycles, cut at S1 onsets.

use std::io::Write;

use crate::dataset::{Label, SignalRecording};
use crate::error::{Error, Result};

pub const ALLOWED_CYCLE_COUNTS: [usize; 3] = [2, 5, 8];

/// Audio spanning exactly `n_cycles` heart cycles; `start` is an S1 onset and
/// `end` (exclusive, in samples) is the S1 onset `n_cycles` later.
#[derive(Debug, Clone, PartialEq)]
pub struct CycleSegment {
    pub recording_id: String,
    pub index: usize,
    pub samples: Vec<f64>,
    pub sample_rate: u32,
    pub n_cycles: usize,
    pub start: usize,
    pub end: usize,
    pub label: Label,
}

impl CycleSegment {
    pub fn id(&self) -> String {
        format!("{}#{}", self.recording_id, self.index)
    }

    pub fn start_secs(&self) -> f64 {
        self.start as f64 / self.sample_rate as f64
    }

    pub fn end_secs(&self) -> f64 {
        self.end as f64 / self.sample_rate as f64
    }

    pub fn duration_secs(&self) -> f64 {
        self.end_secs() - self.start_secs()
    }
}

/// Windows of `n_cycles` consecutive cycles starting at onsets
/// `0, stride, 2·stride, ...`. `onsets` are sample indices into `rec`.
///
/// A recording with too few onsets yields an empty list and a warning.
pub fn extract_cycles(
    rec: &SignalRecording,
    onsets: &[usize],
    n_cycles: usize,
    stride: usize,
) -> Result<Vec<CycleSegment>> {
    if !ALLOWED_CYCLE_COUNTS.contains(&n_cycles) {
        return Err(Error::InvalidArgument(format!("n_cycles must be one of 2, 5, 8, got {n_cycles}")));
    }
    if stride == 0 {
        return Err(Error::InvalidArgument("stride must be at least 1".into()));
    }
    if onsets.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("S1 onsets must be strictly increasing".into()));
    }
    if let Some(&last) = onsets.last() {
        if last > rec.samples.len() {
            return Err(Error::InvalidArgument(format!("onset {last} beyond end of {}", rec.id)));
        }
    }
    if onsets.len() < n_cycles + 1 {
        log::warn!("{}: {} S1 onsets, too few for a {n_cycles}-cycle segment", rec.id, onsets.len());
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    let mut k = 0;
    while k + n_cycles < onsets.len() {
        let (start, end) = (onsets[k], onsets[k + n_cycles]);
        out.push(CycleSegment {
            recording_id: rec.id.clone(),
            index: out.len(),
            samples: rec.samples[start..end].to_vec(),
            sample_rate: rec.sample_rate,
            n_cycles,
            start,
            end,
            label: rec.label,
        });
        k += stride;
    }
    Ok(out)
}

/// Writes `recording_id,start_s,end_s,n_cycles,label` lines.
pub fn write_segment_index<W: Write>(segments: &[CycleSegment], mut out: W) -> std::io::Result<()> {
    for s in segments {
        writeln!(out, "{},{:.3},{:.3},{},{}", s.recording_id, s.start_secs(), s.end_secs(), s.n_cycles, s.label)?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentIndexEntry {
    pub recording_id: String,
    pub start_secs: f64,
    pub end_secs: f64,
    pub n_cycles: usize,
    pub label: Label,
}

pub fn read_segment_index(text: &str) -> Result<Vec<SegmentIndexEntry>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let loc = format!("segment index line {}", i + 1);
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() != 5 {
            return Err(Error::parse(&loc, "expected recording_id,start_s,end_s,n_cycles,label"));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| Error::parse(&loc, format!("bad number {s:?}")));
        out.push(SegmentIndexEntry {
            recording_id: cols[0].to_string(),
            start_secs: num(cols[1])?,
            end_secs: num(cols[2])?,
            n_cycles: cols[3].parse().map_err(|_| Error::parse(&loc, "bad cycle count"))?,
            label: cols[4].parse()?,
        });
    }
    Ok(out)
}
