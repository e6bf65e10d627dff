//! Sonority envelope, syllable nuclei / onset detection, syllable intervals.
//!
//! The envelope is the smoothed sum of full-wave rectified band-pass outputs.
//! All filters run forward and backward so extrema stay aligned with the
//! feature frames.

use std::f64::consts::{PI, SQRT_2};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::config::{EnvelopeConfig, PeakConfig};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::featureio::Waveform;
use crate::Interval;

#[derive(Debug, Clone, PartialEq)]
pub struct Envelope {
    pub values: Vec<f64>,
    pub frame_rate: f64,
}

impl Envelope {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Peaks are syllable nuclei, valleys syllable onsets. Both ascending.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtremaSet {
    pub peaks: Vec<usize>,
    pub valleys: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SegmentMode {
    PeakToPeak,
    ValleyToValley,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyllableSegmentation {
    pub mode: SegmentMode,
    /// Extrema the segments were built from (peaks or valleys depending on `mode`).
    pub anchors: Vec<usize>,
    pub segments: Vec<Interval>,
    pub durations: Vec<f64>,
    pub frame_rate: f64,
}

impl SyllableSegmentation {
    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }
}

#[derive(Debug, Clone, Copy)]
struct Biquad {
    b: [f64; 3],
    a: [f64; 2],
}

impl Biquad {
    fn from_raw(b: [f64; 3], a0: f64, a1: f64, a2: f64) -> Self {
        Biquad {
            b: [b[0] / a0, b[1] / a0, b[2] / a0],
            a: [a1 / a0, a2 / a0],
        }
    }

    /// Band-pass with 0 dB gain at `centre`.
    fn band_pass(centre: f64, q: f64, fs: f64) -> Self {
        let w0 = 2.0 * PI * centre / fs;
        let alpha = w0.sin() / (2.0 * q);
        Self::from_raw([alpha, 0.0, -alpha], 1.0 + alpha, -2.0 * w0.cos(), 1.0 - alpha)
    }

    /// Second-order Butterworth low-pass.
    fn low_pass(cutoff: f64, fs: f64) -> Self {
        let w0 = 2.0 * PI * cutoff / fs;
        let cos = w0.cos();
        let alpha = w0.sin() / (2.0 / SQRT_2);
        let b1 = 1.0 - cos;
        Self::from_raw([b1 / 2.0, b1, b1 / 2.0], 1.0 + alpha, -2.0 * cos, 1.0 - alpha)
    }

    fn run(&self, x: &mut [f64]) {
        let (mut z1, mut z2) = (0.0, 0.0);
        for v in x.iter_mut() {
            let input = *v;
            let out = self.b[0] * input + z1;
            z1 = self.b[1] * input - self.a[0] * out + z2;
            z2 = self.b[2] * input - self.a[1] * out;
            *v = out;
        }
    }

    fn filtfilt(&self, x: &mut [f64]) {
        self.run(x);
        x.reverse();
        self.run(x);
        x.reverse();
    }
}

/// Log-spaced band edges between `low` and `high`.
fn band_edges(cfg: &EnvelopeConfig, nyquist: f64) -> Vec<(f64, f64)> {
    let high = cfg.high_hz.min(0.9 * nyquist);
    let ratio = (high / cfg.low_hz).powf(1.0 / cfg.bands as f64);
    (0..cfg.bands)
        .map(|i| {
            let lo = cfg.low_hz * ratio.powi(i as i32);
            (lo, lo * ratio)
        })
        .collect()
}

/// Number of frames covered by `samples` at `frame_rate`.
pub fn frame_count(samples: usize, sample_rate: u32, frame_rate: f64) -> usize {
    (samples as f64 * frame_rate / sample_rate as f64 + 1e-9).floor() as usize
}

pub fn sonority_envelope(wave: &Waveform, frame_rate: f64, cfg: &EnvelopeConfig) -> Result<Envelope> {
    sonority_envelope_with(wave, frame_rate, cfg, Execution::default())
}

pub fn sonority_envelope_with(
    wave: &Waveform,
    frame_rate: f64,
    cfg: &EnvelopeConfig,
    exec: Execution,
) -> Result<Envelope> {
    if wave.is_empty() {
        return Err(Error::invalid("cannot compute the envelope of an empty waveform"));
    }
    if !(frame_rate > 0.0) {
        return Err(Error::invalid("frame rate must be positive"));
    }
    let fs = wave.sample_rate as f64;
    let mean = wave.samples.iter().map(|&s| s as f64).sum::<f64>() / wave.len() as f64;
    let centred: Vec<f64> = wave.samples.iter().map(|&s| s as f64 - mean).collect();

    let bands = band_edges(cfg, fs / 2.0);
    let rectified = exec.map_slice(&bands, |&(lo, hi)| {
        let centre = (lo * hi).sqrt();
        let mut x = centred.clone();
        Biquad::band_pass(centre, centre / (hi - lo), fs).filtfilt(&mut x);
        x.iter_mut().for_each(|v| *v = v.abs());
        x
    });
    let mut sum = vec![0.0; centred.len()];
    for band in &rectified {
        for (acc, v) in sum.iter_mut().zip(band) {
            *acc += v;
        }
    }
    Biquad::low_pass(cfg.smoothing_hz, fs).filtfilt(&mut sum);

    let frames = frame_count(sum.len(), wave.sample_rate, frame_rate);
    let hop = fs / frame_rate;
    let values = (0..frames)
        .map(|t| {
            let start = (t as f64 * hop).round() as usize;
            let end = (((t + 1) as f64 * hop).round() as usize).min(sum.len()).max(start + 1);
            let mean = sum[start..end].iter().sum::<f64>() / (end - start) as f64;
            mean.max(0.0)
        })
        .collect();
    Ok(Envelope { values, frame_rate })
}

/// Local maxima, plateaus reported at their middle sample. Edges are never maxima.
fn local_maxima(x: &[f64]) -> Vec<usize> {
    let mut out = Vec::new();
    let n = x.len();
    let mut i = 1;
    while i + 1 < n {
        if x[i - 1] < x[i] {
            let mut ahead = i + 1;
            while ahead + 1 < n && x[ahead] == x[i] {
                ahead += 1;
            }
            if x[ahead] < x[i] {
                out.push((i + ahead - 1) / 2);
                i = ahead;
            }
        }
        i += 1;
    }
    out
}

fn prominence(x: &[f64], peak: usize) -> f64 {
    let h = x[peak];
    let mut left_min = h;
    for &v in x[..peak].iter().rev() {
        if v > h {
            break;
        }
        left_min = left_min.min(v);
    }
    let mut right_min = h;
    for &v in &x[peak + 1..] {
        if v > h {
            break;
        }
        right_min = right_min.min(v);
    }
    h - left_min.max(right_min)
}

/// Greedy distance filter: higher peaks claim their neighbourhood first.
fn enforce_distance(x: &[f64], peaks: &[usize], min_distance: usize) -> Vec<usize> {
    if min_distance <= 1 {
        return peaks.to_vec();
    }
    let mut order: Vec<usize> = (0..peaks.len()).collect();
    order.sort_by(|&a, &b| x[peaks[b]].total_cmp(&x[peaks[a]]).then(a.cmp(&b)));
    let mut keep = vec![true; peaks.len()];
    for &i in &order {
        if !keep[i] {
            continue;
        }
        for j in (0..i).rev() {
            if peaks[i] - peaks[j] >= min_distance {
                break;
            }
            keep[j] = false;
        }
        for j in i + 1..peaks.len() {
            if peaks[j] - peaks[i] >= min_distance {
                break;
            }
            keep[j] = false;
        }
    }
    peaks.iter().zip(keep).filter(|(_, k)| *k).map(|(&p, _)| p).collect()
}

fn argmin(x: &[f64], range: std::ops::Range<usize>) -> Option<usize> {
    let start = range.start;
    x[range]
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1).then(a.0.cmp(&b.0)))
        .map(|(i, _)| start + i)
}

fn in_regions(regions: &[Interval], i: usize) -> bool {
    regions.iter().any(|&(s, e)| s <= i && i < e)
}

#[derive(Clone, Copy, PartialEq)]
enum Kind {
    Peak,
    Valley,
}

pub fn detect_extrema(env: &Envelope, speech_regions: Option<&[Interval]>, cfg: &PeakConfig) -> ExtremaSet {
    let x = &env.values;
    if x.is_empty() {
        return ExtremaSet::default();
    }
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = x.iter().copied().fold(f64::INFINITY, f64::min);
    let range = max - min;
    if !(range > 0.0) {
        return ExtremaSet::default();
    }
    let threshold = cfg.min_prominence * range;
    let candidates: Vec<usize> = local_maxima(x)
        .into_iter()
        .filter(|&p| prominence(x, p) >= threshold)
        .collect();
    let min_distance = (cfg.min_distance_s * env.frame_rate - 1e-9).ceil().max(1.0) as usize;
    let peaks = enforce_distance(x, &candidates, min_distance);
    if peaks.is_empty() {
        return ExtremaSet::default();
    }

    let mut valleys = Vec::with_capacity(peaks.len() + 1);
    if peaks[0] > 0 {
        valleys.extend(argmin(x, 0..peaks[0]));
    }
    for w in peaks.windows(2) {
        valleys.extend(argmin(x, w[0] + 1..w[1]));
    }
    let last = *peaks.last().unwrap();
    if last + 1 < x.len() {
        valleys.extend(argmin(x, last + 1..x.len()));
    }

    let Some(regions) = speech_regions else {
        return ExtremaSet { peaks, valleys };
    };

    let mut merged: Vec<(usize, Kind)> = peaks
        .iter()
        .map(|&p| (p, Kind::Peak))
        .chain(valleys.iter().map(|&v| (v, Kind::Valley)))
        .filter(|&(i, _)| in_regions(regions, i))
        .collect();
    merged.sort_by_key(|&(i, _)| i);

    // collapse runs of the same kind to their most extreme member
    let mut out = ExtremaSet::default();
    let mut run: Option<(usize, Kind)> = None;
    let flush = |item: (usize, Kind), out: &mut ExtremaSet| match item.1 {
        Kind::Peak => out.peaks.push(item.0),
        Kind::Valley => out.valleys.push(item.0),
    };
    for item in merged {
        run = Some(match run {
            Some(cur) if cur.1 == item.1 => {
                let better = match item.1 {
                    Kind::Peak => x[item.0] > x[cur.0],
                    Kind::Valley => x[item.0] < x[cur.0],
                };
                if better { item } else { cur }
            }
            Some(cur) => {
                flush(cur, &mut out);
                item
            }
            None => item,
        });
    }
    if let Some(cur) = run {
        flush(cur, &mut out);
    }
    out
}

pub fn syllable_segments(
    ex: &ExtremaSet,
    mode: SegmentMode,
    total_frames: usize,
    frame_rate: f64,
) -> Result<SyllableSegmentation> {
    if total_frames == 0 {
        return Err(Error::invalid("syllable segmentation needs at least one frame"));
    }
    let anchors = match mode {
        SegmentMode::PeakToPeak => ex.peaks.clone(),
        SegmentMode::ValleyToValley => ex.valleys.clone(),
    };
    if let Some(&bad) = anchors.iter().find(|&&a| a >= total_frames) {
        return Err(Error::invalid(format!("extremum at frame {bad} beyond {total_frames} frames")));
    }
    if anchors.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("extrema must be strictly increasing"));
    }
    let segments: Vec<Interval> = anchors.windows(2).map(|w| (w[0], w[1])).collect();
    let durations = segments.iter().map(|&(s, e)| (e - s) as f64 / frame_rate).collect();
    Ok(SyllableSegmentation { mode, anchors, segments, durations, frame_rate })
}

/// Tab-separated `frame_index value is_peak is_valley` rows with a header line.
pub fn envelope_table(env: &Envelope, ex: &ExtremaSet) -> String {
    let mut out = String::from("frame_index\tvalue\tis_peak\tis_valley\n");
    for (i, v) in env.values.iter().enumerate() {
        let peak = ex.peaks.binary_search(&i).is_ok() as u8;
        let valley = ex.valleys.binary_search(&i).is_ok() as u8;
        writeln!(out, "{i}\t{v:.9e}\t{peak}\t{valley}").unwrap();
    }
    out
}
