use std::f64::consts::PI;
use std::path::Path;

use crate::config::AudioConfig;
use crate::error::{Error, Result};

/// Mono audio signal.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    pub samples: Vec<f32>,
    pub sample_rate: u32,
}

impl Waveform {
    pub fn new(samples: Vec<f32>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::invalid("sample rate must be positive"));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::invalid("waveform contains non-finite samples"));
        }
        Ok(Self { samples, sample_rate })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    pub fn rms(&self) -> f64 {
        rms(&self.samples)
    }

    /// RMS level in dBFS; `-inf` for silence.
    pub fn rms_db(&self) -> f64 {
        20.0 * self.rms().log10()
    }
}

pub(crate) fn rms(samples: &[f32]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    let energy: f64 = samples.iter().map(|&s| (s as f64) * (s as f64)).sum();
    (energy / samples.len() as f64).sqrt()
}

/// Reads a PCM or float WAV file and conforms it: mono, resampled, RMS-normalized.
pub fn load_audio(path: impl AsRef<Path>, cfg: &AudioConfig) -> Result<Waveform> {
    let path = path.as_ref();
    let mut reader = hound::WavReader::open(path)
        .map_err(|e| Error::Audio(format!("{}: {e}", path.display())))?;
    let spec = reader.spec();
    let channels = spec.channels as usize;
    if !(1..=2).contains(&channels) {
        return Err(Error::Audio(format!(
            "{}: {channels} channels (expected mono or stereo)",
            path.display()
        )));
    }
    let corrupt = |e: hound::Error| Error::Audio(format!("{}: {e}", path.display()));
    let interleaved: Vec<f32> = match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Float, 32) => {
            reader.samples::<f32>().collect::<Result<_, _>>().map_err(corrupt)?
        }
        (hound::SampleFormat::Int, bits @ 8..=32) => {
            let scale = 1.0 / (1u64 << (bits - 1)) as f32;
            reader
                .samples::<i32>()
                .map(|s| s.map(|v| v as f32 * scale))
                .collect::<Result<_, _>>()
                .map_err(corrupt)?
        }
        (format, bits) => {
            return Err(Error::Audio(format!(
                "{}: unsupported encoding {format:?} {bits}-bit",
                path.display()
            )))
        }
    };
    if interleaved.is_empty() {
        return Err(Error::Audio(format!("{}: empty audio", path.display())));
    }
    let mono: Vec<f32> = interleaved
        .chunks_exact(channels)
        .map(|frame| frame.iter().sum::<f32>() / channels as f32)
        .collect();
    conform(Waveform::new(mono, spec.sample_rate)?, cfg)
}

/// Resamples to `cfg.sample_rate` and scales to `cfg.target_level_db` RMS.
/// Silent input is returned unscaled.
pub fn conform(wave: Waveform, cfg: &AudioConfig) -> Result<Waveform> {
    if wave.is_empty() {
        return Err(Error::Audio("empty audio".into()));
    }
    let mut samples = if wave.sample_rate == cfg.sample_rate {
        wave.samples
    } else {
        resample(&wave.samples, wave.sample_rate, cfg.sample_rate, cfg.resample_zero_crossings)
    };
    let level = rms(&samples);
    if level > 0.0 {
        let gain = 10f64.powf(cfg.target_level_db / 20.0) / level;
        for s in &mut samples {
            *s = (*s as f64 * gain) as f32;
        }
    }
    Waveform::new(samples, cfg.sample_rate)
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

fn blackman(x: f64) -> f64 {
    // x in [-1, 1]
    0.42 + 0.5 * (PI * x).cos() + 0.08 * (2.0 * PI * x).cos()
}

/// Band-limited resampling with a Blackman-windowed sinc kernel.
fn resample(input: &[f32], from: u32, to: u32, zero_crossings: usize) -> Vec<f32> {
    let ratio = to as f64 / from as f64;
    let cutoff = ratio.min(1.0);
    let half_width = zero_crossings as f64 / cutoff;
    let out_len = ((input.len() as f64) * ratio).round().max(1.0) as usize;
    let n_in = input.len() as isize;
    (0..out_len)
        .map(|n| {
            let centre = n as f64 / ratio;
            let lo = ((centre - half_width).ceil() as isize).max(0);
            let hi = ((centre + half_width).floor() as isize).min(n_in - 1);
            let mut acc = 0.0;
            for k in lo..=hi {
                let d = centre - k as f64;
                acc += input[k as usize] as f64 * cutoff * sinc(cutoff * d) * blackman(d / half_width);
            }
            acc as f32
        })
        .collect()
}

/// Writes a mono 32-bit float WAV.
pub fn write_wav(wave: &Waveform, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: wave.sample_rate,
        bits_per_sample: 32,
        sample_format: hound::SampleFormat::Float,
    };
    let to_err = |e: hound::Error| Error::Audio(format!("{}: {e}", path.display()));
    let mut writer = hound::WavWriter::create(path, spec).map_err(to_err)?;
    for &s in &wave.samples {
        writer.write_sample(s).map_err(to_err)?;
    }
    writer.finalize().map_err(to_err)
}
