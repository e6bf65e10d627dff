//! Tunable constants for every stage, grouped per stage.
//!
//! All structs deserialize with defaults for missing fields, so a config file
//! only needs to list what it overrides.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_FRAME_RATE: f64 = 50.0;
pub const DEFAULT_SAMPLE_RATE: u32 = 16_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub audio: AudioConfig,
    pub envelope: EnvelopeConfig,
    pub peaks: PeakConfig,
    pub segmenter: SegmenterConfig,
    pub rhythm: RhythmConfig,
    pub conversion: ConversionConfig,
}

impl Config {
    pub fn validate(&self) -> Result<()> {
        self.audio.validate()?;
        self.envelope.validate()?;
        self.peaks.validate()?;
        self.segmenter.validate()?;
        self.rhythm.validate()?;
        self.conversion.validate()
    }
}

fn check(ok: bool, what: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("config: {what}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AudioConfig {
    pub sample_rate: u32,
    /// RMS target in dBFS.
    pub target_level_db: f64,
    /// Half-width of the windowed-sinc resampling kernel, in zero crossings.
    pub resample_zero_crossings: usize,
    /// Feature frame rate in Hz; also the envelope frame rate.
    pub frame_rate: f64,
}

impl Default for AudioConfig {
    fn default() -> Self {
        Self {
            sample_rate: DEFAULT_SAMPLE_RATE,
            target_level_db: -20.0,
            resample_zero_crossings: 32,
            frame_rate: DEFAULT_FRAME_RATE,
        }
    }
}

impl AudioConfig {
    fn validate(&self) -> Result<()> {
        check(self.sample_rate > 0, "audio.sample_rate must be positive")?;
        check(self.target_level_db.is_finite() && self.target_level_db <= 0.0, "audio.target_level_db must be <= 0")?;
        check(self.resample_zero_crossings >= 2, "audio.resample_zero_crossings must be >= 2")?;
        check(self.frame_rate > 0.0 && self.frame_rate.is_finite(), "audio.frame_rate must be positive")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvelopeConfig {
    pub bands: usize,
    pub low_hz: f64,
    pub high_hz: f64,
    /// Cut-off of the final smoothing low-pass.
    pub smoothing_hz: f64,
}

impl Default for EnvelopeConfig {
    fn default() -> Self {
        Self {
            bands: 8,
            low_hz: 300.0,
            high_hz: 5000.0,
            smoothing_hz: 10.0,
        }
    }
}

impl EnvelopeConfig {
    fn validate(&self) -> Result<()> {
        check(self.bands >= 1, "envelope.bands must be >= 1")?;
        check(self.low_hz > 0.0 && self.high_hz > self.low_hz, "envelope band edges must satisfy 0 < low < high")?;
        check(self.smoothing_hz > 0.0, "envelope.smoothing_hz must be positive")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PeakConfig {
    /// Minimum prominence as a fraction of the envelope's (max - min).
    pub min_prominence: f64,
    /// Minimum distance between retained peaks, seconds.
    pub min_distance_s: f64,
}

impl Default for PeakConfig {
    fn default() -> Self {
        Self {
            min_prominence: 0.10,
            min_distance_s: 0.100,
        }
    }
}

impl PeakConfig {
    fn validate(&self) -> Result<()> {
        check((0.0..1.0).contains(&self.min_prominence), "peaks.min_prominence must be in [0, 1)")?;
        check(self.min_distance_s >= 0.0, "peaks.min_distance_s must be >= 0")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SegmenterConfig {
    pub num_centroids: usize,
    pub seed: u64,
    pub max_iterations: usize,
    /// Relative inertia change below which k-means stops.
    pub tolerance: f64,
    /// DP segment penalty.
    pub gamma: f64,
    /// Frames quieter than the utterance's loudest frame by this many dB are silence references.
    pub silence_rel_db: f64,
    /// Normalized autocorrelation threshold for voiced references.
    pub voicing_threshold: f64,
    pub pitch_min_hz: f64,
    pub pitch_max_hz: f64,
}

impl Default for SegmenterConfig {
    fn default() -> Self {
        Self {
            num_centroids: 100,
            seed: 0x5eed,
            max_iterations: 300,
            tolerance: 1e-4,
            gamma: 3.0,
            silence_rel_db: 40.0,
            voicing_threshold: 0.45,
            pitch_min_hz: 50.0,
            pitch_max_hz: 400.0,
        }
    }
}

impl SegmenterConfig {
    fn validate(&self) -> Result<()> {
        check(self.num_centroids >= 3, "segmenter.num_centroids must be >= 3")?;
        check(self.max_iterations >= 1, "segmenter.max_iterations must be >= 1")?;
        check(self.tolerance >= 0.0, "segmenter.tolerance must be >= 0")?;
        check(self.gamma >= 0.0 && self.gamma.is_finite(), "segmenter.gamma must be >= 0")?;
        check(self.silence_rel_db > 0.0, "segmenter.silence_rel_db must be positive")?;
        check((0.0..=1.0).contains(&self.voicing_threshold), "segmenter.voicing_threshold must be in [0, 1]")?;
        check(
            self.pitch_min_hz > 0.0 && self.pitch_max_hz > self.pitch_min_hz,
            "segmenter pitch range must satisfy 0 < min < max",
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RhythmConfig {
    /// Durations required before a gamma model is fitted.
    pub min_samples: usize,
    /// CDF clamp used by duration mapping.
    pub cdf_epsilon: f64,
}

impl Default for RhythmConfig {
    fn default() -> Self {
        Self {
            min_samples: 10,
            cdf_epsilon: 1e-4,
        }
    }
}

impl RhythmConfig {
    fn validate(&self) -> Result<()> {
        check(self.min_samples >= 2, "rhythm.min_samples must be >= 2")?;
        check(self.cdf_epsilon > 0.0 && self.cdf_epsilon < 0.5, "rhythm.cdf_epsilon must be in (0, 0.5)")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    #[default]
    Linear,
    Nearest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    /// Similarity-proportional, shifted so the least similar neighbour gets ~0.
    #[default]
    Similarity,
    Uniform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConversionConfig {
    pub k: usize,
    pub factor_min: f64,
    pub factor_max: f64,
    pub interpolation: Interpolation,
    pub weighting: Weighting,
}

impl Default for ConversionConfig {
    fn default() -> Self {
        Self {
            k: 8,
            factor_min: 0.25,
            factor_max: 4.0,
            interpolation: Interpolation::Linear,
            weighting: Weighting::Similarity,
        }
    }
}

impl ConversionConfig {
    fn validate(&self) -> Result<()> {
        check(self.k >= 1, "conversion.k must be >= 1")?;
        check(
            self.factor_min > 0.0 && self.factor_max >= self.factor_min,
            "conversion factor clamp must satisfy 0 < min <= max",
        )
    }
}
