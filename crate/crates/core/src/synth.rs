//! Synthetic corpora with known rhythm, for tests, benchmarks and demos.
//!
//! Features are drawn from three well-separated Gaussian blobs, one per speech
//! type, and the matching waveforms carry a signal that the acoustic labelling
//! references recognise (silence, a periodic tone, white noise).

use std::f64::consts::PI;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::clustering::{SegmenterModel, SpeechType};
use crate::featureio::{FeatureMatrix, Waveform};

pub const SAMPLE_RATE: u32 = 16_000;
const BLOB_OFFSET: f32 = 4.0;
const BLOB_SPREAD: f32 = 0.3;

/// 1 kHz carrier under a raised-cosine envelope at `mod_hz`, starting from zero amplitude.
pub fn am_tone(mod_hz: f64, secs: f64, amplitude: f64) -> Waveform {
    let n = (secs * SAMPLE_RATE as f64).round() as usize;
    let samples = (0..n)
        .map(|i| {
            let t = i as f64 / SAMPLE_RATE as f64;
            let a = 0.5 * (1.0 - (2.0 * PI * mod_hz * t).cos());
            (amplitude * a * (2.0 * PI * 1000.0 * t).sin()) as f32
        })
        .collect();
    Waveform::new(samples, SAMPLE_RATE).expect("finite samples")
}

/// Centre of the feature blob for `class` in `dim` dimensions.
pub fn blob_center(class: SpeechType, dim: usize) -> Vec<f32> {
    (0..dim)
        .map(|d| if d % 3 == class.index() { BLOB_OFFSET } else { 0.0 })
        .collect()
}

/// Segmenter whose three centroids are the blob centres, with a temperature
/// sharp enough that single-frame class changes survive the default gamma.
pub fn blob_segmenter(dim: usize) -> SegmenterModel {
    let mut c = Array2::zeros((3, dim));
    for class in SpeechType::ALL {
        for (d, v) in blob_center(class, dim).into_iter().enumerate() {
            c[[class.index(), d]] = v as f64;
        }
    }
    let tau = crate::clustering::median_pairwise_sq_distance(c.view()) / 25.0;
    SegmenterModel::new(c, SpeechType::ALL.to_vec(), tau, 0).expect("valid blob segmenter")
}

fn blob_frame(class: SpeechType, dim: usize, rng: &mut ChaCha8Rng) -> Vec<f32> {
    blob_center(class, dim)
        .into_iter()
        .map(|v| v + BLOB_SPREAD * (rng.random::<f32>() * 2.0 - 1.0))
        .collect()
}

#[derive(Debug, Clone)]
pub struct SyllableTrain {
    pub syllables: usize,
    /// Syllables per second of speech.
    pub rate_hz: f64,
    /// Relative spread of individual syllable durations, in [0, 1).
    pub jitter: f64,
    pub lead_s: f64,
    pub trail_s: f64,
    pub dim: usize,
    pub frame_rate: f64,
    pub seed: u64,
}

impl Default for SyllableTrain {
    fn default() -> Self {
        Self {
            syllables: 40,
            rate_hz: 4.0,
            jitter: 0.3,
            lead_s: 0.5,
            trail_s: 0.5,
            dim: 8,
            frame_rate: 50.0,
            seed: 1,
        }
    }
}

/// An utterance of raised-cosine "syllables" on a 1 kHz carrier.
#[derive(Debug, Clone)]
pub struct SyntheticUtterance {
    pub features: FeatureMatrix,
    pub wave: Waveform,
    /// Syllable boundaries in seconds.
    pub boundaries: Vec<f64>,
}

/// Builds a syllable train whose durations average exactly `1 / rate_hz`.
/// Frames are Silence outside the train, Sonorant where the syllable
/// envelope exceeds 0.2, Obstruent elsewhere inside the train.
pub fn syllable_train(train: &SyllableTrain) -> SyntheticUtterance {
    let mut rng = ChaCha8Rng::seed_from_u64(train.seed);
    let mean = 1.0 / train.rate_hz;
    let mut durations: Vec<f64> = (0..train.syllables)
        .map(|_| mean * (1.0 + train.jitter * (rng.random::<f64>() * 2.0 - 1.0)))
        .collect();
    let total: f64 = durations.iter().sum();
    let target = train.syllables as f64 * mean;
    durations.iter_mut().for_each(|d| *d *= target / total);

    let mut boundaries = vec![train.lead_s];
    for d in &durations {
        boundaries.push(boundaries.last().unwrap() + d);
    }
    let speech_end = *boundaries.last().unwrap();
    let secs = speech_end + train.trail_s;
    let sr = SAMPLE_RATE as f64;
    let frames = (secs * train.frame_rate).round() as usize;
    let hop = sr / train.frame_rate;
    let n = (frames as f64 * hop).round() as usize;

    let envelope_at = |t: f64| -> f64 {
        if t < train.lead_s || t >= speech_end {
            return 0.0;
        }
        let i = boundaries.partition_point(|&b| b <= t) - 1;
        let (s, e) = (boundaries[i], boundaries[i + 1]);
        0.5 * (1.0 - (2.0 * PI * (t - s) / (e - s)).cos())
    };
    let samples: Vec<f32> = (0..n)
        .map(|i| {
            let t = i as f64 / sr;
            (0.5 * envelope_at(t) * (2.0 * PI * 1000.0 * t).sin()) as f32
        })
        .collect();

    let rows: Vec<Vec<f32>> = (0..frames)
        .map(|f| {
            let centre = (f as f64 + 0.5) / train.frame_rate;
            let class = if centre < train.lead_s || centre >= speech_end {
                SpeechType::Silence
            } else if envelope_at(centre) > 0.2 {
                SpeechType::Sonorant
            } else {
                SpeechType::Obstruent
            };
            blob_frame(class, train.dim, &mut rng)
        })
        .collect();

    SyntheticUtterance {
        features: FeatureMatrix::from_rows(&rows, train.frame_rate).expect("finite features"),
        wave: Waveform::new(samples, SAMPLE_RATE).expect("finite samples"),
        boundaries,
    }
}

/// Concatenated typed stretches: zeros for Silence, a 150 Hz tone for
/// Sonorant, white noise for Obstruent, with blob features per frame.
pub fn typed_blob_utterance(parts: &[(SpeechType, f64)], dim: usize, frame_rate: f64, seed: u64) -> (FeatureMatrix, Waveform) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let hop = SAMPLE_RATE as f64 / frame_rate;
    let mut rows = Vec::new();
    let mut samples: Vec<f32> = Vec::new();
    for &(class, secs) in parts {
        let frames = (secs * frame_rate).round() as usize;
        for _ in 0..frames {
            rows.push(blob_frame(class, dim, &mut rng));
            let start = samples.len();
            let end = ((rows.len() as f64) * hop).round() as usize;
            for i in start..end {
                let t = i as f64 / SAMPLE_RATE as f64;
                samples.push(match class {
                    SpeechType::Silence => 0.0,
                    SpeechType::Sonorant => (0.5 * (2.0 * PI * 150.0 * t).sin()) as f32,
                    SpeechType::Obstruent => 0.3 * (rng.random::<f32>() * 2.0 - 1.0),
                });
            }
        }
    }
    (
        FeatureMatrix::from_rows(&rows, frame_rate).expect("finite features"),
        Waveform::new(samples, SAMPLE_RATE).expect("finite samples"),
    )
}

/// Uniform random features in [-1, 1).
pub fn random_features(rows: usize, dim: usize, seed: u64) -> FeatureMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = Array2::from_shape_fn((rows, dim), |_| rng.random_range(-1.0f32..1.0));
    FeatureMatrix::new(data, crate::config::DEFAULT_FRAME_RATE).expect("finite features")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn train_has_exact_speech_span() {
        let u = syllable_train(&SyllableTrain::default());
        assert_eq!(u.features.frames(), 550);
        assert_eq!(u.wave.len(), 550 * 320);
        assert!((u.boundaries.last().unwrap() - 10.5).abs() < 1e-9);
    }

    #[test]
    fn typed_parts_lengths() {
        let (f, w) = typed_blob_utterance(&[(SpeechType::Silence, 0.2), (SpeechType::Sonorant, 0.4)], 6, 50.0, 3);
        assert_eq!(f.frames(), 30);
        assert_eq!(w.len(), 30 * 320);
    }
}
