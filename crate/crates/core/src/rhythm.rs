//! Speaker rhythm profiles: speaking rates and gamma duration models.

use std::collections::BTreeMap;

use log::debug;
use serde::{Deserialize, Serialize};

use crate::clustering::{segment_features, speech_regions, SegmenterModel, SpeechType, TypedSegments};
use crate::config::Config;
use crate::envelope::{detect_extrema, sonority_envelope_with, Envelope, ExtremaSet, SegmentMode, SyllableSegmentation};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::featureio::{FeatureMatrix, Persist, Waveform};
use crate::special::{digamma, gamma_p, ln_gamma, trigamma};
use crate::Interval;

const NEWTON_TOL: f64 = 1e-10;
const NEWTON_MAX_ITER: usize = 50;

/// Gamma distribution over durations in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaModel {
    pub shape: f64,
    pub scale: f64,
    /// Number of durations the model was fitted on (0 when constructed directly).
    pub n: usize,
}

impl GammaModel {
    pub fn new(shape: f64, scale: f64) -> Result<Self> {
        if !(shape > 0.0 && shape.is_finite() && scale > 0.0 && scale.is_finite()) {
            return Err(Error::invalid(format!("invalid gamma parameters shape={shape}, scale={scale}")));
        }
        Ok(Self { shape, scale, n: 0 })
    }

    pub fn mean(&self) -> f64 {
        self.shape * self.scale
    }

    /// Mode of the density; `None` when the density is unbounded at zero.
    pub fn mode(&self) -> Option<f64> {
        (self.shape > 1.0).then_some((self.shape - 1.0) * self.scale)
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return f64::NEG_INFINITY;
        }
        (self.shape - 1.0) * x.ln() - x / self.scale - ln_gamma(self.shape) - self.shape * self.scale.ln()
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        self.ln_pdf(x).exp()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        gamma_p(self.shape, x / self.scale)
    }

    /// Inverse CDF by bracketing and bisection, to ~1e-13 relative.
    pub fn ppf(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        if u >= 1.0 {
            return f64::INFINITY;
        }
        let mut lo = 0.0;
        let mut hi = self.mean().max(f64::MIN_POSITIVE);
        while self.cdf(hi) < u {
            lo = hi;
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.cdf(mid) < u {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-13 * hi {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    pub fn log_likelihood(&self, data: &[f64]) -> f64 {
        data.iter().map(|&x| self.ln_pdf(x)).sum()
    }

    /// Method-of-moments estimate: shape = m^2 / v, scale = v / m (population variance).
    pub fn from_moments(data: &[f64]) -> Result<Self> {
        let n = data.len() as f64;
        let m = data.iter().sum::<f64>() / n;
        let v = data.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n;
        if !(v > 0.0) {
            return Err(Error::InsufficientData("zero-variance durations".into()));
        }
        let mut g = Self::new(m * m / v, v / m)?;
        g.n = data.len();
        Ok(g)
    }
}

/// Maximum-likelihood gamma fit (Newton on the shape equation, moments fallback).
pub fn fit_gamma(durations: &[f64], min_samples: usize) -> Result<GammaModel> {
    if durations.len() < min_samples.max(2) {
        return Err(Error::InsufficientData(format!(
            "{} durations (need at least {})",
            durations.len(),
            min_samples.max(2)
        )));
    }
    if let Some(bad) = durations.iter().find(|&&d| !(d > 0.0 && d.is_finite())) {
        return Err(Error::invalid(format!("durations must be positive and finite, got {bad}")));
    }
    if durations.iter().all(|&d| d == durations[0]) {
        return Err(Error::InsufficientData("all durations are equal (zero variance)".into()));
    }
    let n = durations.len() as f64;
    let mean = durations.iter().sum::<f64>() / n;
    let mean_ln = durations.iter().map(|d| d.ln()).sum::<f64>() / n;
    let s = mean.ln() - mean_ln;

    match newton_shape(s) {
        Some(shape) => {
            let mut g = GammaModel::new(shape, mean / shape)?;
            g.n = durations.len();
            Ok(g)
        }
        None => {
            debug!("gamma fit: Newton did not converge (s = {s:e}); using moments");
            GammaModel::from_moments(durations)
        }
    }
}

/// Solves `ln k - digamma(k) = s` for the shape `k`.
fn newton_shape(s: f64) -> Option<f64> {
    if !(s > 0.0 && s.is_finite()) {
        return None;
    }
    let mut k = (3.0 - s + ((s - 3.0).powi(2) + 24.0 * s).sqrt()) / (12.0 * s);
    for _ in 0..NEWTON_MAX_ITER {
        let f = k.ln() - digamma(k) - s;
        let df = 1.0 / k - trigamma(k);
        let mut next = k - f / df;
        if !(next > 0.0) || !next.is_finite() {
            next = k / 2.0;
        }
        let done = (next - k).abs() <= NEWTON_TOL * k;
        k = next;
        if done {
            return Some(k);
        }
    }
    None
}

/// Maps `d` to the duration with the same CDF rank under `tgt`.
/// The source rank is clamped to `[eps, 1 - eps]`.
pub fn map_duration(d: f64, src: &GammaModel, tgt: &GammaModel, eps: f64) -> f64 {
    let u = src.cdf(d).clamp(eps, 1.0 - eps);
    tgt.ppf(u)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RhythmProfile {
    pub speaker_id: String,
    pub frame_rate: f64,
    /// Syllable nuclei per second of speech.
    pub syllable_rate: f64,
    /// Sonorant segments per second of speech.
    pub sonorant_rate: f64,
    pub speech_time_s: f64,
    pub syllable_gamma: Option<GammaModel>,
    pub per_type_gamma: BTreeMap<SpeechType, GammaModel>,
}

impl Persist for RhythmProfile {
    const KIND: &'static str = "rhythm_profile";
}

impl RhythmProfile {
    /// Profile with rates only; useful for global conversion.
    pub fn from_rates(speaker_id: impl Into<String>, syllable_rate: f64, sonorant_rate: f64, frame_rate: f64) -> Self {
        RhythmProfile {
            speaker_id: speaker_id.into(),
            frame_rate,
            syllable_rate,
            sonorant_rate,
            speech_time_s: 0.0,
            syllable_gamma: None,
            per_type_gamma: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rates {
    pub syllable_rate: f64,
    pub sonorant_rate: f64,
    pub speech_time_s: f64,
}

fn inside(regions: &[Interval], i: usize) -> bool {
    regions.iter().any(|&(s, e)| s <= i && i < e)
}

/// Pooled rates: nuclei and Sonorant segments per second of speech (non-Silence) time.
pub fn compute_rates(syllables: &[SyllableSegmentation], typed: &[TypedSegments]) -> Result<Rates> {
    if syllables.is_empty() {
        return Err(Error::InsufficientData("no utterances".into()));
    }
    if syllables.len() != typed.len() {
        return Err(Error::invalid(format!(
            "{} syllable segmentations but {} typed segmentations",
            syllables.len(),
            typed.len()
        )));
    }
    let (mut nuclei, mut sonorants, mut speech_time) = (0usize, 0usize, 0.0f64);
    for (syl, seg) in syllables.iter().zip(typed) {
        let regions = speech_regions(seg);
        let frames: usize = regions.iter().map(|(s, e)| e - s).sum();
        if frames == 0 {
            continue;
        }
        speech_time += frames as f64 / syl.frame_rate;
        if syl.mode == SegmentMode::PeakToPeak {
            nuclei += syl.anchors.iter().filter(|&&p| inside(&regions, p)).count();
        }
        sonorants += seg.count(SpeechType::Sonorant);
    }
    if speech_time <= 0.0 {
        return Err(Error::InsufficientData("zero speech time".into()));
    }
    Ok(Rates {
        syllable_rate: nuclei as f64 / speech_time,
        sonorant_rate: sonorants as f64 / speech_time,
        speech_time_s: speech_time,
    })
}

/// Everything derived from one utterance on the way to a profile or a conversion.
#[derive(Debug, Clone)]
pub struct UtteranceAnalysis {
    pub typed: TypedSegments,
    pub regions: Vec<Interval>,
    pub envelope: Envelope,
    pub extrema: ExtremaSet,
    pub syllables: SyllableSegmentation,
}

pub fn analyze_utterance(
    feat: &FeatureMatrix,
    wave: &Waveform,
    segmenter: &SegmenterModel,
    cfg: &Config,
) -> Result<UtteranceAnalysis> {
    analyze_utterance_with(feat, wave, segmenter, cfg, Execution::Sequential)
}

fn analyze_utterance_with(
    feat: &FeatureMatrix,
    wave: &Waveform,
    segmenter: &SegmenterModel,
    cfg: &Config,
    exec: Execution,
) -> Result<UtteranceAnalysis> {
    if feat.is_empty() {
        return Err(Error::invalid("utterance has no frames"));
    }
    let typed = segment_features(feat, segmenter, cfg.segmenter.gamma)?;
    let regions = speech_regions(&typed);
    let mut envelope = sonority_envelope_with(wave, feat.frame_rate(), &cfg.envelope, exec)?;
    let t = feat.frames();
    if envelope.len().abs_diff(t) > 1 {
        debug!("envelope has {} frames, features {t}; aligning to features", envelope.len());
    }
    envelope.values.resize(t, 0.0);
    let extrema = detect_extrema(&envelope, Some(&regions), &cfg.peaks);
    let syllables = crate::envelope::syllable_segments(&extrema, SegmentMode::PeakToPeak, t, feat.frame_rate())?;
    Ok(UtteranceAnalysis { typed, regions, envelope, extrema, syllables })
}

fn fit_optional(what: &str, durations: &[f64], min_samples: usize) -> Option<GammaModel> {
    match fit_gamma(durations, min_samples) {
        Ok(g) => Some(g),
        Err(e) => {
            debug!("no {what} duration model: {e}");
            None
        }
    }
}

/// Builds a speaker profile from (features, waveform) pairs of one speaker.
pub fn build_profile(
    speaker_id: &str,
    utterances: &[(FeatureMatrix, Waveform)],
    segmenter: &SegmenterModel,
    cfg: &Config,
) -> Result<RhythmProfile> {
    build_profile_with(speaker_id, utterances, segmenter, cfg, Execution::default())
}

pub fn build_profile_with(
    speaker_id: &str,
    utterances: &[(FeatureMatrix, Waveform)],
    segmenter: &SegmenterModel,
    cfg: &Config,
    exec: Execution,
) -> Result<RhythmProfile> {
    let Some((first, _)) = utterances.first() else {
        return Err(Error::InsufficientData("empty corpus".into()));
    };
    let frame_rate = first.frame_rate();
    let analyses = exec
        .map_slice(utterances, |(f, w)| analyze_utterance_with(f, w, segmenter, cfg, Execution::Sequential))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

    let syllables: Vec<SyllableSegmentation> = analyses.iter().map(|a| a.syllables.clone()).collect();
    let typed: Vec<TypedSegments> = analyses.iter().map(|a| a.typed.clone()).collect();
    let rates = compute_rates(&syllables, &typed)?;

    let syllable_durations: Vec<f64> = syllables.iter().flat_map(|s| s.durations.iter().copied()).collect();
    let min = cfg.rhythm.min_samples;
    let syllable_gamma = fit_optional("syllable", &syllable_durations, min);

    let mut per_type_gamma = BTreeMap::new();
    for class in SpeechType::ALL {
        let durations: Vec<f64> = analyses
            .iter()
            .zip(utterances)
            .flat_map(|(a, (f, _))| {
                let rate = f.frame_rate();
                a.typed
                    .segments
                    .iter()
                    .filter(move |s| s.class == class)
                    .map(move |s| s.len() as f64 / rate)
            })
            .collect();
        if let Some(g) = fit_optional(&class.to_string(), &durations, min) {
            per_type_gamma.insert(class, g);
        }
    }

    Ok(RhythmProfile {
        speaker_id: speaker_id.to_string(),
        frame_rate,
        syllable_rate: rates.syllable_rate,
        sonorant_rate: rates.sonorant_rate,
        speech_time_s: rates.speech_time_s,
        syllable_gamma,
        per_type_gamma,
    })
}
