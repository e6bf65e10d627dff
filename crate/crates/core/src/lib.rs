//! Feature-level rhythm and voice conversion for dysarthric speech.
//!
//! The pipeline works on frame-level speech representations stored as NPY
//! matrices. Speech is segmented into syllables (sonority envelope peaks) and
//! into the three speech types Silence / Sonorant / Obstruent (clustering of
//! units plus dynamic-programming merging). Per-speaker rhythm profiles drive
//! time-stretching of the feature sequence, and kNN matching against a target
//! speaker's units performs voice conversion.
//!
//! Inner loops over frames run on rayon when the `parallel` feature is enabled
//! (the default); see [`exec::Execution`].

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod clustering;
pub mod config;
pub mod conversion;
pub mod envelope;
pub mod error;
pub mod evaluation;
pub mod exec;
pub mod featureio;
pub mod rhythm;
mod special;
pub mod synth;

pub use clustering::{
    dp_segment, fit_segmenter, frame_log_probs, speech_regions, SegmenterModel, SpeechType,
    TypedSegment, TypedSegments,
};
pub use config::Config;
pub use conversion::{
    convert_pipeline, knn_convert, knn_index, rhythm_convert, time_stretch, PipelineOptions,
    RhythmMode, StretchPlan, UnitDatabase,
};
pub use envelope::{
    detect_extrema, sonority_envelope, syllable_segments, Envelope, ExtremaSet, SegmentMode,
    SyllableSegmentation,
};
pub use error::{Error, Result};
pub use evaluation::{rate_report, wer, WerReport};
pub use exec::Execution;
pub use featureio::{
    load_audio, load_model, read_feature_matrix, save_model, write_feature_matrix, FeatureMatrix,
    Waveform,
};
pub use rhythm::{analyze_utterance, build_profile, compute_rates, fit_gamma, map_duration, GammaModel, RhythmProfile, UtteranceAnalysis};

/// Half-open frame interval `[start, end)`.
pub type Interval = (usize, usize);
