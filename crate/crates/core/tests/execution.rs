use rnv_core::clustering::{fit_segmenter_with, frame_log_probs_with};
use rnv_core::config::{EnvelopeConfig, SegmenterConfig, Weighting};
use rnv_core::conversion::knn_convert_with;
use rnv_core::envelope::sonority_envelope_with;
use rnv_core::synth::{am_tone, blob_segmenter, random_features, typed_blob_utterance};
use rnv_core::{knn_index, Execution, SpeechType};

const BOTH: [Execution; 2] = [Execution::Sequential, Execution::Parallel];

#[test]
fn knn_is_execution_independent() {
    let src = random_features(150, 12, 1);
    let db = knn_index(&[random_features(400, 12, 2)], 8).unwrap();
    let [a, b] = BOTH.map(|e| knn_convert_with(&src, &db, 8, Weighting::Similarity, e).unwrap());
    assert_eq!(a, b);
}

#[test]
fn log_probs_and_envelope_are_execution_independent() {
    let feat = random_features(300, 9, 3);
    let model = blob_segmenter(9);
    let [a, b] = BOTH.map(|e| frame_log_probs_with(&feat, &model, e).unwrap());
    assert_eq!(a, b);
    let wave = am_tone(3.0, 2.0, 0.4);
    let [x, y] = BOTH.map(|e| sonority_envelope_with(&wave, 50.0, &EnvelopeConfig::default(), e).unwrap());
    assert_eq!(x, y);
}

#[test]
fn segmenter_fit_is_execution_independent() {
    use SpeechType::*;
    let corpus: Vec<_> = (0..3)
        .map(|u| typed_blob_utterance(&[(Silence, 0.3), (Sonorant, 0.5), (Obstruent, 0.3)], 10, 50.0, u))
        .collect();
    let cfg = SegmenterConfig { num_centroids: 12, ..SegmenterConfig::default() };
    let [a, b] = BOTH.map(|e| fit_segmenter_with(&corpus, &cfg, e).unwrap());
    assert_eq!(a, b);
}
