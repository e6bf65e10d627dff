//! Sequential against rayon execution for the frame-parallel kernels.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rnv_core::clustering::{fit_segmenter_with, frame_log_probs_with};
use rnv_core::config::{EnvelopeConfig, SegmenterConfig, Weighting};
use rnv_core::conversion::knn_convert_with;
use rnv_core::envelope::sonority_envelope_with;
use rnv_core::synth::{am_tone, blob_segmenter, random_features, typed_blob_utterance};
use rnv_core::{knn_index, Execution, SpeechType};

const MODES: [Execution; 2] = [Execution::Sequential, Execution::Parallel];

fn label(e: Execution) -> &'static str {
    match e {
        Execution::Sequential => "sequential",
        Execution::Parallel => "parallel",
    }
}

fn knn(c: &mut Criterion) {
    let source = random_features(1000, 64, 1);
    let db = knn_index(&[random_features(5000, 64, 2)], 8).unwrap();
    let mut g = c.benchmark_group("knn_convert");
    for e in MODES {
        g.bench_function(BenchmarkId::from_parameter(label(e)), |b| {
            b.iter(|| knn_convert_with(black_box(&source), &db, 8, Weighting::Similarity, e).unwrap())
        });
    }
    g.finish();
}

fn log_probs(c: &mut Criterion) {
    let feat = random_features(5000, 64, 3);
    let model = blob_segmenter(64);
    let mut g = c.benchmark_group("frame_log_probs");
    for e in MODES {
        g.bench_function(BenchmarkId::from_parameter(label(e)), |b| {
            b.iter(|| frame_log_probs_with(black_box(&feat), &model, e).unwrap())
        });
    }
    g.finish();
}

fn envelope(c: &mut Criterion) {
    let wave = am_tone(4.0, 10.0, 0.5);
    let cfg = EnvelopeConfig::default();
    let mut g = c.benchmark_group("sonority_envelope");
    for e in MODES {
        g.bench_function(BenchmarkId::from_parameter(label(e)), |b| {
            b.iter(|| sonority_envelope_with(black_box(&wave), 50.0, &cfg, e).unwrap())
        });
    }
    g.finish();
}

fn segmenter(c: &mut Criterion) {
    use SpeechType::*;
    let corpus: Vec<_> = (0..8)
        .map(|u| typed_blob_utterance(&[(Silence, 0.5), (Sonorant, 1.0), (Obstruent, 0.5), (Silence, 0.3)], 32, 50.0, u))
        .collect();
    let cfg = SegmenterConfig { num_centroids: 20, ..SegmenterConfig::default() };
    let mut g = c.benchmark_group("fit_segmenter");
    g.sample_size(10);
    for e in MODES {
        g.bench_function(BenchmarkId::from_parameter(label(e)), |b| {
            b.iter(|| fit_segmenter_with(black_box(&corpus), &cfg, e).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, knn, log_probs, envelope, segmenter);
criterion_main!(benches);
