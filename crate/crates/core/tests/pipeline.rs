use rnv_core::config::Interpolation;
use rnv_core::synth::{blob_segmenter, random_features, syllable_train, SyllableTrain};
use rnv_core::{
    build_profile, convert_pipeline, knn_index, time_stretch, Config, PipelineOptions, RhythmMode, RhythmProfile,
};

#[test]
fn identity_profiles_leave_features_untouched() {
    let seg = blob_segmenter(8);
    let corpus: Vec<_> = (0..3)
        .map(|i| {
            let u = syllable_train(&SyllableTrain { seed: i, trail_s: 0.3 + 0.2 * i as f64, ..SyllableTrain::default() });
            (u.features, u.wave)
        })
        .collect();
    let mut cfg = Config::default();
    cfg.rhythm.min_samples = 5;
    let p = build_profile("a", &corpus, &seg, &cfg).unwrap();
    let u = syllable_train(&SyllableTrain { seed: 7, ..SyllableTrain::default() });
    for mode in RhythmMode::ALL {
        let out = convert_pipeline(
            &u.features,
            &u.wave,
            &seg,
            &p,
            &p,
            PipelineOptions { rhythm: Some(mode), voice: None },
            &cfg,
        )
        .unwrap();
        assert_eq!(out.features, u.features, "mode {mode}");
        let plan = out.plan.unwrap();
        assert!(plan.entries.iter().all(|e| (e.factor - 1.0).abs() < 1e-6), "{}", plan.to_json());
    }
}

#[test]
fn global_halving() {
    let seg = blob_segmenter(8);
    let u = syllable_train(&SyllableTrain::default());
    let src = RhythmProfile::from_rates("slow", 2.0, 2.0, 50.0);
    let tgt = RhythmProfile::from_rates("fast", 4.0, 4.0, 50.0);
    let out = convert_pipeline(
        &u.features,
        &u.wave,
        &seg,
        &src,
        &tgt,
        PipelineOptions { rhythm: Some(RhythmMode::SyllableGlobal), voice: None },
        &Config::default(),
    )
    .unwrap();
    let t = u.features.frames();
    assert!(out.features.frames().abs_diff(t / 2) <= 1);
    assert_eq!(out.plan.unwrap().entries[0].factor, 0.5);
}

#[test]
fn voice_conversion_self_database() {
    let feats = random_features(120, 16, 4);
    let db = knn_index(std::slice::from_ref(&feats), 1).unwrap();
    let mut cfg = Config::default();
    cfg.conversion.k = 1;
    let seg = blob_segmenter(16);
    let wave = rnv_core::synth::am_tone(4.0, feats.duration_s(), 0.5);
    let p = RhythmProfile::from_rates("a", 4.0, 4.0, 50.0);
    let out = convert_pipeline(&feats, &wave, &seg, &p, &p, PipelineOptions { rhythm: None, voice: Some(&db) }, &cfg)
        .unwrap();
    assert_eq!(out.features, feats);
    assert!(out.plan.is_none());
}

#[test]
fn stretch_lengths_match_rounding() {
    let f = random_features(101, 3, 1);
    for factor in [0.25, 0.5, 0.77, 1.3, 2.0, 4.0] {
        let out = time_stretch(&f, factor, Interpolation::Linear).unwrap();
        assert_eq!(out.frames(), (101.0 * factor).round() as usize);
    }
}
