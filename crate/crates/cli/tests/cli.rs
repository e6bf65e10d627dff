mod common;

use common::{path_str, rnv, Corpus, DIM};
use rnv_core::synth::{random_features, typed_blob_utterance};
use rnv_core::{load_model, read_feature_matrix, write_feature_matrix, RhythmProfile, SegmenterModel, SpeechType};

fn stderr(o: &std::process::Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn unknown_flag_is_usage_error() {
    let out = rnv(&["segment", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("Usage"), "{}", stderr(&out));
}

#[test]
fn unknown_subcommand_and_help() {
    assert_eq!(rnv(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(rnv(&[]).status.code(), Some(1));
    assert_eq!(rnv(&["--help"]).status.code(), Some(0));
}

#[test]
fn missing_out_dir_is_usage_error() {
    let out = rnv(&["wer", "--ref", "a", "--hyp", "b"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn segment_dimension_mismatch_names_file() {
    let dir = tempfile::tempdir().unwrap();
    common::write_segmenter(&dir.path().join("seg.json"));
    let bad = dir.path().join("wide.npy");
    write_feature_matrix(&random_features(20, DIM + 3, 1), &bad).unwrap();
    let out = rnv(&[
        "segment",
        "--segmenter",
        path_str(&dir.path().join("seg.json")),
        path_str(&bad),
        "--out-dir",
        path_str(&dir.path().join("out")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("wide.npy"), "{}", stderr(&out));
}

#[test]
fn segment_writes_typed_segments() {
    let dir = tempfile::tempdir().unwrap();
    common::write_segmenter(&dir.path().join("seg.json"));
    let (feat, _) = typed_blob_utterance(&[(SpeechType::Silence, 0.2), (SpeechType::Sonorant, 0.3)], DIM, 50.0, 1);
    write_feature_matrix(&feat, dir.path().join("a.npy")).unwrap();
    let out = rnv(&[
        "segment",
        "--gamma",
        "3",
        "--segmenter",
        path_str(&dir.path().join("seg.json")),
        "--features",
        path_str(dir.path()),
        "--out-dir",
        path_str(&dir.path().join("out")),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = std::fs::read_to_string(dir.path().join("out/a.segments.json")).unwrap();
    let segs: Vec<serde_json::Value> = serde_json::from_str(&text).unwrap();
    assert_eq!(segs.len(), 2);
    assert_eq!(segs[0]["class"], "silence");
    assert_eq!(segs[1]["end_frame"], 25);
}

#[test]
fn missing_audio_is_data_error() {
    let dir = tempfile::tempdir().unwrap();
    common::write_segmenter(&dir.path().join("seg.json"));
    write_feature_matrix(&random_features(20, DIM, 1), dir.path().join("lonely.npy")).unwrap();
    let out = rnv(&[
        "analyze",
        "--speaker",
        "x",
        "--segmenter",
        path_str(&dir.path().join("seg.json")),
        "--features",
        path_str(dir.path()),
        "--out-dir",
        path_str(&dir.path().join("out")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("lonely.wav"), "{}", stderr(&out));
}

#[test]
fn train_segmenter_on_typed_corpus() {
    let dir = tempfile::tempdir().unwrap();
    use SpeechType::*;
    for u in 0..3 {
        let (f, w) = typed_blob_utterance(&[(Silence, 0.4), (Sonorant, 0.6), (Obstruent, 0.3), (Silence, 0.2)], 12, 50.0, u);
        write_feature_matrix(&f, dir.path().join(format!("u{u}.npy"))).unwrap();
        rnv_core::featureio::write_wav(&w, dir.path().join(format!("u{u}.wav"))).unwrap();
    }
    let out = rnv(&[
        "train-segmenter",
        "--num-centroids",
        "9",
        "--features",
        path_str(dir.path()),
        "--out-dir",
        path_str(&dir.path().join("out")),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let model: SegmenterModel = load_model(dir.path().join("out/segmenter.json")).unwrap();
    assert_eq!(model.num_centroids(), 9);
    for class in SpeechType::ALL {
        assert!(model.class_of().contains(&class));
    }
}

#[test]
fn analyze_report_and_convert() {
    let c = Corpus::new();
    c.analyze();
    let src: RhythmProfile = load_model(c.path("profiles/src.profile.json")).unwrap();
    let tgt: RhythmProfile = load_model(c.path("profiles/tgt.profile.json")).unwrap();
    assert!((src.syllable_rate - 2.0).abs() < 0.15, "{}", src.syllable_rate);
    assert!((tgt.syllable_rate - 4.0).abs() < 0.3, "{}", tgt.syllable_rate);
    assert!(c.path("profiles/src.rates.tsv").exists());
    assert!(c.path("profiles/src.density.tsv").exists());

    let report = rnv(&[
        "report",
        path_str(&c.path("profiles/src.profile.json")),
        path_str(&c.path("profiles/tgt.profile.json")),
        "--group",
        "slow",
        "--group",
        "fast",
        "--out-dir",
        path_str(&c.path("report")),
    ]);
    assert!(report.status.success(), "{}", stderr(&report));
    let rates = std::fs::read_to_string(c.path("report/rates.tsv")).unwrap();
    assert_eq!(rates.lines().count(), 3);
    assert!(rates.lines().nth(1).unwrap().starts_with("src\tslow\t"));

    let out_dir = c.path("converted");
    let out = c.convert(&out_dir, "syllable_global", "on");
    assert!(out.status.success(), "{}", stderr(&out));
    let input = read_feature_matrix(c.path("src/utt00.npy")).unwrap();
    let converted = read_feature_matrix(out_dir.join("utt00.npy")).unwrap();
    assert_eq!(converted.dim(), DIM);
    let factor = src.syllable_rate / tgt.syllable_rate;
    let expected = (input.frames() as f64 * factor).round() as usize;
    assert_eq!(converted.frames(), expected);
    let plan: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("utt00.plan.json")).unwrap()).unwrap();
    assert_eq!(plan["mode"], "syllable_global");

    let bad = c.convert(&c.path("bad"), "sideways", "off");
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn wer_files() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("ref.txt"), "a\tthe cat sat\nb\tHello, world\n").unwrap();
    std::fs::write(dir.path().join("hyp.txt"), "b\thello world\na\tthe bat sat\n").unwrap();
    let out = rnv(&[
        "wer",
        "--ref",
        path_str(&dir.path().join("ref.txt")),
        "--hyp",
        path_str(&dir.path().join("hyp.txt")),
        "--out-dir",
        path_str(dir.path()),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "WER 20.00% (S=1 I=0 D=0 N=5)");
    let tsv = std::fs::read_to_string(dir.path().join("wer.tsv")).unwrap();
    assert!(tsv.contains("a\t3\t1\t0\t0\t33.33"));

    std::fs::write(dir.path().join("short.txt"), "a\tthe cat sat\n").unwrap();
    let out = rnv(&[
        "wer",
        "--ref",
        path_str(&dir.path().join("ref.txt")),
        "--hyp",
        path_str(&dir.path().join("short.txt")),
        "--out-dir",
        path_str(dir.path()),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("short.txt"));
}

#[test]
fn envelope_dump() {
    let dir = tempfile::tempdir().unwrap();
    let wav = dir.path().join("tone.wav");
    rnv_core::featureio::write_wav(&rnv_core::synth::am_tone(4.0, 2.0, 0.5), &wav).unwrap();
    let out = rnv(&["envelope", path_str(&wav), "--out-dir", path_str(dir.path())]);
    assert!(out.status.success(), "{}", stderr(&out));
    let table = std::fs::read_to_string(dir.path().join("tone.envelope.tsv")).unwrap();
    assert_eq!(table.lines().count(), 101);
    let peaks = table.lines().skip(1).filter(|l| l.split('\t').nth(2) == Some("1")).count();
    assert!(peaks.abs_diff(8) <= 1, "{peaks} peaks");
}

#[test]
fn config_file_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("ref.txt"), "a\tx y z\n").unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, format!("seed = 3\n[paths]\nout_dir = \"{}\"\n", path_str(&dir.path().join("cfg_out")))).unwrap();
    let refp = dir.path().join("ref.txt");
    let out = std::process::Command::new(env!("CARGO_BIN_EXE_rnv"))
        .args(["wer", "--ref", path_str(&refp), "--hyp", path_str(&refp)])
        .env("RNV_CONFIG", &cfg)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(dir.path().join("cfg_out/wer.tsv").exists());

    std::fs::write(&cfg, "[pipeline.conversion]\nk = 0\n").unwrap();
    let out = rnv(&["--config", path_str(&cfg), "wer", "--ref", path_str(&refp), "--hyp", path_str(&refp), "--out-dir", path_str(dir.path())]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("run.toml"));
}
