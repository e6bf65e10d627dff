//! On-disk fixtures shared by the CLI test targets.
#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rnv_core::featureio::write_wav;
use rnv_core::synth::{blob_segmenter, syllable_train, SyllableTrain};
use rnv_core::{save_model, write_feature_matrix};

pub const DIM: usize = 8;

pub fn rnv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rnv"))
        .args(args)
        .env_remove("RNV_CONFIG")
        .output()
        .expect("binary runs")
}

pub fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

/// Writes `count` syllable-train utterances (features and audio) into `dir`.
pub fn write_speaker(dir: &Path, rate_hz: f64, count: u64, seed: u64) {
    std::fs::create_dir_all(dir).unwrap();
    for i in 0..count {
        let u = syllable_train(&SyllableTrain {
            rate_hz,
            syllables: 16,
            seed: seed + i,
            trail_s: 0.3 + 0.1 * i as f64,
            dim: DIM,
            ..SyllableTrain::default()
        });
        write_feature_matrix(&u.features, dir.join(format!("utt{i:02}.npy"))).unwrap();
        write_wav(&u.wave, dir.join(format!("utt{i:02}.wav"))).unwrap();
    }
}

pub fn write_segmenter(path: &Path) {
    save_model(&blob_segmenter(DIM), path).unwrap();
}

/// Source speaker at 2 syllables/s, target at 4, plus a segmenter.
pub struct Corpus {
    pub root: tempfile::TempDir,
}

impl Corpus {
    pub fn new() -> Self {
        let root = tempfile::tempdir().unwrap();
        write_speaker(&root.path().join("src"), 2.0, 3, 10);
        write_speaker(&root.path().join("tgt"), 4.0, 3, 20);
        write_segmenter(&root.path().join("segmenter.json"));
        Corpus { root }
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.root.path().join(rel)
    }

    /// Runs `analyze` for both speakers into `profiles/`.
    pub fn analyze(&self) {
        for spk in ["src", "tgt"] {
            let out = rnv(&[
                "analyze",
                "--speaker",
                spk,
                "--segmenter",
                path_str(&self.path("segmenter.json")),
                "--features",
                path_str(&self.path(spk)),
                "--out-dir",
                path_str(&self.path("profiles")),
            ]);
            assert!(out.status.success(), "analyze {spk}: {}", String::from_utf8_lossy(&out.stderr));
        }
    }

    pub fn convert(&self, out_dir: &Path, rhythm: &str, voice: &str) -> Output {
        rnv(&[
            "convert",
            "--rhythm",
            rhythm,
            "--voice",
            voice,
            "--k",
            "8",
            "--seed",
            "7",
            "--segmenter",
            path_str(&self.path("segmenter.json")),
            "--source-profile",
            path_str(&self.path("profiles/src.profile.json")),
            "--target-profile",
            path_str(&self.path("profiles/tgt.profile.json")),
            "--features",
            path_str(&self.path("src")),
            "--target-features",
            path_str(&self.path("tgt")),
            "--out-dir",
            path_str(out_dir),
        ])
    }
}
