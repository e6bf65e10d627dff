//! Rhythm conversion by time-stretching feature sequences, and kNN voice
//! conversion against a target speaker's unit database.

use std::fmt;
use std::str::FromStr;

use log::{info, warn};
use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::clustering::{SegmenterModel, TypedSegments};
use crate::config::{Config, ConversionConfig, Interpolation, Weighting};
use crate::envelope::SyllableSegmentation;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::featureio::{FeatureMatrix, Waveform};
use crate::rhythm::{analyze_utterance, map_duration, GammaModel, RhythmProfile};

const WEIGHT_EPSILON: f64 = 1e-8;

/// Resamples `feat` along time to `max(1, round(T * factor))` frames.
pub fn time_stretch(feat: &FeatureMatrix, factor: f64, interpolation: Interpolation) -> Result<FeatureMatrix> {
    if !(factor > 0.0 && factor.is_finite()) {
        return Err(Error::invalid(format!("stretch factor must be positive, got {factor}")));
    }
    let t = feat.frames();
    if t == 0 {
        return Err(Error::invalid("cannot stretch an empty feature matrix"));
    }
    let out_len = ((t as f64 * factor).round() as usize).max(1);
    if out_len == t {
        return Ok(feat.clone());
    }
    let src = feat.data();
    let mut out = Array2::<f32>::zeros((out_len, feat.dim()));
    for (i, mut row) in out.rows_mut().into_iter().enumerate() {
        if out_len == 1 {
            row.assign(&src.row(0));
            continue;
        }
        let pos = (i * (t - 1)) as f64 / (out_len - 1) as f64;
        let lo = pos.floor() as usize;
        let frac = pos - lo as f64;
        match interpolation {
            Interpolation::Nearest => row.assign(&src.row(pos.round() as usize)),
            Interpolation::Linear if frac == 0.0 || lo + 1 >= t => row.assign(&src.row(lo.min(t - 1))),
            Interpolation::Linear => {
                let (a, b) = (src.row(lo), src.row(lo + 1));
                for ((dst, &x), &y) in row.iter_mut().zip(a.iter()).zip(b.iter()) {
                    *dst = (x as f64 + (y as f64 - x as f64) * frac) as f32;
                }
            }
        }
    }
    FeatureMatrix::new(out, feat.frame_rate())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RhythmMode {
    SyllableGlobal,
    SyllableFine,
    UrhythmicGlobal,
    UrhythmicFine,
}

impl RhythmMode {
    pub const ALL: [RhythmMode; 4] = [
        RhythmMode::SyllableGlobal,
        RhythmMode::SyllableFine,
        RhythmMode::UrhythmicGlobal,
        RhythmMode::UrhythmicFine,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RhythmMode::SyllableGlobal => "syllable_global",
            RhythmMode::SyllableFine => "syllable_fine",
            RhythmMode::UrhythmicGlobal => "urhythmic_global",
            RhythmMode::UrhythmicFine => "urhythmic_fine",
        }
    }
}

impl fmt::Display for RhythmMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RhythmMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        RhythmMode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::invalid(format!("unknown rhythm mode '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanEntry {
    pub start_frame: usize,
    pub end_frame: usize,
    /// Output duration over input duration.
    pub factor: f64,
}

/// Ordered stretch factors partitioning `[0, T)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StretchPlan {
    pub mode: RhythmMode,
    pub entries: Vec<PlanEntry>,
}

impl StretchPlan {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plan serializes")
    }
}

fn require_rate(rate: f64, who: &str) -> Result<f64> {
    if rate > 0.0 && rate.is_finite() {
        Ok(rate)
    } else {
        Err(Error::MissingModel(format!("{who} speaking rate is {rate}")))
    }
}

fn require_gamma(g: Option<&GammaModel>, what: impl fmt::Display) -> Result<&GammaModel> {
    g.ok_or_else(|| Error::MissingModel(format!("no {what} duration model")))
}

fn plan_entries(
    feat: &FeatureMatrix,
    syllables: &SyllableSegmentation,
    typed: &TypedSegments,
    src: &RhythmProfile,
    tgt: &RhythmProfile,
    mode: RhythmMode,
    cfg: &Config,
) -> Result<Vec<PlanEntry>> {
    let t = feat.frames();
    let rate = feat.frame_rate();
    let eps = cfg.rhythm.cdf_epsilon;
    let entry = |start, end, factor| PlanEntry { start_frame: start, end_frame: end, factor };
    let mapped = |len: usize, a: &GammaModel, b: &GammaModel| {
        let d = len as f64 / rate;
        map_duration(d, a, b, eps) / d
    };
    let entries = match mode {
        RhythmMode::SyllableGlobal => {
            let f = require_rate(src.syllable_rate, "source syllable")? / require_rate(tgt.syllable_rate, "target syllable")?;
            vec![entry(0, t, f)]
        }
        RhythmMode::UrhythmicGlobal => {
            let f = require_rate(src.sonorant_rate, "source sonorant")? / require_rate(tgt.sonorant_rate, "target sonorant")?;
            vec![entry(0, t, f)]
        }
        RhythmMode::SyllableFine => {
            let a = require_gamma(src.syllable_gamma.as_ref(), "source syllable")?;
            let b = require_gamma(tgt.syllable_gamma.as_ref(), "target syllable")?;
            let mut out = Vec::new();
            let mut cursor = 0;
            for &(s, e) in &syllables.segments {
                if e > t {
                    return Err(Error::invalid(format!("syllable [{s}, {e}) beyond {t} frames")));
                }
                if s > cursor {
                    out.push(entry(cursor, s, 1.0));
                }
                out.push(entry(s, e, mapped(e - s, a, b)));
                cursor = e;
            }
            if cursor < t {
                out.push(entry(cursor, t, 1.0));
            }
            out
        }
        RhythmMode::UrhythmicFine => {
            if typed.total_frames() != t {
                return Err(Error::invalid(format!(
                    "typed segments cover {} frames, features have {t}",
                    typed.total_frames()
                )));
            }
            typed
                .segments
                .iter()
                .map(|s| {
                    let a = require_gamma(src.per_type_gamma.get(&s.class), format_args!("source {}", s.class))?;
                    let b = require_gamma(tgt.per_type_gamma.get(&s.class), format_args!("target {}", s.class))?;
                    Ok(entry(s.start_frame, s.end_frame, mapped(s.len(), a, b)))
                })
                .collect::<Result<_>>()?
        }
    };
    Ok(entries)
}

/// Builds the stretch plan for `mode` and applies it entry by entry.
pub fn rhythm_convert(
    feat: &FeatureMatrix,
    syllables: &SyllableSegmentation,
    typed: &TypedSegments,
    src: &RhythmProfile,
    tgt: &RhythmProfile,
    mode: RhythmMode,
    cfg: &Config,
) -> Result<(FeatureMatrix, StretchPlan)> {
    if feat.is_empty() {
        return Err(Error::invalid("cannot convert an empty feature matrix"));
    }
    let ConversionConfig { factor_min, factor_max, interpolation, .. } = cfg.conversion;
    let mut entries = plan_entries(feat, syllables, typed, src, tgt, mode, cfg)?;
    for e in &mut entries {
        e.factor = e.factor.clamp(factor_min, factor_max);
    }
    let pieces = entries
        .iter()
        .map(|e| time_stretch(&feat.slice_frames(e.start_frame, e.end_frame), e.factor, interpolation))
        .collect::<Result<Vec<_>>>()?;
    let out = FeatureMatrix::concat(&pieces, feat.dim(), feat.frame_rate())?;
    Ok((out, StretchPlan { mode, entries }))
}

/// Target-speaker frames with cached norms for cosine matching.
#[derive(Debug, Clone)]
pub struct UnitDatabase {
    units: Array2<f32>,
    norms: Vec<f64>,
    excluded: usize,
}

fn norm(row: ArrayView1<'_, f32>) -> f64 {
    row.iter().map(|&v| (v as f64) * (v as f64)).sum::<f64>().sqrt()
}

impl UnitDatabase {
    pub fn len(&self) -> usize {
        self.units.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.units.ncols()
    }

    /// Zero-norm rows dropped at construction.
    pub fn excluded(&self) -> usize {
        self.excluded
    }

    pub fn units(&self) -> &Array2<f32> {
        &self.units
    }
}

/// Concatenates target matrices into a unit database. Zero-norm rows are
/// dropped because cosine similarity is undefined for them.
pub fn knn_index(target_feats: &[FeatureMatrix], k: usize) -> Result<UnitDatabase> {
    let Some(first) = target_feats.first() else {
        return Err(Error::InsufficientData("empty target set".into()));
    };
    let dim = first.dim();
    let all = FeatureMatrix::concat(target_feats, dim, first.frame_rate())?;
    let keep: Vec<usize> = (0..all.frames()).filter(|&i| norm(all.row(i)) > 0.0).collect();
    let excluded = all.frames() - keep.len();
    if excluded > 0 {
        warn!("unit database: excluded {excluded} zero-norm frame(s)");
    }
    let units = all.data().select(ndarray::Axis(0), &keep);
    let norms = units.rows().into_iter().map(norm).collect();
    let db = UnitDatabase { units, norms, excluded };
    if db.len() < k {
        return Err(Error::InsufficientData(format!("{} target units for k = {k}", db.len())));
    }
    Ok(db)
}

/// The `k` most cosine-similar database rows for every source frame, as
/// `(index, similarity)` sorted by decreasing similarity then index.
pub fn knn_neighbors(source: &FeatureMatrix, db: &UnitDatabase, k: usize, exec: Execution) -> Result<Vec<Vec<(usize, f64)>>> {
    if source.dim() != db.dim() {
        return Err(Error::DimensionMismatch { expected: db.dim(), found: source.dim() });
    }
    if k == 0 || k > db.len() {
        return Err(Error::InsufficientData(format!("k = {k} with {} target units", db.len())));
    }
    let order = |a: &(usize, f64), b: &(usize, f64)| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0));
    Ok(exec.map(source.frames(), |t| {
        let x = source.row(t);
        let nx = norm(x);
        let mut sims: Vec<(usize, f64)> = db
            .units
            .rows()
            .into_iter()
            .zip(&db.norms)
            .enumerate()
            .map(|(j, (u, &nu))| {
                if nx == 0.0 {
                    return (j, 0.0);
                }
                let dot: f64 = x.iter().zip(u.iter()).map(|(&a, &b)| a as f64 * b as f64).sum();
                (j, dot / (nx * nu))
            })
            .collect();
        if k < sims.len() {
            sims.select_nth_unstable_by(k - 1, order);
            sims.truncate(k);
        }
        sims.sort_by(order);
        sims
    }))
}

/// Replaces each source frame by a weighted average of its `k` nearest units.
pub fn knn_convert(source: &FeatureMatrix, db: &UnitDatabase, k: usize, weighting: Weighting) -> Result<FeatureMatrix> {
    knn_convert_with(source, db, k, weighting, Execution::default())
}

pub fn knn_convert_with(
    source: &FeatureMatrix,
    db: &UnitDatabase,
    k: usize,
    weighting: Weighting,
    exec: Execution,
) -> Result<FeatureMatrix> {
    let neighbours = knn_neighbors(source, db, k, exec)?;
    let dim = db.dim();
    let rows = exec.map_slice(&neighbours, |nb| {
        let weights: Vec<f64> = match weighting {
            Weighting::Uniform => vec![1.0 / nb.len() as f64; nb.len()],
            Weighting::Similarity => {
                let min = nb.iter().map(|n| n.1).fold(f64::INFINITY, f64::min);
                let raw: Vec<f64> = nb.iter().map(|n| n.1 - min + WEIGHT_EPSILON).collect();
                let total: f64 = raw.iter().sum();
                raw.into_iter().map(|w| w / total).collect()
            }
        };
        let mut acc = vec![0.0f64; dim];
        for (&(j, _), w) in nb.iter().zip(weights) {
            for (a, &u) in acc.iter_mut().zip(db.units.row(j).iter()) {
                *a += w * u as f64;
            }
        }
        acc.into_iter().map(|v| v as f32).collect::<Vec<f32>>()
    });
    let flat: Vec<f32> = rows.into_iter().flatten().collect();
    let data = Array2::from_shape_vec((source.frames(), dim), flat).expect("shape matches");
    FeatureMatrix::new(data, source.frame_rate())
}

#[derive(Debug, Clone, Copy, Default)]
pub struct PipelineOptions<'a> {
    pub rhythm: Option<RhythmMode>,
    pub voice: Option<&'a UnitDatabase>,
}

#[derive(Debug, Clone)]
pub struct Converted {
    pub features: FeatureMatrix,
    pub plan: Option<StretchPlan>,
}

/// Rhythm conversion (if requested) followed by voice conversion (if requested).
#[allow(clippy::too_many_arguments)]
pub fn convert_pipeline(
    feat: &FeatureMatrix,
    wave: &Waveform,
    segmenter: &SegmenterModel,
    src: &RhythmProfile,
    tgt: &RhythmProfile,
    options: PipelineOptions<'_>,
    cfg: &Config,
) -> Result<Converted> {
    let mut features = feat.clone();
    let mut plan = None;
    if let Some(mode) = options.rhythm {
        let analysis = analyze_utterance(feat, wave, segmenter, cfg)?;
        let (stretched, p) = rhythm_convert(feat, &analysis.syllables, &analysis.typed, src, tgt, mode, cfg)?;
        info!(
            "rhythm {mode}: {} plan entries, {} -> {} frames",
            p.entries.len(),
            feat.frames(),
            stretched.frames()
        );
        features = stretched;
        plan = Some(p);
    }
    if let Some(db) = options.voice {
        features = knn_convert(&features, db, cfg.conversion.k, cfg.conversion.weighting)?;
    }
    Ok(Converted { features, plan })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clustering::{SpeechType, TypedSegment};
    use crate::envelope::{syllable_segments, ExtremaSet, SegmentMode};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn random_matrix(seed: u64, rows: usize, cols: usize) -> FeatureMatrix {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let data = Array2::from_shape_fn((rows, cols), |_| rng.random_range(-1.0f32..1.0));
        FeatureMatrix::new(data, 50.0).unwrap()
    }

    #[test]
    fn stretch_identity_and_lengths() {
        let m = random_matrix(1, 100, 4);
        assert_eq!(time_stretch(&m, 1.0, Interpolation::Linear).unwrap(), m);
        assert_eq!(time_stretch(&m, 0.5, Interpolation::Linear).unwrap().frames(), 50);
        assert_eq!(time_stretch(&m, 1e-6, Interpolation::Linear).unwrap().frames(), 1);
        assert!(time_stretch(&m, 0.0, Interpolation::Linear).is_err());
        assert!(time_stretch(&FeatureMatrix::empty(4, 50.0).unwrap(), 2.0, Interpolation::Linear).is_err());
    }

    #[test]
    fn stretch_keeps_constants() {
        let m = FeatureMatrix::new(Array2::from_elem((40, 4), 0.3f32), 50.0).unwrap();
        let out = time_stretch(&m, 1.7, Interpolation::Linear).unwrap();
        assert_eq!(out.data().dim(), (68, 4));
        assert!(out.data().iter().all(|&v| v == 0.3));
    }

    #[test]
    fn stretch_interpolates_linearly() {
        let m = FeatureMatrix::from_rows(&[vec![0.0], vec![1.0], vec![2.0]], 50.0).unwrap();
        let out = time_stretch(&m, 5.0 / 3.0, Interpolation::Linear).unwrap();
        let v: Vec<f32> = out.data().iter().copied().collect();
        assert_eq!(v, vec![0.0, 0.5, 1.0, 1.5, 2.0]);
        let near = time_stretch(&m, 5.0 / 3.0, Interpolation::Nearest).unwrap();
        let v: Vec<f32> = near.data().iter().copied().collect();
        assert_eq!(v, vec![0.0, 1.0, 1.0, 2.0, 2.0]);
    }

    fn profile(syl: f64, son: f64, syl_gamma: Option<GammaModel>) -> RhythmProfile {
        let mut p = RhythmProfile::from_rates("x", syl, son, 50.0);
        p.syllable_gamma = syl_gamma;
        p
    }

    fn no_typed(t: usize) -> TypedSegments {
        TypedSegments {
            segments: vec![TypedSegment { start_frame: 0, end_frame: t, class: SpeechType::Sonorant, mean_logp: 0.0 }],
        }
    }

    fn syllables(peaks: Vec<usize>, t: usize) -> SyllableSegmentation {
        syllable_segments(&ExtremaSet { peaks, valleys: vec![] }, SegmentMode::PeakToPeak, t, 50.0).unwrap()
    }

    #[test]
    fn global_rate_ratio() {
        let m = random_matrix(2, 201, 3);
        let cfg = Config::default();
        let (out, plan) = rhythm_convert(
            &m,
            &syllables(vec![], 201),
            &no_typed(201),
            &profile(2.0, 1.0, None),
            &profile(4.0, 1.0, None),
            RhythmMode::SyllableGlobal,
            &cfg,
        )
        .unwrap();
        assert_eq!(plan.entries, vec![PlanEntry { start_frame: 0, end_frame: 201, factor: 0.5 }]);
        assert!((out.frames() as i64 - 100).abs() <= 1);
    }

    #[test]
    fn factors_are_clamped() {
        let m = random_matrix(3, 100, 3);
        let (out, plan) = rhythm_convert(
            &m,
            &syllables(vec![], 100),
            &no_typed(100),
            &profile(1.0, 1.0, None),
            &profile(40.0, 1.0, None),
            RhythmMode::SyllableGlobal,
            &Config::default(),
        )
        .unwrap();
        assert_eq!(plan.entries[0].factor, 0.25);
        assert_eq!(out.frames(), 25);
    }

    #[test]
    fn syllable_fine_equal_shapes_halves_syllables() {
        let m = random_matrix(4, 100, 3);
        let src = profile(3.0, 3.0, Some(GammaModel::new(3.0, 0.25).unwrap()));
        let tgt = profile(3.0, 3.0, Some(GammaModel::new(3.0, 0.125).unwrap()));
        let syl = syllables(vec![10, 30, 50, 80], 100);
        let (out, plan) = rhythm_convert(&m, &syl, &no_typed(100), &src, &tgt, RhythmMode::SyllableFine, &Config::default()).unwrap();
        let f: Vec<f64> = plan.entries.iter().map(|e| e.factor).collect();
        assert_eq!(plan.entries.len(), 5);
        assert_eq!((f[0], f[4]), (1.0, 1.0));
        for &x in &f[1..4] {
            assert!((x - 0.5).abs() < 1e-9);
        }
        assert_eq!(out.frames(), 10 + 10 + 10 + 15 + 20);
    }

    #[test]
    fn fine_modes_need_models() {
        let m = random_matrix(5, 50, 2);
        let p = profile(3.0, 3.0, None);
        let e = rhythm_convert(&m, &syllables(vec![5, 20], 50), &no_typed(50), &p, &p, RhythmMode::SyllableFine, &Config::default());
        assert!(matches!(e, Err(Error::MissingModel(_))));
        let e = rhythm_convert(&m, &syllables(vec![], 50), &no_typed(50), &p, &p, RhythmMode::UrhythmicFine, &Config::default());
        assert!(matches!(e, Err(Error::MissingModel(_))));
    }

    #[test]
    fn urhythmic_fine_identity_profiles() {
        let m = random_matrix(6, 60, 2);
        let mut p = profile(3.0, 3.0, None);
        for c in SpeechType::ALL {
            p.per_type_gamma.insert(c, GammaModel::new(2.5, 0.08).unwrap());
        }
        let typed = TypedSegments {
            segments: vec![
                TypedSegment { start_frame: 0, end_frame: 12, class: SpeechType::Silence, mean_logp: 0.0 },
                TypedSegment { start_frame: 12, end_frame: 40, class: SpeechType::Sonorant, mean_logp: 0.0 },
                TypedSegment { start_frame: 40, end_frame: 60, class: SpeechType::Obstruent, mean_logp: 0.0 },
            ],
        };
        let (out, plan) = rhythm_convert(&m, &syllables(vec![], 60), &typed, &p, &p, RhythmMode::UrhythmicFine, &Config::default()).unwrap();
        assert_eq!(out, m);
        assert!(plan.entries.iter().all(|e| (e.factor - 1.0).abs() < 1e-6));
    }

    #[test]
    fn index_concatenates_and_drops_zero_rows() {
        let a = random_matrix(7, 100, 8);
        let b = random_matrix(8, 50, 8);
        assert_eq!(knn_index(&[a.clone(), b], 8).unwrap().len(), 150);

        let mut rows: Vec<Vec<f32>> = a.data().rows().into_iter().take(10).map(|r| r.to_vec()).collect();
        rows[3] = vec![0.0; 8];
        let db = knn_index(&[FeatureMatrix::from_rows(&rows, 50.0).unwrap()], 8).unwrap();
        assert_eq!((db.len(), db.excluded()), (9, 1));

        let small = random_matrix(9, 7, 8);
        assert!(knn_index(&[small], 8).is_err());
        assert!(knn_index(&[], 1).is_err());
    }

    #[test]
    fn self_match_k1_is_identity() {
        let src = random_matrix(10, 64, 16);
        let db = knn_index(std::slice::from_ref(&src), 1).unwrap();
        assert_eq!(knn_convert(&src, &db, 1, Weighting::Similarity).unwrap(), src);
    }

    #[test]
    fn identical_rows_give_that_row() {
        let row = vec![0.2f32, -0.4, 0.9];
        let db = knn_index(&[FeatureMatrix::from_rows(&vec![row.clone(); 20], 50.0).unwrap()], 8).unwrap();
        let src = random_matrix(11, 5, 3);
        for weighting in [Weighting::Similarity, Weighting::Uniform] {
            let out = knn_convert(&src, &db, 8, weighting).unwrap();
            for r in out.data().rows() {
                for (a, b) in r.iter().zip(&row) {
                    assert!((a - b).abs() < 1e-6);
                }
            }
        }
    }

    #[test]
    fn dimension_mismatch() {
        let db = knn_index(&[random_matrix(12, 20, 4)], 1).unwrap();
        assert!(matches!(
            knn_convert(&random_matrix(13, 3, 5), &db, 1, Weighting::Similarity),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    proptest! {
        #[test]
        fn selection_invariant_to_row_scaling(seed in any::<u64>(), scale in 0.01f32..100.0) {
            let src = random_matrix(seed, 10, 6);
            let base = random_matrix(seed ^ 0xabc, 40, 6);
            let scaled = FeatureMatrix::new(base.data().mapv(|v| v * scale), 50.0).unwrap();
            let a = knn_neighbors(&src, &knn_index(&[base], 4).unwrap(), 4, Execution::Sequential).unwrap();
            let b = knn_neighbors(&src, &knn_index(&[scaled], 4).unwrap(), 4, Execution::Sequential).unwrap();
            let ia: Vec<Vec<usize>> = a.iter().map(|n| n.iter().map(|x| x.0).collect()).collect();
            let ib: Vec<Vec<usize>> = b.iter().map(|n| n.iter().map(|x| x.0).collect()).collect();
            prop_assert_eq!(ia, ib);
        }

        #[test]
        fn output_in_convex_hull(seed in any::<u64>()) {
            let src = random_matrix(seed, 6, 5);
            let db = knn_index(&[random_matrix(seed.wrapping_add(1), 30, 5)], 8).unwrap();
            let nb = knn_neighbors(&src, &db, 8, Execution::Sequential).unwrap();
            let out = knn_convert(&src, &db, 8, Weighting::Similarity).unwrap();
            for (t, n) in nb.iter().enumerate() {
                // per-dimension bounds of the selected neighbours
                for d in 0..5 {
                    let vals: Vec<f32> = n.iter().map(|&(j, _)| db.units()[[j, d]]).collect();
                    let lo = vals.iter().copied().fold(f32::INFINITY, f32::min);
                    let hi = vals.iter().copied().fold(f32::NEG_INFINITY, f32::max);
                    let v = out.data()[[t, d]];
                    prop_assert!(v >= lo - 1e-6 && v <= hi + 1e-6);
                }
            }
        }

        #[test]
        fn plan_lengths_add_up(seed in any::<u64>(), peaks in prop::collection::btree_set(1usize..99, 2..8)) {
            let m = random_matrix(seed, 100, 2);
            let src = profile(3.0, 3.0, Some(GammaModel::new(2.0, 0.2).unwrap()));
            let tgt = profile(3.0, 3.0, Some(GammaModel::new(4.0, 0.05).unwrap()));
            let syl = syllables(peaks.into_iter().collect(), 100);
            let (out, plan) = rhythm_convert(&m, &syl, &no_typed(100), &src, &tgt, RhythmMode::SyllableFine, &Config::default()).unwrap();
            let mut cursor = 0;
            let mut expected = 0usize;
            for e in &plan.entries {
                prop_assert_eq!(e.start_frame, cursor);
                cursor = e.end_frame;
                expected += (((e.end_frame - e.start_frame) as f64 * e.factor).round() as usize).max(1);
            }
            prop_assert_eq!(cursor, 100);
            prop_assert!((out.frames() as i64 - expected as i64).unsigned_abs() as usize <= plan.entries.len());
        }
    }
}
