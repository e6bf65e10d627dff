//! Speech-type segmentation from a clustered unit codebook.
//!
//! A k-means codebook is fitted over all frames of a corpus, the centroids are
//! grouped into three clusters with Ward linkage, and the groups are labelled
//! Silence / Sonorant / Obstruent from acoustic references computed on the
//! aligned waveforms. At inference, each frame gets a class log-probability
//! (a softmax over centroid distances summed per class) and a segmental DP
//! merges frames into typed segments.

use std::fmt;

use log::debug;
use ndarray::{Array2, ArrayView1, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::SegmenterConfig;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::featureio::{FeatureMatrix, Persist, Waveform};
use crate::Interval;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpeechType {
    Silence,
    Sonorant,
    Obstruent,
}

impl SpeechType {
    pub const ALL: [SpeechType; 3] = [SpeechType::Silence, SpeechType::Sonorant, SpeechType::Obstruent];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn is_speech(self) -> bool {
        self != SpeechType::Silence
    }
}

impl fmt::Display for SpeechType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SpeechType::Silence => "silence",
            SpeechType::Sonorant => "sonorant",
            SpeechType::Obstruent => "obstruent",
        })
    }
}

/// Centroid codebook with a speech type per centroid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SegmenterRepr", into = "SegmenterRepr")]
pub struct SegmenterModel {
    centroids: Array2<f64>,
    class_of: Vec<SpeechType>,
    temperature: f64,
    seed: u64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SegmenterRepr {
    num_centroids: usize,
    dim: usize,
    temperature: f64,
    seed: u64,
    class_of: Vec<SpeechType>,
    centroids: Vec<Vec<f64>>,
}

impl From<SegmenterModel> for SegmenterRepr {
    fn from(m: SegmenterModel) -> Self {
        SegmenterRepr {
            num_centroids: m.num_centroids(),
            dim: m.dim(),
            temperature: m.temperature,
            seed: m.seed,
            centroids: m.centroids.rows().into_iter().map(|r| r.to_vec()).collect(),
            class_of: m.class_of,
        }
    }
}

impl TryFrom<SegmenterRepr> for SegmenterModel {
    type Error = Error;

    fn try_from(r: SegmenterRepr) -> Result<Self> {
        if r.centroids.len() != r.num_centroids {
            return Err(Error::Model(format!(
                "num_centroids is {} but {} centroids are listed",
                r.num_centroids,
                r.centroids.len()
            )));
        }
        if r.centroids.iter().any(|c| c.len() != r.dim) {
            return Err(Error::Model(format!("every centroid must have dim {}", r.dim)));
        }
        let flat: Vec<f64> = r.centroids.into_iter().flatten().collect();
        let centroids = Array2::from_shape_vec((r.num_centroids, r.dim), flat)
            .map_err(|e| Error::Model(e.to_string()))?;
        SegmenterModel::new(centroids, r.class_of, r.temperature, r.seed)
    }
}

impl Persist for SegmenterModel {
    const KIND: &'static str = "segmenter";
}

impl SegmenterModel {
    pub fn new(centroids: Array2<f64>, class_of: Vec<SpeechType>, temperature: f64, seed: u64) -> Result<Self> {
        let k = centroids.nrows();
        if k < 3 {
            return Err(Error::invalid(format!("a segmenter needs at least 3 centroids, got {k}")));
        }
        if class_of.len() != k {
            return Err(Error::invalid(format!("{} class labels for {k} centroids", class_of.len())));
        }
        for class in SpeechType::ALL {
            if !class_of.contains(&class) {
                return Err(Error::DegenerateClustering(format!("no centroid labelled {class}")));
            }
        }
        if !(temperature > 0.0 && temperature.is_finite()) {
            return Err(Error::invalid(format!("temperature must be positive, got {temperature}")));
        }
        if centroids.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("centroids must be finite"));
        }
        Ok(Self { centroids, class_of, temperature, seed })
    }

    /// Model with the default temperature (median pairwise squared centroid distance).
    pub fn with_default_temperature(centroids: Array2<f64>, class_of: Vec<SpeechType>, seed: u64) -> Result<Self> {
        let tau = median_pairwise_sq_distance(centroids.view());
        let tau = if tau > 0.0 { tau } else { 1.0 };
        Self::new(centroids, class_of, tau, seed)
    }

    pub fn num_centroids(&self) -> usize {
        self.centroids.nrows()
    }

    pub fn dim(&self) -> usize {
        self.centroids.ncols()
    }

    pub fn centroids(&self) -> ArrayView2<'_, f64> {
        self.centroids.view()
    }

    pub fn class_of(&self) -> &[SpeechType] {
        &self.class_of
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn with_temperature(mut self, temperature: f64) -> Result<Self> {
        if !(temperature > 0.0 && temperature.is_finite()) {
            return Err(Error::invalid(format!("temperature must be positive, got {temperature}")));
        }
        self.temperature = temperature;
        Ok(self)
    }
}

fn sq_dist<'a>(a: impl IntoIterator<Item = &'a f64>, b: impl IntoIterator<Item = &'a f64>) -> f64 {
    a.into_iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn sq_dist_f32(a: ArrayView1<'_, f32>, b: ArrayView1<'_, f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(&x, &y)| (x as f64 - y) * (x as f64 - y)).sum()
}

pub fn median_pairwise_sq_distance(points: ArrayView2<'_, f64>) -> f64 {
    let n = points.nrows();
    let mut d = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            d.push(sq_dist(points.row(i), points.row(j)));
        }
    }
    if d.is_empty() {
        return 0.0;
    }
    d.sort_by(f64::total_cmp);
    let mid = d.len() / 2;
    if d.len() % 2 == 1 {
        d[mid]
    } else {
        0.5 * (d[mid - 1] + d[mid])
    }
}

/// Row-major frame buffer for clustering.
struct Frames {
    data: Vec<f64>,
    dim: usize,
}

impl Frames {
    fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }
}

pub struct KMeans {
    pub centroids: Array2<f64>,
    pub assignments: Vec<usize>,
    pub inertia: f64,
    pub iterations: usize,
}

fn nearest(row: &[f64], centroids: &Array2<f64>) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centroids.rows().into_iter().enumerate() {
        let d = sq_dist(row, c.iter());
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

fn kmeans_pp_init(frames: &Frames, k: usize, rng: &mut ChaCha8Rng, exec: Execution) -> Array2<f64> {
    let n = frames.len();
    let mut centroids = Array2::zeros((k, frames.dim));
    let first = rng.random_range(0..n);
    centroids.row_mut(0).assign(&ArrayView1::from(frames.row(first)));
    let mut closest = exec.map(n, |i| sq_dist(frames.row(i), centroids.row(0).iter()));
    for c in 1..k {
        let total: f64 = closest.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            closest
                .iter()
                .position(|&d| {
                    acc += d;
                    acc > target
                })
                .unwrap_or(n - 1)
        } else {
            rng.random_range(0..n)
        };
        centroids.row_mut(c).assign(&ArrayView1::from(frames.row(pick)));
        let new_row = centroids.row(c);
        let fresh = exec.map(n, |i| sq_dist(frames.row(i), new_row.iter()));
        for (d, f) in closest.iter_mut().zip(fresh) {
            *d = d.min(f);
        }
    }
    centroids
}

fn kmeans(frames: &Frames, cfg: &SegmenterConfig, exec: Execution) -> KMeans {
    let k = cfg.num_centroids;
    let n = frames.len();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut centroids = kmeans_pp_init(frames, k, &mut rng, exec);
    let mut prev_inertia = f64::INFINITY;
    let mut assignments = vec![0; n];
    let mut inertia = f64::INFINITY;
    let mut iterations = 0;

    for it in 0..cfg.max_iterations {
        iterations = it + 1;
        let nearest_all = exec.map(n, |i| nearest(frames.row(i), &centroids));
        inertia = nearest_all.iter().map(|&(_, d)| d).sum();
        for (a, &(j, _)) in assignments.iter_mut().zip(&nearest_all) {
            *a = j;
        }

        let mut sums = Array2::<f64>::zeros((k, frames.dim));
        let mut counts = vec![0usize; k];
        for (i, &j) in assignments.iter().enumerate() {
            counts[j] += 1;
            for (s, v) in sums.row_mut(j).iter_mut().zip(frames.row(i)) {
                *s += v;
            }
        }
        // empty clusters take the frames worst served by their centroid
        let mut far: Vec<usize> = (0..n).collect();
        far.sort_by(|&a, &b| nearest_all[b].1.total_cmp(&nearest_all[a].1).then(a.cmp(&b)));
        let mut far = far.into_iter();
        for (j, &count) in counts.iter().enumerate() {
            if count > 0 {
                let inv = 1.0 / count as f64;
                sums.row_mut(j).mapv_inplace(|v| v * inv);
            } else if let Some(i) = far.next() {
                sums.row_mut(j).assign(&ArrayView1::from(frames.row(i)));
            }
        }
        centroids = sums;

        let converged = inertia == 0.0 || (prev_inertia - inertia).abs() <= cfg.tolerance * prev_inertia;
        prev_inertia = inertia;
        if converged {
            break;
        }
    }
    debug!("k-means: {k} centroids, {iterations} iterations, inertia {inertia:.6e}");
    KMeans { centroids, assignments, inertia, iterations }
}

/// Ward agglomerative clustering of `points` (unit weights) into `groups` clusters.
/// Group ids are numbered by first appearance in point order.
pub fn ward_groups(points: ArrayView2<'_, f64>, groups: usize) -> Vec<usize> {
    let n = points.nrows();
    let mut members: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    let mut means: Vec<Vec<f64>> = points.rows().into_iter().map(|r| r.to_vec()).collect();
    let mut alive: Vec<bool> = vec![true; n];
    let mut dist = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let d = sq_dist(&means[i], &means[j]);
            dist[i][j] = d;
            dist[j][i] = d;
        }
    }
    let mut remaining = n;
    while remaining > groups {
        let mut best = (usize::MAX, usize::MAX, f64::INFINITY);
        for i in (0..n).filter(|&i| alive[i]) {
            for j in (i + 1..n).filter(|&j| alive[j]) {
                let (ni, nj) = (members[i].len() as f64, members[j].len() as f64);
                let cost = ni * nj / (ni + nj) * dist[i][j];
                if cost < best.2 {
                    best = (i, j, cost);
                }
            }
        }
        let (i, j, _) = best;
        let (ni, nj) = (members[i].len() as f64, members[j].len() as f64);
        let merged: Vec<f64> = means[i]
            .iter()
            .zip(&means[j])
            .map(|(a, b)| (ni * a + nj * b) / (ni + nj))
            .collect();
        let moved = std::mem::take(&mut members[j]);
        members[i].extend(moved);
        means[i] = merged;
        alive[j] = false;
        remaining -= 1;
        for m in (0..n).filter(|&m| alive[m] && m != i) {
            let d = sq_dist(&means[i], &means[m]);
            dist[i][m] = d;
            dist[m][i] = d;
        }
    }
    let mut label = vec![usize::MAX; n];
    let mut next = 0;
    for p in 0..n {
        if label[p] != usize::MAX {
            continue;
        }
        let owner = (0..n).find(|&c| alive[c] && members[c].contains(&p)).unwrap();
        for &m in &members[owner] {
            label[m] = next;
        }
        next += 1;
    }
    label
}

/// Per-frame silence and voicing references derived from the waveform.
#[derive(Debug, Clone, Default)]
pub struct FrameReferences {
    pub silent: Vec<bool>,
    pub voiced: Vec<bool>,
}

fn frame_bounds(t: usize, hop: f64, len: usize) -> (usize, usize) {
    let start = ((t as f64 * hop).round() as usize).min(len);
    let end = (((t + 1) as f64 * hop).round() as usize).min(len);
    (start, end)
}

/// Peak of the normalized autocorrelation over the configured pitch lags.
fn voicing_strength(samples: &[f32], start: usize, hop: usize, min_lag: usize, max_lag: usize) -> f64 {
    let mut best = 0.0f64;
    for lag in min_lag..=max_lag {
        let end = (start + hop).min(samples.len().saturating_sub(lag));
        if end <= start || end - start < hop / 2 {
            break;
        }
        let (mut xy, mut xx, mut yy) = (0.0, 0.0, 0.0);
        for n in start..end {
            let (x, y) = (samples[n] as f64, samples[n + lag] as f64);
            xy += x * y;
            xx += x * x;
            yy += y * y;
        }
        if xx > 0.0 && yy > 0.0 {
            best = best.max(xy / (xx * yy).sqrt());
        }
    }
    best
}

pub fn frame_references(
    wave: &Waveform,
    frames: usize,
    frame_rate: f64,
    cfg: &SegmenterConfig,
    exec: Execution,
) -> FrameReferences {
    let sr = wave.sample_rate as f64;
    let hop = sr / frame_rate;
    let len = wave.len();
    let rms: Vec<f64> = (0..frames)
        .map(|t| {
            let (s, e) = frame_bounds(t, hop, len);
            crate::featureio::audio_rms(&wave.samples[s..e])
        })
        .collect();
    let peak = rms.iter().copied().fold(0.0, f64::max);
    let floor = peak * 10f64.powf(-cfg.silence_rel_db / 20.0);
    let silent: Vec<bool> = rms.iter().map(|&r| r < floor || peak == 0.0).collect();
    let min_lag = (sr / cfg.pitch_max_hz).floor().max(1.0) as usize;
    let max_lag = (sr / cfg.pitch_min_hz).ceil() as usize;
    let hop_samples = hop.round().max(1.0) as usize;
    let voiced = exec.map(frames, |t| {
        let (s, e) = frame_bounds(t, hop, len);
        !silent[t] && e > s && voicing_strength(&wave.samples, s, hop_samples, min_lag, max_lag) > cfg.voicing_threshold
    });
    FrameReferences { silent, voiced }
}

/// Fits the codebook, groups it, and labels the groups. See the module docs.
pub fn fit_segmenter(corpus: &[(FeatureMatrix, Waveform)], cfg: &SegmenterConfig) -> Result<SegmenterModel> {
    fit_segmenter_with(corpus, cfg, Execution::default())
}

pub fn fit_segmenter_with(
    corpus: &[(FeatureMatrix, Waveform)],
    cfg: &SegmenterConfig,
    exec: Execution,
) -> Result<SegmenterModel> {
    let k = cfg.num_centroids;
    if k < 3 {
        return Err(Error::invalid("at least 3 centroids are required"));
    }
    let dim = corpus
        .first()
        .map(|(f, _)| f.dim())
        .ok_or_else(|| Error::InsufficientData("empty corpus".into()))?;
    if let Some((f, _)) = corpus.iter().find(|(f, _)| f.dim() != dim) {
        return Err(Error::DimensionMismatch { expected: dim, found: f.dim() });
    }
    let total: usize = corpus.iter().map(|(f, _)| f.frames()).sum();
    if total < 10 * k {
        return Err(Error::InsufficientData(format!(
            "{total} frames for {k} centroids (need at least {})",
            10 * k
        )));
    }
    let mut data = Vec::with_capacity(total * dim);
    for (f, _) in corpus {
        data.extend(f.data().iter().map(|&v| v as f64));
    }
    let frames = Frames { data, dim };

    let km = kmeans(&frames, cfg, exec);
    let groups = ward_groups(km.centroids.view(), 3);

    let mut size = [0usize; 3];
    let mut silent = [0usize; 3];
    let mut voiced = [0usize; 3];
    let mut offset = 0;
    for (feat, wave) in corpus {
        let refs = frame_references(wave, feat.frames(), feat.frame_rate(), cfg, exec);
        for t in 0..feat.frames() {
            let g = groups[km.assignments[offset + t]];
            size[g] += 1;
            silent[g] += refs.silent[t] as usize;
            voiced[g] += refs.voiced[t] as usize;
        }
        offset += feat.frames();
    }
    if silent.iter().sum::<usize>() == 0 {
        return Err(Error::InsufficientData(
            "no low-energy frames in the corpus: the Silence reference is empty".into(),
        ));
    }
    let frac = |count: &[usize; 3], g: usize| if size[g] == 0 { 0.0 } else { count[g] as f64 / size[g] as f64 };
    let pick_max = |cands: &[usize], count: &[usize; 3]| {
        *cands
            .iter()
            .max_by(|&&a, &&b| frac(count, a).total_cmp(&frac(count, b)).then(b.cmp(&a)))
            .unwrap()
    };
    let silence_group = pick_max(&[0, 1, 2], &silent);
    let rest: Vec<usize> = (0..3).filter(|&g| g != silence_group).collect();
    if rest.iter().all(|&g| voiced[g] == 0) {
        return Err(Error::InsufficientData(
            "no voiced frames outside the Silence group: the Sonorant reference is empty".into(),
        ));
    }
    let sonorant_group = pick_max(&rest, &voiced);
    let mut label = [SpeechType::Obstruent; 3];
    label[silence_group] = SpeechType::Silence;
    label[sonorant_group] = SpeechType::Sonorant;
    debug!(
        "segmenter groups: sizes {size:?}, silent {silent:?}, voiced {voiced:?}, labels {label:?}"
    );

    let class_of = groups.iter().map(|&g| label[g]).collect();
    SegmenterModel::with_default_temperature(km.centroids, class_of, cfg.seed)
}

fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    max + values.map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// `T x 3` class log-probabilities, columns ordered as [`SpeechType::ALL`].
pub fn frame_log_probs(feat: &FeatureMatrix, model: &SegmenterModel) -> Result<Array2<f64>> {
    frame_log_probs_with(feat, model, Execution::default())
}

pub fn frame_log_probs_with(feat: &FeatureMatrix, model: &SegmenterModel, exec: Execution) -> Result<Array2<f64>> {
    if feat.dim() != model.dim() {
        return Err(Error::DimensionMismatch { expected: model.dim(), found: feat.dim() });
    }
    let tau = model.temperature;
    let rows = exec.map(feat.frames(), |t| {
        let x = feat.row(t);
        let logits: Vec<f64> = model
            .centroids
            .rows()
            .into_iter()
            .map(|c| -sq_dist_f32(x, c) / tau)
            .collect();
        let total = log_sum_exp(logits.iter().copied());
        SpeechType::ALL.map(|class| {
            let in_class = logits
                .iter()
                .zip(&model.class_of)
                .filter(|(_, &c)| c == class)
                .map(|(&l, _)| l);
            log_sum_exp(in_class) - total
        })
    });
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    Ok(Array2::from_shape_vec((feat.frames(), 3), flat).expect("shape matches"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypedSegment {
    pub start_frame: usize,
    pub end_frame: usize,
    pub class: SpeechType,
    pub mean_logp: f64,
}

impl TypedSegment {
    pub fn len(&self) -> usize {
        self.end_frame - self.start_frame
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Contiguous typed partition of `[0, T)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypedSegments {
    pub segments: Vec<TypedSegment>,
}

impl TypedSegments {
    pub fn total_frames(&self) -> usize {
        self.segments.last().map_or(0, |s| s.end_frame)
    }

    pub fn count(&self, class: SpeechType) -> usize {
        self.segments.iter().filter(|s| s.class == class).count()
    }

    /// Objective value of this partition under penalty `gamma`.
    pub fn cost(&self, logp: ArrayView2<'_, f64>, gamma: f64) -> f64 {
        self.segments
            .iter()
            .map(|s| gamma - (s.start_frame..s.end_frame).map(|t| logp[[t, s.class.index()]]).sum::<f64>())
            .sum()
    }
}

/// Exact segmental DP: minimizes `sum over segments of (gamma + sum of -log p)`
/// where each segment takes its best class. Ties go to fewer segments, then to
/// the earliest last boundary. Adjacent same-class segments are merged.
pub fn dp_segment(logp: ArrayView2<'_, f64>, gamma: f64) -> Result<TypedSegments> {
    if logp.ncols() != 3 {
        return Err(Error::DimensionMismatch { expected: 3, found: logp.ncols() });
    }
    if !(gamma >= 0.0) {
        return Err(Error::invalid(format!("gamma must be >= 0, got {gamma}")));
    }
    if logp.iter().any(|v| v.is_nan() || *v == f64::INFINITY) {
        return Err(Error::invalid("log-probabilities must not be NaN or +inf"));
    }
    let t_len = logp.nrows();
    if t_len == 0 {
        return Ok(TypedSegments { segments: Vec::new() });
    }
    // prefix[c][t] = sum_{s < t} -logp[s, c]
    let mut prefix = vec![vec![0.0; t_len + 1]; 3];
    for (c, col) in prefix.iter_mut().enumerate() {
        for t in 0..t_len {
            col[t + 1] = col[t] - logp[[t, c]];
        }
    }
    let seg_cost = |i: usize, j: usize| -> (f64, usize) {
        let mut best = (f64::INFINITY, 0);
        for (c, col) in prefix.iter().enumerate() {
            let v = col[j] - col[i];
            if v < best.0 {
                best = (v, c);
            }
        }
        best
    };

    let mut cost = vec![f64::INFINITY; t_len + 1];
    let mut count = vec![usize::MAX; t_len + 1];
    let mut back = vec![(0usize, 0usize); t_len + 1];
    cost[0] = 0.0;
    count[0] = 0;
    for j in 1..=t_len {
        for i in 0..j {
            let (seg, class) = seg_cost(i, j);
            let cand = cost[i] + gamma + seg;
            let n = count[i] + 1;
            let eps = 1e-9 * cost[j].abs().max(1.0);
            let better = cand < cost[j] - eps || ((cand - cost[j]).abs() <= eps && n < count[j]);
            if better {
                cost[j] = cand;
                count[j] = n;
                back[j] = (i, class);
            }
        }
    }

    let mut raw = Vec::new();
    let mut j = t_len;
    while j > 0 {
        let (i, class) = back[j];
        raw.push((i, j, SpeechType::ALL[class]));
        j = i;
    }
    raw.reverse();

    let mut merged: Vec<(usize, usize, SpeechType)> = Vec::with_capacity(raw.len());
    for seg in raw {
        match merged.last_mut() {
            Some(last) if last.2 == seg.2 => last.1 = seg.1,
            _ => merged.push(seg),
        }
    }
    let segments = merged
        .into_iter()
        .map(|(start, end, class)| {
            let total: f64 = (start..end).map(|t| logp[[t, class.index()]]).sum();
            TypedSegment { start_frame: start, end_frame: end, class, mean_logp: total / (end - start) as f64 }
        })
        .collect();
    Ok(TypedSegments { segments })
}

/// Class log-probabilities followed by DP segmentation.
pub fn segment_features(feat: &FeatureMatrix, model: &SegmenterModel, gamma: f64) -> Result<TypedSegments> {
    let logp = frame_log_probs(feat, model)?;
    dp_segment(logp.view(), gamma)
}

/// Union of Sonorant and Obstruent segments, adjacent intervals coalesced.
pub fn speech_regions(seg: &TypedSegments) -> Vec<Interval> {
    let mut out: Vec<Interval> = Vec::new();
    for s in seg.segments.iter().filter(|s| s.class.is_speech()) {
        match out.last_mut() {
            Some(last) if last.1 == s.start_frame => last.1 = s.end_frame,
            _ => out.push((s.start_frame, s.end_frame)),
        }
    }
    out
}
