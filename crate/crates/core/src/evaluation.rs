//! Word error rate scoring and per-speaker rhythm reports.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rhythm::RhythmProfile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Normalization {
    pub casefold: bool,
    pub strip_punct: bool,
}

impl Default for Normalization {
    fn default() -> Self {
        Self { casefold: true, strip_punct: true }
    }
}

pub fn normalize_tokens(text: &str, norm: Normalization) -> Vec<String> {
    text.split_whitespace()
        .map(|tok| {
            let tok: String = if norm.strip_punct {
                tok.chars().filter(|c| !c.is_ascii_punctuation() || *c == '\'').collect()
            } else {
                tok.to_string()
            };
            if norm.casefold { tok.to_lowercase() } else { tok }
        })
        .filter(|t| !t.is_empty())
        .collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EditCounts {
    pub substitutions: usize,
    pub insertions: usize,
    pub deletions: usize,
    pub ref_len: usize,
}

impl EditCounts {
    pub fn errors(&self) -> usize {
        self.substitutions + self.insertions + self.deletions
    }

    pub fn wer(&self) -> f64 {
        100.0 * self.errors() as f64 / self.ref_len as f64
    }
}

/// Levenshtein alignment counts with unit costs. Among minimum-cost
/// alignments the one with the most substitutions is taken, which makes the
/// counts symmetric: swapping ref and hyp exchanges insertions and deletions.
pub fn align_counts<T: PartialEq>(reference: &[T], hypothesis: &[T]) -> EditCounts {
    let (n, m) = (reference.len(), hypothesis.len());
    // (cost, substitutions) per cell, one row at a time
    let mut prev: Vec<(usize, usize)> = (0..=m).map(|j| (j, 0)).collect();
    let mut cur = vec![(0, 0); m + 1];
    let better = |a: (usize, usize), b: (usize, usize)| a.0 < b.0 || (a.0 == b.0 && a.1 > b.1);
    for i in 1..=n {
        cur[0] = (i, 0);
        for j in 1..=m {
            let same = reference[i - 1] == hypothesis[j - 1];
            let mut best = if same { prev[j - 1] } else { (prev[j - 1].0 + 1, prev[j - 1].1 + 1) };
            let del = (prev[j].0 + 1, prev[j].1);
            let ins = (cur[j - 1].0 + 1, cur[j - 1].1);
            for cand in [del, ins] {
                if better(cand, best) {
                    best = cand;
                }
            }
            cur[j] = best;
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    let (cost, subs) = prev[m];
    // deletions - insertions = n - m and deletions + insertions = cost - subs
    let indel = (cost - subs) as i64;
    let deletions = ((indel + n as i64 - m as i64) / 2) as usize;
    let indel = indel as usize;
    EditCounts { substitutions: subs, insertions: indel - deletions, deletions, ref_len: n }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WerReport {
    pub substitutions: usize,
    pub insertions: usize,
    pub deletions: usize,
    pub ref_words: usize,
    /// Percent, pooled over utterances.
    pub wer: f64,
    pub per_utterance: Vec<EditCounts>,
}

impl WerReport {
    pub fn to_tsv(&self, ids: Option<&[String]>) -> String {
        let mut out = String::from("id\tref_words\tsubstitutions\tinsertions\tdeletions\twer\n");
        for (i, c) in self.per_utterance.iter().enumerate() {
            let id = ids.and_then(|ids| ids.get(i)).cloned().unwrap_or_else(|| i.to_string());
            writeln!(out, "{id}\t{}\t{}\t{}\t{}\t{:.2}", c.ref_len, c.substitutions, c.insertions, c.deletions, c.wer()).unwrap();
        }
        writeln!(
            out,
            "TOTAL\t{}\t{}\t{}\t{}\t{:.2}",
            self.ref_words, self.substitutions, self.insertions, self.deletions, self.wer
        )
        .unwrap();
        out
    }
}

/// Corpus-level WER over paired reference / hypothesis texts.
pub fn wer<S: AsRef<str>>(refs: &[S], hyps: &[S], norm: Normalization) -> Result<WerReport> {
    if refs.len() != hyps.len() {
        return Err(Error::invalid(format!("{} references but {} hypotheses", refs.len(), hyps.len())));
    }
    if refs.is_empty() {
        return Err(Error::invalid("no utterances to score"));
    }
    let mut per_utterance = Vec::with_capacity(refs.len());
    for (i, (r, h)) in refs.iter().zip(hyps).enumerate() {
        let r = normalize_tokens(r.as_ref(), norm);
        if r.is_empty() {
            return Err(Error::invalid(format!("reference {i} is empty after normalization")));
        }
        let h = normalize_tokens(h.as_ref(), norm);
        per_utterance.push(align_counts(&r, &h));
    }
    let sum = |f: fn(&EditCounts) -> usize| per_utterance.iter().map(f).sum::<usize>();
    let (s, ins, d, n) = (sum(|c| c.substitutions), sum(|c| c.insertions), sum(|c| c.deletions), sum(|c| c.ref_len));
    Ok(WerReport {
        substitutions: s,
        insertions: ins,
        deletions: d,
        ref_words: n,
        wer: 100.0 * (s + ins + d) as f64 / n as f64,
        per_utterance,
    })
}

pub const DENSITY_POINTS: usize = 512;
pub const DENSITY_MAX_S: f64 = 1.2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub speaker: String,
    pub group: String,
    pub syllable_rate: f64,
    pub sonorant_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub rows: Vec<RateRow>,
    /// Duration grid in seconds, inclusive of both ends.
    pub grid: Vec<f64>,
    /// Syllable-duration density per speaker; `None` without a fitted model.
    pub densities: Vec<Option<Vec<f64>>>,
}

impl RateReport {
    pub fn rates_tsv(&self) -> String {
        let mut out = String::from("speaker\tgroup\tsyllable_rate\tsonorant_rate\n");
        for r in &self.rows {
            writeln!(out, "{}\t{}\t{:.6}\t{:.6}", r.speaker, r.group, r.syllable_rate, r.sonorant_rate).unwrap();
        }
        out
    }

    pub fn density_tsv(&self) -> String {
        let mut out = String::from("duration_s");
        for r in &self.rows {
            write!(out, "\t{}", r.speaker).unwrap();
        }
        out.push('\n');
        for (i, x) in self.grid.iter().enumerate() {
            write!(out, "{x:.6}").unwrap();
            for d in &self.densities {
                match d {
                    Some(v) => write!(out, "\t{:.9e}", v[i]).unwrap(),
                    None => out.push('\t'),
                }
            }
            out.push('\n');
        }
        out
    }
}

/// Per-speaker rates with group labels plus syllable-duration densities.
/// Missing labels default to an empty group.
pub fn rate_report(profiles: &[RhythmProfile], labels: &[String]) -> RateReport {
    let step = DENSITY_MAX_S / (DENSITY_POINTS - 1) as f64;
    let grid: Vec<f64> = (0..DENSITY_POINTS).map(|i| i as f64 * step).collect();
    let rows = profiles
        .iter()
        .enumerate()
        .map(|(i, p)| RateRow {
            speaker: p.speaker_id.clone(),
            group: labels.get(i).cloned().unwrap_or_default(),
            syllable_rate: p.syllable_rate,
            sonorant_rate: p.sonorant_rate,
        })
        .collect();
    let densities = profiles
        .iter()
        .map(|p| p.syllable_gamma.map(|g| grid.iter().map(|&x| g.pdf(x)).collect()))
        .collect();
    RateReport { rows, grid, densities }
}
