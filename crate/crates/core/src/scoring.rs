//! Token and word error rates via Levenshtein alignment.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::unitset::{WORD_BOUNDARY_ID, WORD_BOUNDARY_SYMBOL};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBreakdown {
    pub substitutions: usize,
    pub insertions: usize,
    pub deletions: usize,
    pub ref_len: usize,
}

impl ErrorBreakdown {
    pub fn errors(&self) -> usize {
        self.substitutions + self.insertions + self.deletions
    }

    /// (S+I+D)/N; may exceed 1 for insertion-heavy hypotheses.
    pub fn rate(&self) -> f64 {
        match (self.errors(), self.ref_len) {
            (0, _) => 0.0,
            (_, 0) => f64::INFINITY,
            (e, n) => e as f64 / n as f64,
        }
    }

    pub fn percent(&self) -> f64 {
        100.0 * self.rate()
    }
}

impl std::ops::Add for ErrorBreakdown {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        Self {
            substitutions: self.substitutions + o.substitutions,
            insertions: self.insertions + o.insertions,
            deletions: self.deletions + o.deletions,
            ref_len: self.ref_len + o.ref_len,
        }
    }
}

impl std::iter::Sum for ErrorBreakdown {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::default(), |a, b| a + b)
    }
}

/// Minimal unit-cost alignment.
///
/// Among minimal-cost alignments the one with the fewest insertions plus
/// deletions wins, which fixes the (S, I, D) split uniquely: swapping the
/// arguments swaps I and D and keeps S. Remaining backtrace ties prefer
/// match/substitution, then deletion, then insertion.
pub fn edit_distance<T: PartialEq>(reference: &[T], hypothesis: &[T]) -> ErrorBreakdown {
    let (n, m) = (reference.len(), hypothesis.len());
    let width = m + 1;
    // (errors, indels), compared lexicographically
    let mut cost = vec![(0usize, 0usize); (n + 1) * width];
    for i in 0..=n {
        cost[i * width] = (i, i);
    }
    for (j, c) in cost[..width].iter_mut().enumerate() {
        *c = (j, j);
    }
    let step = |c: (usize, usize), err: usize, indel: usize| (c.0 + err, c.1 + indel);
    for i in 1..=n {
        for j in 1..=m {
            let mismatch = usize::from(reference[i - 1] != hypothesis[j - 1]);
            let diag = step(cost[(i - 1) * width + j - 1], mismatch, 0);
            let del = step(cost[(i - 1) * width + j], 1, 1);
            let ins = step(cost[i * width + j - 1], 1, 1);
            cost[i * width + j] = diag.min(del).min(ins);
        }
    }

    let mut out = ErrorBreakdown {
        ref_len: n,
        ..Default::default()
    };
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        let here = cost[i * width + j];
        if i > 0 && j > 0 {
            let mismatch = usize::from(reference[i - 1] != hypothesis[j - 1]);
            if step(cost[(i - 1) * width + j - 1], mismatch, 0) == here {
                out.substitutions += mismatch;
                i -= 1;
                j -= 1;
                continue;
            }
        }
        if i > 0 && step(cost[(i - 1) * width + j], 1, 1) == here {
            out.deletions += 1;
            i -= 1;
        } else {
            out.insertions += 1;
            j -= 1;
        }
    }
    out
}

fn check_lengths(refs: usize, hyps: usize) -> Result<()> {
    if refs != hyps {
        return Err(Error::LengthMismatch { refs, hyps });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TerOptions {
    /// Count the word-boundary unit as a scoreable token.
    pub include_word_boundary: bool,
}

impl Default for TerOptions {
    fn default() -> Self {
        Self {
            include_word_boundary: true,
        }
    }
}

/// Corpus-level token error rate: summed errors over summed reference length.
pub fn ter(refs: &[Vec<u32>], hyps: &[Vec<u32>]) -> Result<ErrorBreakdown> {
    ter_with(refs, hyps, TerOptions::default())
}

pub fn ter_with(refs: &[Vec<u32>], hyps: &[Vec<u32>], opts: TerOptions) -> Result<ErrorBreakdown> {
    check_lengths(refs.len(), hyps.len())?;
    let strip = |s: &[u32]| -> Vec<u32> {
        s.iter()
            .copied()
            .filter(|&u| opts.include_word_boundary || u != WORD_BOUNDARY_ID)
            .collect()
    };
    Ok(refs
        .iter()
        .zip(hyps)
        .map(|(r, h)| edit_distance(&strip(r), &strip(h)))
        .sum())
}

/// Split at whitespace and at literal word-boundary markers.
pub fn split_words(s: &str) -> Vec<&str> {
    s.split_whitespace()
        .flat_map(|chunk| chunk.split(WORD_BOUNDARY_SYMBOL))
        .filter(|w| !w.is_empty())
        .collect()
}

/// Corpus-level word error rate over display strings.
pub fn wer<S: AsRef<str>>(refs: &[S], hyps: &[S]) -> Result<ErrorBreakdown> {
    check_lengths(refs.len(), hyps.len())?;
    Ok(refs
        .iter()
        .zip(hyps)
        .map(|(r, h)| edit_distance(&split_words(r.as_ref()), &split_words(h.as_ref())))
        .sum())
}

/// Split a unit-id sequence into words at the word-boundary unit.
pub fn split_word_ids(ids: &[u32]) -> Vec<&[u32]> {
    ids.split(|&u| u == WORD_BOUNDARY_ID)
        .filter(|w| !w.is_empty())
        .collect()
}

/// Word error rate over unit-id sequences; a word is the unit run between
/// boundaries, which also covers phone-mode output.
pub fn wer_ids(refs: &[Vec<u32>], hyps: &[Vec<u32>]) -> Result<ErrorBreakdown> {
    check_lengths(refs.len(), hyps.len())?;
    Ok(refs
        .iter()
        .zip(hyps)
        .map(|(r, h)| edit_distance(&split_word_ids(r), &split_word_ids(h)))
        .sum())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub system: String,
    pub language: String,
    pub metric: String,
    pub breakdown: ErrorBreakdown,
}

impl ResultRow {
    pub fn new(system: &str, language: &str, metric: &str, breakdown: ErrorBreakdown) -> Self {
        Self {
            system: system.to_string(),
            language: language.to_string(),
            metric: metric.to_string(),
            breakdown,
        }
    }

    /// `system  language  metric  rate  S  I  D  ref_len`, tab-separated.
    pub fn to_tsv(&self) -> String {
        let b = &self.breakdown;
        format!(
            "{}\t{}\t{}\t{:.1}\t{}\t{}\t{}\t{}",
            self.system,
            self.language,
            self.metric,
            b.percent(),
            b.substitutions,
            b.insertions,
            b.deletions,
            b.ref_len
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub table: String,
    pub rows: Vec<String>,
}

fn first_seen<'a>(items: impl Iterator<Item = &'a str>) -> Vec<&'a str> {
    let mut seen: Vec<&str> = Vec::new();
    for it in items {
        if !seen.contains(&it) {
            seen.push(it);
        }
    }
    seen
}

/// Systems as table rows, languages as columns, in first-seen order.
pub fn report(results: &[ResultRow]) -> Report {
    let systems = first_seen(results.iter().map(|r| r.system.as_str()));
    let languages = first_seen(results.iter().map(|r| r.language.as_str()));
    let metric = first_seen(results.iter().map(|r| r.metric.as_str())).join("/");

    let cell = |sys: &str, lang: &str| {
        results
            .iter()
            .find(|r| r.system == sys && r.language == lang)
            .map_or("-".to_string(), |r| format!("{:.1}%", r.breakdown.percent()))
    };
    let first_col = systems
        .iter()
        .map(|s| s.len())
        .chain([metric.len(), "Condition".len()])
        .max()
        .unwrap_or(0);
    let col = languages.iter().map(|l| l.len()).max().unwrap_or(0).max(7);

    let mut table = String::new();
    let _ = write!(table, "{:<first_col$}", "Condition");
    for l in &languages {
        let _ = write!(table, " | {l:>col$}");
    }
    table.push('\n');
    table.push_str(&"-".repeat(first_col + languages.len() * (col + 3)));
    table.push('\n');
    for s in &systems {
        let _ = write!(table, "{s:<first_col$}");
        for l in &languages {
            let _ = write!(table, " | {:>col$}", cell(s, l));
        }
        table.push('\n');
    }
    Report {
        table,
        rows: results.iter().map(ResultRow::to_tsv).collect(),
    }
}
