use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::unitset::normalize_whitespace;

/// Generic noise markers; an utterance made only of these is dropped.
pub const NOISE_MARKERS: &[&str] = &["<noise>", "[noise]"];

/// One line of a JSON-lines manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub utterance_id: String,
    /// Wav or feature file; relative paths resolve against the manifest.
    pub source: PathBuf,
    pub transcript: String,
    pub language: String,
    /// Seconds.
    pub duration: f64,
    /// Optional frame-level unit targets (whitespace-separated ids).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub targets: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IngestFilters {
    pub min_duration: f64,
    pub max_symbols: usize,
}

impl Default for IngestFilters {
    fn default() -> Self {
        Self {
            min_duration: 1.0,
            max_symbols: 639,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct IngestReport {
    pub entries: Vec<ManifestEntry>,
    pub too_short: usize,
    pub too_long: usize,
    pub noise_only: usize,
}

impl IngestReport {
    pub fn dropped(&self) -> usize {
        self.too_short + self.too_long + self.noise_only
    }
}

/// Remove noise markers and normalize whitespace.
pub fn strip_noise(transcript: &str) -> String {
    let kept: Vec<&str> = transcript
        .split_whitespace()
        .filter(|w| !NOISE_MARKERS.contains(&w.to_lowercase().as_str()))
        .collect();
    normalize_whitespace(&kept.join(" "))
}

pub fn parse_manifest(text: &str) -> Result<Vec<ManifestEntry>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let entry: ManifestEntry = serde_json::from_str(line).map_err(|e| Error::Manifest {
            line: i + 1,
            reason: e.to_string(),
        })?;
        if !entry.duration.is_finite() || entry.duration < 0.0 {
            return Err(Error::Manifest {
                line: i + 1,
                reason: format!("invalid duration {}", entry.duration),
            });
        }
        out.push(entry);
    }
    Ok(out)
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<Vec<ManifestEntry>> {
    let path = path.as_ref();
    let mut entries = parse_manifest(&fs::read_to_string(path)?)?;
    let base = path.parent().unwrap_or(Path::new("."));
    for e in &mut entries {
        e.source = resolve(base, &e.source);
        e.targets = e.targets.as_ref().map(|t| resolve(base, t));
    }
    Ok(entries)
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

pub fn manifest_to_string(entries: &[ManifestEntry]) -> Result<String> {
    let mut out = String::new();
    for e in entries {
        out.push_str(&serde_json::to_string(e)?);
        out.push('\n');
    }
    Ok(out)
}

pub fn write_manifest(path: impl AsRef<Path>, entries: &[ManifestEntry]) -> Result<()> {
    fs::write(path, manifest_to_string(entries)?)?;
    Ok(())
}

/// Apply the duration, length and noise filters; survivors come back sorted
/// by utterance id with noise markers removed from their transcripts.
pub fn filter_entries(entries: Vec<ManifestEntry>, filters: &IngestFilters) -> IngestReport {
    let mut report = IngestReport::default();
    for mut e in entries {
        let clean = strip_noise(&e.transcript);
        if clean.is_empty() {
            report.noise_only += 1;
            continue;
        }
        if e.duration < filters.min_duration {
            report.too_short += 1;
            continue;
        }
        if clean.chars().count() > filters.max_symbols {
            report.too_long += 1;
            continue;
        }
        e.transcript = clean;
        report.entries.push(e);
    }
    report.entries.sort_by(|a, b| a.utterance_id.cmp(&b.utterance_id));
    report
}

pub fn ingest(path: impl AsRef<Path>, filters: &IngestFilters) -> Result<IngestReport> {
    let report = filter_entries(read_manifest(path)?, filters);
    log::info!(
        "ingested {} utterances; dropped {} short, {} long, {} noise-only",
        report.entries.len(),
        report.too_short,
        report.too_long,
        report.noise_only
    );
    Ok(report)
}

pub fn read_targets(path: impl AsRef<Path>) -> Result<Vec<u32>> {
    let path = path.as_ref();
    fs::read_to_string(path)?
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| Error::format(path, format!("bad target {t:?}"))))
        .collect()
}

pub fn write_targets(path: impl AsRef<Path>, targets: &[u32]) -> Result<()> {
    let text: Vec<String> = targets.iter().map(u32::to_string).collect();
    fs::write(path, text.join(" ") + "\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn entry(id: &str, transcript: &str, duration: f64) -> ManifestEntry {
        ManifestEntry {
            utterance_id: id.into(),
            source: format!("{id}.feat").into(),
            transcript: transcript.into(),
            language: "xx".into(),
            duration,
            targets: None,
        }
    }

    #[test]
    fn short_and_long_utterances_are_dropped() {
        let entries = vec![
            entry("c", "fine", 2.0),
            entry("a", "short", 0.5),
            entry("b", &"x".repeat(640), 3.0),
            entry("d", &"y".repeat(639), 3.0),
            entry("e", "exactly one second", 1.0),
        ];
        let r = filter_entries(entries, &IngestFilters::default());
        assert_eq!((r.too_short, r.too_long, r.noise_only), (1, 1, 0));
        let ids: Vec<&str> = r.entries.iter().map(|e| e.utterance_id.as_str()).collect();
        assert_eq!(ids, ["c", "d", "e"]);
    }

    #[test]
    fn noise_markers() {
        let entries = vec![entry("a", "<noise>", 2.0), entry("b", "[NOISE]  hello <noise> world", 2.0)];
        let r = filter_entries(entries, &IngestFilters::default());
        assert_eq!(r.noise_only, 1);
        assert_eq!(r.entries[0].transcript, "hello world");
    }

    #[test]
    fn empty_manifest() {
        let r = filter_entries(parse_manifest("").unwrap(), &IngestFilters::default());
        assert_eq!(r, IngestReport::default());
    }

    #[test]
    fn malformed_line_reports_its_number() {
        let good = serde_json::to_string(&entry("a", "hi", 2.0)).unwrap();
        let text = format!("{good}\n\n{{\"utterance_id\": 3}}\n");
        match parse_manifest(&text) {
            Err(Error::Manifest { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn relative_sources_resolve_against_the_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.jsonl");
        write_manifest(&path, &[entry("a", "hi", 2.0)]).unwrap();
        let back = read_manifest(&path).unwrap();
        assert_eq!(back[0].source, dir.path().join("a.feat"));
    }

    proptest! {
        #[test]
        fn survivors_satisfy_the_filters(
            items in proptest::collection::vec(("[a-z<>\\[\\] ]{0,30}", 0.0f64..3.0), 0..40),
            max_symbols in 1usize..20,
        ) {
            let entries: Vec<_> = items
                .iter()
                .enumerate()
                .map(|(i, (t, d))| entry(&format!("u{i:02}"), t, *d))
                .collect();
            let filters = IngestFilters { min_duration: 1.0, max_symbols };
            let r = filter_entries(entries, &filters);
            prop_assert_eq!(r.entries.len() + r.dropped(), items.len());
            for e in &r.entries {
                prop_assert!(e.duration >= 1.0);
                prop_assert!(e.transcript.chars().count() <= max_symbols);
                prop_assert!(!e.transcript.is_empty());
            }
            prop_assert!(r.entries.windows(2).all(|w| w[0].utterance_id <= w[1].utterance_id));
        }
    }
}
