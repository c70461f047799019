//! Synthetic pseudo-languages: random word sequences rendered as Gaussian
//! feature segments, one prototype per unit and language.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::manifest::{write_manifest, write_targets, ManifestEntry};
use crate::error::{Error, Result};
use crate::features::{FeatureKind, FeatureMatrix};
use crate::unitset::{Lexicon, UnitInventory, WORD_BOUNDARY_ID, WORD_BOUNDARY_SYMBOL};

pub const FRAME_SHIFT_MS: f32 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticUnit {
    pub symbol: String,
    pub mean: Vec<f64>,
    /// Standard deviation of the per-frame noise.
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticWord {
    pub spelling: String,
    pub phones: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticLanguageSpec {
    pub code: String,
    pub units: Vec<SyntheticUnit>,
    /// Rendering of the pause between words.
    pub pause: SyntheticUnit,
    pub min_frames: usize,
    pub max_frames: usize,
    /// Probability that the next word is the successor of the previous one
    /// in `words`, rather than a uniform draw.
    pub transition_bias: f64,
    /// Standard deviation of a per-utterance offset added to every frame,
    /// standing in for speaker and channel.
    #[serde(default)]
    pub speaker_shift: f64,
    pub words: Vec<SyntheticWord>,
}

impl SyntheticLanguageSpec {
    pub fn dim(&self) -> usize {
        self.pause.mean.len()
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(format!("language {}: {m}", self.code)));
        if self.min_frames < 2 || self.max_frames < self.min_frames {
            return bad(format!("unit duration {}..={} (minimum must be ≥ 2)", self.min_frames, self.max_frames));
        }
        for u in self.units.iter().chain([&self.pause]) {
            if u.mean.len() != dim {
                return Err(Error::DimMismatch {
                    layer: format!("prototype {} of {}", u.symbol, self.code),
                    expected: dim,
                    found: u.mean.len(),
                });
            }
        }
        if !(self.speaker_shift >= 0.0 && self.speaker_shift.is_finite()) {
            return bad(format!("speaker_shift {} must be finite and ≥ 0", self.speaker_shift));
        }
        if self.words.is_empty() {
            return bad("no words".into());
        }
        for w in &self.words {
            if w.phones.is_empty() || w.phones.windows(2).any(|p| p[0] == p[1]) {
                return bad(format!("word {:?} is empty or repeats a unit", w.spelling));
            }
            if let Some(p) = w.phones.iter().find(|p| !self.units.iter().any(|u| &u.symbol == *p)) {
                return bad(format!("word {:?} uses unknown unit {p}", w.spelling));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticUtterance {
    pub id: String,
    pub language: String,
    pub transcript: String,
    /// Unit symbols with the boundary marker between words.
    pub units: Vec<String>,
    pub features: FeatureMatrix,
    /// Unit id per frame under [`phone_inventory`].
    pub frame_targets: Vec<u32>,
}

impl SyntheticUtterance {
    pub fn duration(&self) -> f64 {
        self.features.frames() as f64 * f64::from(FRAME_SHIFT_MS) / 1000.0
    }
}

/// Phone-mode inventory over every unit used by `specs`.
pub fn phone_inventory(specs: &[SyntheticLanguageSpec]) -> Result<UnitInventory> {
    let phones: BTreeSet<&str> = specs
        .iter()
        .flat_map(|s| s.units.iter().map(|u| u.symbol.as_str()))
        .collect();
    let phones: Vec<&str> = phones.into_iter().collect();
    UnitInventory::from_phones(&phones)
}

/// Pronunciations of every word of every language.
pub fn lexicon(specs: &[SyntheticLanguageSpec]) -> Result<Lexicon> {
    let mut lex = Lexicon::new();
    for s in specs {
        for w in &s.words {
            lex.insert(&w.spelling, &w.phones)?;
        }
    }
    Ok(lex)
}

/// Lengths and size of a generated corpus.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorpusShape {
    pub utts_per_language: usize,
    pub min_words: usize,
    pub max_words: usize,
    /// Words are appended until the utterance reaches this many frames.
    pub min_utt_frames: usize,
}

impl Default for CorpusShape {
    fn default() -> Self {
        Self {
            utts_per_language: 200,
            min_words: 3,
            max_words: 6,
            min_utt_frames: 100,
        }
    }
}

fn render(unit: &SyntheticUnit, frames: usize, rng: &mut ChaCha8Rng, out: &mut Vec<f64>) {
    let noise = Normal::new(0.0, unit.scale).expect("finite scale");
    for _ in 0..frames {
        out.extend(unit.mean.iter().map(|m| m + noise.sample(rng)));
    }
}

pub fn synthesize(specs: &[SyntheticLanguageSpec], shape: &CorpusShape, seed: u64) -> Result<Vec<SyntheticUtterance>> {
    let Some(first) = specs.first() else {
        return Err(Error::InvalidConfig("at least one language spec is required".into()));
    };
    let dim = first.dim();
    for s in specs {
        s.validate(dim)?;
    }
    if shape.min_words == 0 || shape.max_words < shape.min_words {
        return Err(Error::InvalidConfig("word count range must be non-empty".into()));
    }
    let inventory = phone_inventory(specs)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(specs.len() * shape.utts_per_language);
    for spec in specs {
        let protos: BTreeMap<&str, &SyntheticUnit> = spec.units.iter().map(|u| (u.symbol.as_str(), u)).collect();
        for n in 0..shape.utts_per_language {
            let target_words = rng.random_range(shape.min_words..=shape.max_words);
            let mut words: Vec<&SyntheticWord> = Vec::new();
            let mut prev: Option<usize> = None;
            let mut data = Vec::new();
            let mut targets = Vec::new();
            let mut units = Vec::new();
            while words.len() < target_words || targets.len() < shape.min_utt_frames {
                let idx = match prev {
                    Some(p) if rng.random::<f64>() < spec.transition_bias => (p + 1) % spec.words.len(),
                    _ => rng.random_range(0..spec.words.len()),
                };
                if !words.is_empty() {
                    let d = rng.random_range(spec.min_frames..=spec.max_frames);
                    render(&spec.pause, d, &mut rng, &mut data);
                    targets.extend(std::iter::repeat_n(WORD_BOUNDARY_ID, d));
                    units.push(WORD_BOUNDARY_SYMBOL.to_string());
                }
                let word = &spec.words[idx];
                for p in &word.phones {
                    let d = rng.random_range(spec.min_frames..=spec.max_frames);
                    render(protos[p.as_str()], d, &mut rng, &mut data);
                    let id = inventory.id_of(p).expect("inventory built from specs");
                    targets.extend(std::iter::repeat_n(id, d));
                    units.push(p.clone());
                }
                words.push(word);
                prev = Some(idx);
            }
            let frames = targets.len();
            let mut features = Array2::from_shape_vec((frames, dim), data).expect("frame layout");
            if spec.speaker_shift > 0.0 {
                let shift = Normal::new(0.0, spec.speaker_shift).expect("validated");
                let offset: Vec<f64> = (0..dim).map(|_| shift.sample(&mut rng)).collect();
                for mut row in features.rows_mut() {
                    row.iter_mut().zip(&offset).for_each(|(x, o)| *x += o);
                }
            }
            let transcript = words.iter().map(|w| w.spelling.as_str()).collect::<Vec<_>>().join(" ");
            out.push(SyntheticUtterance {
                id: format!("{}_{n:04}", spec.code),
                language: spec.code.clone(),
                transcript,
                units,
                features: FeatureMatrix::from_f64(features.view(), FRAME_SHIFT_MS, FeatureKind::Logmel)?,
                frame_targets: targets,
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct GeneratedCorpus {
    pub manifest: PathBuf,
    pub lexicon: PathBuf,
    pub inventory: PathBuf,
    pub specs: PathBuf,
    pub entries: Vec<ManifestEntry>,
}

/// Write features, frame targets, the manifest, lexicon, phone inventory and
/// the language specs under `dir`.
pub fn generate_corpus(
    specs: &[SyntheticLanguageSpec],
    shape: &CorpusShape,
    seed: u64,
    dir: impl AsRef<Path>,
) -> Result<GeneratedCorpus> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir.join("feats"))?;
    let utts = synthesize(specs, shape, seed)?;
    let mut entries = Vec::with_capacity(utts.len());
    for u in &utts {
        let feat = PathBuf::from("feats").join(format!("{}.feat", u.id));
        let tgt = PathBuf::from("feats").join(format!("{}.tgt", u.id));
        u.features.save(dir.join(&feat))?;
        write_targets(dir.join(&tgt), &u.frame_targets)?;
        entries.push(ManifestEntry {
            utterance_id: u.id.clone(),
            source: feat,
            transcript: u.transcript.clone(),
            language: u.language.clone(),
            duration: u.duration(),
            targets: Some(tgt),
        });
    }
    let out = GeneratedCorpus {
        manifest: dir.join("manifest.jsonl"),
        lexicon: dir.join("lexicon.txt"),
        inventory: dir.join("phones.txt"),
        specs: dir.join("languages.json"),
        entries,
    };
    write_manifest(&out.manifest, &out.entries)?;
    lexicon(specs)?.save(&out.lexicon)?;
    phone_inventory(specs)?.save(&out.inventory)?;
    fs::write(&out.specs, serde_json::to_string_pretty(specs)?)?;
    Ok(out)
}

/// Knobs for [`pseudo_languages`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PseudoLanguageConfig {
    pub n_languages: usize,
    pub dim: usize,
    /// Units drawn from the global set for each language.
    pub units_per_language: usize,
    pub words_per_language: usize,
    /// Standard deviation of prototype means around zero.
    pub prototype_spread: f64,
    pub noise: f64,
    /// Fraction of a language's units realized with another unit's prototype.
    pub conflict_rate: f64,
    /// Standard deviation of a language-wide offset added to every prototype.
    pub timbre: f64,
    /// Fraction of units spelled with a language-specific letter.
    pub respell_rate: f64,
    pub min_frames: usize,
    pub max_frames: usize,
    pub transition_bias: f64,
    pub speaker_shift: f64,
}

impl Default for PseudoLanguageConfig {
    fn default() -> Self {
        Self {
            n_languages: 2,
            dim: 16,
            units_per_language: 9,
            words_per_language: 24,
            prototype_spread: 1.0,
            noise: 1.0,
            conflict_rate: 0.5,
            timbre: 0.3,
            respell_rate: 0.3,
            min_frames: 4,
            max_frames: 7,
            transition_bias: 0.3,
            speaker_shift: 0.0,
        }
    }
}

const GLOBAL_UNITS: [&str; 12] = ["a", "e", "i", "o", "u", "p", "t", "k", "s", "m", "n", "l"];
const SPARE_LETTERS: [&str; 8] = ["c", "z", "x", "q", "y", "h", "w", "v"];
const LANGUAGE_CODES: [&str; 8] = ["aa", "bb", "cc", "dd", "ee", "ff", "gg", "hh"];

/// Pseudo-languages over a shared unit set. Each language uses a subset of
/// the units; a fraction of them borrow another unit's prototype, so the same
/// sound means different units in different languages. Spellings are unique
/// across languages so one lexicon covers them all.
pub fn pseudo_languages(cfg: &PseudoLanguageConfig, seed: u64) -> Result<Vec<SyntheticLanguageSpec>> {
    if cfg.n_languages == 0 || cfg.n_languages > LANGUAGE_CODES.len() {
        return Err(Error::InvalidConfig(format!("n_languages must be in 1..={}", LANGUAGE_CODES.len())));
    }
    if !(2..=GLOBAL_UNITS.len()).contains(&cfg.units_per_language) {
        return Err(Error::InvalidConfig(format!("units_per_language must be in 2..={}", GLOBAL_UNITS.len())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spread = Normal::new(0.0, cfg.prototype_spread).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let timbre = Normal::new(0.0, cfg.timbre).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let canonical: Vec<Vec<f64>> = GLOBAL_UNITS
        .iter()
        .map(|_| (0..cfg.dim).map(|_| spread.sample(&mut rng)).collect())
        .collect();

    let mut used_spellings = BTreeSet::new();
    let mut specs = Vec::new();
    for &code in &LANGUAGE_CODES[..cfg.n_languages] {
        let offset: Vec<f64> = (0..cfg.dim).map(|_| timbre.sample(&mut rng)).collect();
        let mut subset: Vec<usize> = (0..GLOBAL_UNITS.len()).collect();
        subset.shuffle(&mut rng);
        subset.truncate(cfg.units_per_language);
        subset.sort_unstable();

        // units that take another unit's prototype, rotated among themselves
        let mut swapped: Vec<usize> = subset
            .iter()
            .copied()
            .filter(|_| rng.random::<f64>() < cfg.conflict_rate)
            .collect();
        swapped.shuffle(&mut rng);
        let mut source: BTreeMap<usize, usize> = subset.iter().map(|&u| (u, u)).collect();
        if swapped.len() >= 2 {
            for (i, &u) in swapped.iter().enumerate() {
                source.insert(u, swapped[(i + 1) % swapped.len()]);
            }
        }
        let shifted = |proto: &[f64]| -> Vec<f64> { proto.iter().zip(&offset).map(|(a, b)| a + b).collect() };
        let units: Vec<SyntheticUnit> = subset
            .iter()
            .map(|&u| SyntheticUnit {
                symbol: GLOBAL_UNITS[u].to_string(),
                mean: shifted(&canonical[source[&u]]),
                scale: cfg.noise,
            })
            .collect();
        let pause = SyntheticUnit {
            symbol: WORD_BOUNDARY_SYMBOL.to_string(),
            mean: shifted(&vec![0.0; cfg.dim]),
            scale: cfg.noise * 0.5,
        };

        let mut spare: Vec<&str> = SPARE_LETTERS.to_vec();
        spare.shuffle(&mut rng);
        let letters: BTreeMap<usize, String> = subset
            .iter()
            .map(|&u| {
                let respell = rng.random::<f64>() < cfg.respell_rate && !spare.is_empty();
                let letter = if respell { spare.pop().expect("checked") } else { GLOBAL_UNITS[u] };
                (u, letter.to_string())
            })
            .collect();

        let mut words = Vec::new();
        let mut attempts = 0;
        while words.len() < cfg.words_per_language {
            attempts += 1;
            if attempts > 10_000 {
                return Err(Error::InvalidConfig("could not draw enough distinct words".into()));
            }
            let len = rng.random_range(2..=4);
            let mut phones: Vec<usize> = Vec::with_capacity(len);
            while phones.len() < len {
                let u = subset[rng.random_range(0..subset.len())];
                if phones.last() != Some(&u) {
                    phones.push(u);
                }
            }
            let spelling: String = phones.iter().map(|u| letters[u].as_str()).collect();
            if !used_spellings.insert(spelling.clone()) {
                continue;
            }
            words.push(SyntheticWord {
                spelling,
                phones: phones.iter().map(|&u| GLOBAL_UNITS[u].to_string()).collect(),
            });
        }
        specs.push(SyntheticLanguageSpec {
            code: code.to_string(),
            units,
            pause,
            min_frames: cfg.min_frames,
            max_frames: cfg.max_frames,
            transition_bias: cfg.transition_bias,
            speaker_shift: cfg.speaker_shift,
            words,
        });
    }
    Ok(specs)
}
