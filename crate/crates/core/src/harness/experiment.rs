use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::manifest::{ingest, IngestFilters, ManifestEntry};
use crate::decoder::{greedy_decode, prefix_beam_decode, train_char_lm_ids, BeamConfig};
use crate::error::{Error, Result};
use crate::features::{log_mel, read_wav, BottleneckNet, FeatureKind, FeatureMatrix, LfvNet};
use crate::network::{train, AcousticModel, ConvSpec, ModelConfig, TrainReport, TrainingExample};
use crate::optim::TrainConfig;
use crate::scoring::{ter, wer_ids, ResultRow};
use crate::unitset::{build_grapheme_inventory, detokenize, tokenize, Lexicon, UnitInventory, UnitMode};

pub const SEED_ENV: &str = "CTCPOLY_SEED";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// System name in the results rows.
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    pub output_dir: PathBuf,
    pub data: DataConfig,
    #[serde(default)]
    pub features: FeatureConfig,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub decode: DecodeConfig,
    #[serde(default)]
    pub score: ScoreConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub manifest: PathBuf,
    /// Required in phone mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lexicon: Option<PathBuf>,
    pub languages: Vec<String>,
    #[serde(default = "default_mode")]
    pub mode: UnitMode,
    /// Per-language fraction of utterances held out for testing.
    #[serde(default = "default_held_out")]
    pub held_out: f64,
    #[serde(default)]
    pub split_seed: u64,
    #[serde(default = "default_min_duration")]
    pub min_duration: f64,
    #[serde(default = "default_max_symbols")]
    pub max_symbols: usize,
}

fn default_mode() -> UnitMode {
    UnitMode::Grapheme
}
fn default_held_out() -> f64 {
    0.1
}
fn default_min_duration() -> f64 {
    IngestFilters::default().min_duration
}
fn default_max_symbols() -> usize {
    IngestFilters::default().max_symbols
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureConfig {
    /// `logmel` or `bnf`.
    pub kind: FeatureKind,
    pub lfv: bool,
    pub bnf_net: Option<PathBuf>,
    pub lfv_net: Option<PathBuf>,
    /// Filterbank size when sources are wav files.
    pub n_mels: usize,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            kind: FeatureKind::Logmel,
            lfv: false,
            bnf_net: None,
            lfv_net: None,
            n_mels: 40,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub conv_specs: Vec<ConvSpec>,
    pub recurrent_layers: usize,
    pub recurrent_width: usize,
}

impl Default for ModelSection {
    fn default() -> Self {
        let desk = ModelConfig::desk(1, 2, 0);
        Self {
            conv_specs: desk.conv_specs,
            recurrent_layers: desk.recurrent_layers,
            recurrent_width: desk.recurrent_width,
        }
    }
}

impl ModelSection {
    pub fn model_config(&self, input_dim: usize, output_dim: usize, lfv_dim: usize) -> ModelConfig {
        ModelConfig {
            conv_specs: self.conv_specs.clone(),
            recurrent_layers: self.recurrent_layers,
            recurrent_width: self.recurrent_width,
            lfv_dim,
            output_dim,
            input_dim,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecodeConfig {
    /// Character LM order for the beam-search pass; unset skips it.
    pub lm_order: Option<usize>,
    pub lm_k: f64,
    pub beam: BeamConfig,
}

impl Default for DecodeConfig {
    fn default() -> Self {
        Self {
            lm_order: None,
            lm_k: 1.0,
            beam: BeamConfig {
                beam: 16,
                ..BeamConfig::default()
            },
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScoreConfig {
    /// Also score the training utterances (system name gets a `/train` suffix).
    pub training_set: bool,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Parse a config file; relative paths resolve against its directory and
    /// the seed environment variable, if set, replaces `seed`.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut cfg = Self::from_toml_str(&fs::read_to_string(path)?)?;
        cfg.resolve_paths(path.parent().unwrap_or(Path::new(".")));
        cfg.apply_seed_override()?;
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.output_dir);
        fix(&mut self.data.manifest);
        for p in [&mut self.data.lexicon, &mut self.features.bnf_net, &mut self.features.lfv_net]
            .into_iter()
            .flatten()
        {
            fix(p);
        }
    }

    pub fn apply_seed_override(&mut self) -> Result<()> {
        if let Ok(v) = std::env::var(SEED_ENV) {
            self.seed = v
                .trim()
                .parse()
                .map_err(|_| Error::InvalidConfig(format!("{SEED_ENV}={v:?} is not an unsigned integer")))?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.into()));
        if self.data.languages.is_empty() {
            return bad("data.languages is empty");
        }
        if !(self.data.held_out > 0.0 && self.data.held_out < 1.0) {
            return bad("data.held_out must be in (0, 1)");
        }
        if self.data.mode == UnitMode::Phone && self.data.lexicon.is_none() {
            return bad("phone mode requires data.lexicon");
        }
        match self.features.kind {
            FeatureKind::Logmel => {}
            FeatureKind::Bnf if self.features.bnf_net.is_some() => {}
            FeatureKind::Bnf => return bad("features.kind = bnf requires features.bnf_net"),
            _ => return bad("features.kind must be logmel or bnf"),
        }
        if self.features.lfv && (self.features.lfv_net.is_none() || self.features.bnf_net.is_none()) {
            return bad("features.lfv requires features.lfv_net and features.bnf_net");
        }
        if self.decode.lm_order == Some(0) {
            return bad("decode.lm_order must be ≥ 1");
        }
        self.train.validate()
    }
}

/// Per-language held-out split. Each language is shuffled with a generator
/// derived from `seed` and its code, so the split of one language does not
/// depend on which others are present.
pub fn split_held_out(entries: &[ManifestEntry], fraction: f64, seed: u64) -> (Vec<ManifestEntry>, Vec<ManifestEntry>) {
    let mut by_lang: BTreeMap<&str, Vec<&ManifestEntry>> = BTreeMap::new();
    for e in entries {
        by_lang.entry(e.language.as_str()).or_default().push(e);
    }
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (lang, mut list) in by_lang {
        list.sort_by(|a, b| a.utterance_id.cmp(&b.utterance_id));
        let digest = Sha256::new().chain_update(seed.to_le_bytes()).chain_update(lang.as_bytes()).finalize();
        let lang_seed = u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"));
        list.shuffle(&mut ChaCha8Rng::seed_from_u64(lang_seed));
        let n_test = if list.len() < 2 {
            0
        } else {
            ((list.len() as f64 * fraction).round() as usize).clamp(1, list.len() - 1)
        };
        test.extend(list[..n_test].iter().map(|e| (*e).clone()));
        train.extend(list[n_test..].iter().map(|e| (*e).clone()));
    }
    train.sort_by(|a, b| a.utterance_id.cmp(&b.utterance_id));
    test.sort_by(|a, b| a.utterance_id.cmp(&b.utterance_id));
    (train, test)
}

/// Turns manifest sources into acoustic-model inputs.
#[derive(Debug, Clone, Default)]
pub struct Featurizer {
    pub n_mels: usize,
    pub bnf: Option<BottleneckNet>,
    pub lfv: Option<LfvNet>,
}

impl Featurizer {
    pub fn from_config(cfg: &FeatureConfig) -> Result<Self> {
        Ok(Self {
            n_mels: cfg.n_mels,
            bnf: cfg.bnf_net.as_ref().map(BottleneckNet::load).transpose()?,
            lfv: cfg.lfv_net.as_ref().map(LfvNet::load).transpose()?,
        })
    }

    /// Log-Mel features of a wav file, or a stored feature file as is.
    pub fn base(&self, source: &Path) -> Result<FeatureMatrix> {
        if source.extension().is_some_and(|e| e.eq_ignore_ascii_case("wav")) {
            let (samples, rate) = read_wav(source)?;
            log_mel(&samples, rate, self.n_mels)
        } else {
            FeatureMatrix::load(source)
        }
    }

    pub fn bnf(&self, base: &FeatureMatrix) -> Result<FeatureMatrix> {
        if base.kind() == FeatureKind::Bnf {
            return Ok(base.clone());
        }
        let net = self
            .bnf
            .as_ref()
            .ok_or_else(|| Error::InvalidConfig("no bottleneck net loaded".into()))?;
        net.extract(base)
    }

    /// Acoustic features of `kind` and, when requested, frame-wise LFVs.
    pub fn features(
        &self,
        source: &Path,
        kind: FeatureKind,
        with_lfv: bool,
    ) -> Result<(FeatureMatrix, Option<FeatureMatrix>)> {
        let base = self.base(source)?;
        let bnf = if kind == FeatureKind::Bnf || with_lfv {
            Some(self.bnf(&base)?)
        } else {
            None
        };
        let lfv = if with_lfv {
            let net = self
                .lfv
                .as_ref()
                .ok_or_else(|| Error::InvalidConfig("no LFV net loaded".into()))?;
            Some(net.extract(bnf.as_ref().expect("computed above"))?)
        } else {
            None
        };
        let main = match kind {
            FeatureKind::Bnf => bnf.expect("computed above"),
            FeatureKind::Logmel if base.kind() == FeatureKind::Logmel => base,
            _ => {
                return Err(Error::WrongFeatureKind {
                    expected: kind.name().into(),
                    found: base.kind().name().into(),
                })
            }
        };
        Ok((main, lfv))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transcription {
    pub utterance_id: String,
    pub language: String,
    pub reference: String,
    pub hypothesis: String,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub rows: Vec<ResultRow>,
    pub train: TrainReport,
    pub inventory: UnitInventory,
    pub model: AcousticModel,
    /// Greedy transcriptions of the held-out utterances.
    pub transcriptions: Vec<Transcription>,
}

struct StageLog {
    path: PathBuf,
    text: String,
}

impl StageLog {
    fn note(&mut self, line: impl AsRef<str>) -> Result<()> {
        log::info!("{}", line.as_ref());
        self.text.push_str(line.as_ref());
        self.text.push('\n');
        fs::write(&self.path, &self.text)?;
        Ok(())
    }

    fn run<T>(&mut self, stage: &'static str, f: impl FnOnce(&mut Self) -> Result<T>) -> Result<T> {
        self.note(format!("[{stage}] start"))?;
        match f(self) {
            Ok(v) => {
                self.note(format!("[{stage}] done"))?;
                Ok(v)
            }
            Err(e) => {
                let _ = self.note(format!("[{stage}] failed: {e}"));
                Err(e.in_stage(stage))
            }
        }
    }
}

fn unit_inventory(cfg: &DataConfig, entries: &[ManifestEntry], lexicon: Option<&Lexicon>) -> Result<UnitInventory> {
    match cfg.mode {
        UnitMode::Grapheme => {
            let transcripts: Vec<&str> = entries.iter().map(|e| e.transcript.as_str()).collect();
            build_grapheme_inventory(&transcripts)
        }
        UnitMode::Phone => {
            UnitInventory::from_lexicon(lexicon.expect("validated"))
        }
    }
}

fn examples(
    entries: &[ManifestEntry],
    featurizer: &Featurizer,
    cfg: &ExperimentConfig,
    inventory: &UnitInventory,
    lexicon: Option<&Lexicon>,
) -> Result<Vec<TrainingExample>> {
    entries
        .iter()
        .map(|e| {
            let (feat, lfv) = featurizer.features(&e.source, cfg.features.kind, cfg.features.lfv)?;
            Ok(TrainingExample {
                id: e.utterance_id.clone(),
                feat: feat.to_f64(),
                lfv: lfv.map(|l| l.to_f64()),
                targets: tokenize(&e.transcript, inventory, lexicon)?,
            })
        })
        .collect()
}

fn decode_all(model: &AcousticModel, set: &[TrainingExample]) -> Result<Vec<Vec<u32>>> {
    set.iter()
        .map(|ex| {
            let logits = model.forward_batch(&[ex.utterance()], crate::network::Mode::Infer)?.logits.remove(0);
            greedy_decode(logits.view())
        })
        .collect()
}

fn ter_rows(system: &str, entries: &[ManifestEntry], set: &[TrainingExample], hyps: &[Vec<u32>]) -> Result<Vec<ResultRow>> {
    let langs: BTreeSet<&str> = entries.iter().map(|e| e.language.as_str()).collect();
    let mut rows = Vec::new();
    for lang in langs {
        let idx: Vec<usize> = (0..entries.len()).filter(|&i| entries[i].language == lang).collect();
        let refs: Vec<Vec<u32>> = idx.iter().map(|&i| set[i].targets.clone()).collect();
        let hs: Vec<Vec<u32>> = idx.iter().map(|&i| hyps[i].clone()).collect();
        rows.push(ResultRow::new(system, lang, "TER", ter(&refs, &hs)?));
    }
    Ok(rows)
}

/// A trained acoustic model with the data it was trained and tested on.
pub struct TrainedSystem {
    pub model: AcousticModel,
    pub report: TrainReport,
    pub inventory: UnitInventory,
    pub train_set: Vec<ManifestEntry>,
    pub test_set: Vec<ManifestEntry>,
    pub train_examples: Vec<TrainingExample>,
    pub test_examples: Vec<TrainingExample>,
    log: StageLog,
}

/// Ingest, split, featurize and train. Writes `units.txt`, `loss.tsv`,
/// `model.ckpt` and `log.txt` to `cfg.output_dir`.
pub fn train_system(cfg: &ExperimentConfig) -> Result<TrainedSystem> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.output_dir)?;
    let mut log = StageLog {
        path: cfg.output_dir.join("log.txt"),
        text: String::new(),
    };
    log.note(format!("experiment {} seed {}", cfg.name, cfg.seed))?;
    fs::write(cfg.output_dir.join("config.toml"), cfg.to_toml_string())?;

    let (train_set, test_set) = log.run("ingest", |log| {
        let filters = IngestFilters {
            min_duration: cfg.data.min_duration,
            max_symbols: cfg.data.max_symbols,
        };
        let report = ingest(&cfg.data.manifest, &filters)?;
        log.note(format!(
            "kept {} utterances, dropped {} short, {} long, {} noise-only",
            report.entries.len(),
            report.too_short,
            report.too_long,
            report.noise_only
        ))?;
        let present: BTreeSet<&str> = report.entries.iter().map(|e| e.language.as_str()).collect();
        let missing: Vec<&str> = cfg
            .data
            .languages
            .iter()
            .map(String::as_str)
            .filter(|l| !present.contains(l))
            .collect();
        if !missing.is_empty() {
            return Err(Error::InvalidConfig(format!("languages not in the manifest: {}", missing.join(", "))));
        }
        let wanted: Vec<ManifestEntry> = report
            .entries
            .into_iter()
            .filter(|e| cfg.data.languages.contains(&e.language))
            .collect();
        let (train, test) = split_held_out(&wanted, cfg.data.held_out, cfg.data.split_seed);
        log.note(format!("{} training, {} held-out utterances", train.len(), test.len()))?;
        Ok((train, test))
    })?;

    let lexicon = cfg.data.lexicon.as_ref().map(Lexicon::load).transpose().map_err(|e| e.in_stage("units"))?;
    let inventory = log.run("units", |log| {
        let all: Vec<ManifestEntry> = train_set.iter().chain(&test_set).cloned().collect();
        let inv = unit_inventory(&cfg.data, &all, lexicon.as_ref())?;
        log.note(format!("{} units ({:?} mode)", inv.len(), inv.mode()))?;
        inv.save(cfg.output_dir.join("units.txt"))?;
        Ok(inv)
    })?;

    let (train_ex, test_ex) = log.run("features", |_| {
        let featurizer = Featurizer::from_config(&cfg.features)?;
        Ok((
            examples(&train_set, &featurizer, cfg, &inventory, lexicon.as_ref())?,
            examples(&test_set, &featurizer, cfg, &inventory, lexicon.as_ref())?,
        ))
    })?;

    let (model, report) = log.run("train", |log| {
        let first = train_ex.first().ok_or_else(|| Error::InvalidConfig("no training utterances".into()))?;
        let lfv_dim = first.lfv.as_ref().map_or(0, |l| l.ncols());
        let model_cfg = cfg.model.model_config(first.feat.ncols(), inventory.len(), lfv_dim);
        let mut model = AcousticModel::new(model_cfg, cfg.seed)?;
        let train_cfg = TrainConfig {
            seed: cfg.seed,
            ..cfg.train.clone()
        };
        let report = train(&mut model, &train_ex, &train_cfg)?;
        let mut curve = String::from("epoch\tmean_loss\tupdates\trejected\n");
        for e in &report.epochs {
            let _ = writeln!(curve, "{}\t{:.6}\t{}\t{}", e.epoch, e.mean_loss, e.updates, e.rejected_updates);
        }
        fs::write(cfg.output_dir.join("loss.tsv"), curve)?;
        model.save(cfg.output_dir.join("model.ckpt"))?;
        log.note(format!(
            "trained {} epochs, best {}, {} skipped",
            report.epochs.len(),
            report.best_epoch,
            report.skipped.len()
        ))?;
        Ok((model, report))
    })?;

    Ok(TrainedSystem {
        model,
        report,
        inventory,
        train_set,
        test_set,
        train_examples: train_ex,
        test_examples: test_ex,
        log,
    })
}

/// Ingest, split, featurize, train, decode and score; artifacts go to
/// `cfg.output_dir`. A failing stage is reported by name and the log up to
/// that point is kept in `log.txt`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    let TrainedSystem {
        model,
        report,
        inventory,
        train_set,
        test_set,
        train_examples: train_ex,
        test_examples: test_ex,
        mut log,
    } = train_system(cfg)?;
    let (rows, transcriptions) = log.run("decode", |log| {
        let hyps = decode_all(&model, &test_ex)?;
        let mut rows = ter_rows(&cfg.name, &test_set, &test_ex, &hyps)?;
        if cfg.score.training_set {
            let train_hyps = decode_all(&model, &train_ex)?;
            rows.extend(ter_rows(&format!("{}/train", cfg.name), &train_set, &train_ex, &train_hyps)?);
        }
        if let Some(order) = cfg.decode.lm_order {
            let seqs: Vec<Vec<u32>> = train_ex.iter().map(|e| e.targets.clone()).collect();
            let lm = train_char_lm_ids(&seqs, &inventory, order, cfg.decode.lm_k)?;
            let langs: BTreeSet<&str> = test_set.iter().map(|e| e.language.as_str()).collect();
            for lang in langs {
                let (mut refs, mut hs) = (Vec::new(), Vec::new());
                for (e, ex) in test_set.iter().zip(&test_ex).filter(|(e, _)| e.language == lang) {
                    let logits = model.forward_batch(&[ex.utterance()], crate::network::Mode::Infer)?.logits.remove(0);
                    hs.push(prefix_beam_decode(logits.view(), Some(&lm), &cfg.decode.beam)?);
                    refs.push(ex.targets.clone());
                    debug_assert_eq!(e.utterance_id, ex.id);
                }
                rows.push(ResultRow::new(&cfg.name, lang, "WER", wer_ids(&refs, &hs)?));
            }
        }
        let mut transcriptions = Vec::with_capacity(test_set.len());
        let mut tsv = String::from("utterance_id\tlanguage\treference\thypothesis\n");
        for ((e, ex), h) in test_set.iter().zip(&test_ex).zip(&hyps) {
            let t = Transcription {
                utterance_id: e.utterance_id.clone(),
                language: e.language.clone(),
                reference: detokenize(&ex.targets, &inventory)?,
                hypothesis: detokenize(h, &inventory)?,
            };
            let _ = writeln!(tsv, "{}\t{}\t{}\t{}", t.utterance_id, t.language, t.reference, t.hypothesis);
            transcriptions.push(t);
        }
        fs::write(cfg.output_dir.join("hypotheses.tsv"), tsv)?;
        log.note(format!("decoded {} utterances", hyps.len()))?;
        Ok((rows, transcriptions))
    })?;

    log.run("score", |log| {
        let text: String = rows.iter().map(|r| r.to_tsv() + "\n").collect();
        fs::write(cfg.output_dir.join("results.tsv"), &text)?;
        for r in &rows {
            log.note(r.to_tsv())?;
        }
        Ok(())
    })?;

    Ok(ExperimentResult {
        rows,
        train: report,
        inventory,
        model,
        transcriptions,
    })
}
