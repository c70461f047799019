//! Desk-scale versions of the comparisons: log-Mel vs BNF inputs, and
//! monolingual vs multilingual vs multilingual with LFVs.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::experiment::{
    run_experiment, split_held_out, DataConfig, DecodeConfig, ExperimentConfig, FeatureConfig, ModelSection,
    ScoreConfig,
};
use super::manifest::{read_manifest, read_targets, ManifestEntry};
use super::synth::{generate_corpus, phone_inventory, pseudo_languages, CorpusShape, GeneratedCorpus, PseudoLanguageConfig};
use crate::error::Result;
use crate::features::{
    frame_accuracy, lfv_separability, train_bottleneck_net, train_lfv_net, BottleneckNetConfig,
    FeatureKind, FeatureMatrix, LabeledFrames, Separability,
};
use crate::optim::TrainConfig;
use crate::scoring::ResultRow;
use crate::unitset::UnitMode;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BenchmarkConfig {
    pub languages: PseudoLanguageConfig,
    pub shape: CorpusShape,
    /// `n_targets` is filled in from the generated phone set.
    pub bnf: BottleneckNetConfig,
    pub bnf_train: TrainConfig,
    pub lfv: BottleneckNetConfig,
    pub lfv_train: TrainConfig,
    pub held_out: f64,
    pub split_seed: u64,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self {
            languages: PseudoLanguageConfig {
                n_languages: 4,
                ..Default::default()
            },
            shape: CorpusShape::default(),
            bnf: BottleneckNetConfig::desk_bnf(1),
            bnf_train: TrainConfig {
                learning_rate: 0.01,
                batch_size: 64,
                epochs: 4,
                ..Default::default()
            },
            lfv: BottleneckNetConfig::desk_lfv(2),
            lfv_train: TrainConfig {
                learning_rate: 0.01,
                batch_size: 64,
                epochs: 4,
                ..Default::default()
            },
            held_out: 0.1,
            split_seed: 0,
        }
    }
}

/// A generated corpus with its trained feature extractors.
#[derive(Debug, Clone)]
pub struct Benchmark {
    pub dir: PathBuf,
    pub corpus: GeneratedCorpus,
    pub languages: Vec<String>,
    pub bnf_net: PathBuf,
    pub lfv_net: PathBuf,
    pub held_out: f64,
    pub split_seed: u64,
    /// LFV net frame accuracy on held-out utterances.
    pub lfv_accuracy: f64,
    /// Utterance-level LFV distances on held-out utterances.
    pub separability: Separability,
    pub bnf_loss: Vec<f64>,
    pub lfv_loss: Vec<f64>,
}

fn labelled(entries: &[ManifestEntry]) -> Result<Vec<LabeledFrames>> {
    entries
        .iter()
        .map(|e| {
            let targets = match &e.targets {
                Some(t) => read_targets(t)?,
                None => Vec::new(),
            };
            Ok(LabeledFrames {
                features: FeatureMatrix::load(&e.source)?,
                targets,
                language: e.language.clone(),
            })
        })
        .collect()
}

/// Generate the corpus under `dir`, then train the BNF net on frame targets
/// and the LFV net on BNFs, both on the training split only.
pub fn prepare_benchmark(cfg: &BenchmarkConfig, seed: u64, dir: impl AsRef<Path>) -> Result<Benchmark> {
    let dir = dir.as_ref().to_path_buf();
    let specs = pseudo_languages(&cfg.languages, seed)?;
    let corpus = generate_corpus(&specs, &cfg.shape, seed, &dir)?;
    let entries = read_manifest(&corpus.manifest)?;
    let (train, test) = split_held_out(&entries, cfg.held_out, cfg.split_seed);

    let bnf_cfg = BottleneckNetConfig {
        n_targets: phone_inventory(&specs)?.len(),
        ..cfg.bnf.clone()
    };
    let bnf_train = TrainConfig {
        seed,
        ..cfg.bnf_train.clone()
    };
    let train_frames = labelled(&train)?;
    let bnf = train_bottleneck_net(&train_frames, &bnf_cfg, &bnf_train)?;
    let bnf_net = dir.join("bnf.ckpt");
    bnf.net.save(&bnf_net)?;
    log::info!("BNF net loss {:?}", bnf.loss_history);

    let extract = |frames: &[LabeledFrames]| -> Result<Vec<(FeatureMatrix, String)>> {
        frames
            .iter()
            .map(|u| Ok((bnf.net.extract(&u.features)?, u.language.clone())))
            .collect()
    };
    let lfv_corpus = extract(&train_frames)?;
    let lfv_train = TrainConfig {
        seed,
        ..cfg.lfv_train.clone()
    };
    let lfv = train_lfv_net(&lfv_corpus, &cfg.lfv, &lfv_train)?;
    let lfv_net = dir.join("lfv.ckpt");
    lfv.net.save(&lfv_net)?;

    let held_out = extract(&labelled(&test)?)?;
    let langs = lfv.net.languages().to_vec();
    let eval: Vec<LabeledFrames> = held_out
        .iter()
        .map(|(f, l)| LabeledFrames {
            features: f.clone(),
            targets: vec![langs.binary_search(l).map_or(u32::MAX, |i| i as u32); f.frames()],
            language: "lang".into(),
        })
        .collect();
    let lfv_accuracy = frame_accuracy(&lfv.net.0, &eval)?;
    let vectors = held_out
        .iter()
        .map(|(f, l)| lfv.net.utterance_vector(f, Some(l)))
        .collect::<Result<Vec<_>>>()?;
    let separability = lfv_separability(&vectors);
    log::info!("LFV held-out frame accuracy {lfv_accuracy:.3}, {separability:?}");

    Ok(Benchmark {
        dir,
        languages: langs,
        corpus,
        bnf_net,
        lfv_net,
        held_out: cfg.held_out,
        split_seed: cfg.split_seed,
        lfv_accuracy,
        separability,
        bnf_loss: bnf.loss_history,
        lfv_loss: lfv.loss_history,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Condition {
    Monolingual,
    Multilingual,
    MultilingualLfv,
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Condition::Monolingual => "Monolingual",
            Condition::Multilingual => "ML",
            Condition::MultilingualLfv => "ML+LFV",
        })
    }
}

/// Acoustic model and trainer settings shared by every condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RecipeSettings {
    pub model: ModelSection,
    pub train: TrainConfig,
    pub decode: DecodeConfig,
    /// Epoch budget of monolingual systems, which see a fraction of the
    /// data; defaults to `train.epochs`.
    pub monolingual_epochs: Option<usize>,
}

impl Default for RecipeSettings {
    fn default() -> Self {
        Self {
            model: ModelSection::default(),
            train: TrainConfig {
                learning_rate: 0.03,
                epochs: 8,
                max_grad_norm: Some(10.0),
                ..Default::default()
            },
            decode: DecodeConfig::default(),
            monolingual_epochs: None,
        }
    }
}

impl Benchmark {
    /// Experiment config for one system; `languages` is the training (and
    /// test) language set.
    #[allow(clippy::too_many_arguments)]
    pub fn experiment_config(
        &self,
        name: &str,
        languages: &[String],
        mode: UnitMode,
        kind: FeatureKind,
        lfv: bool,
        settings: &RecipeSettings,
        seed: u64,
        output_dir: PathBuf,
    ) -> ExperimentConfig {
        let needs_bnf = kind == FeatureKind::Bnf || lfv;
        ExperimentConfig {
            name: name.to_string(),
            seed,
            output_dir,
            data: DataConfig {
                manifest: self.corpus.manifest.clone(),
                lexicon: (mode == UnitMode::Phone).then(|| self.corpus.lexicon.clone()),
                languages: languages.to_vec(),
                mode,
                held_out: self.held_out,
                split_seed: self.split_seed,
                min_duration: 1.0,
                max_symbols: 639,
            },
            features: FeatureConfig {
                kind,
                lfv,
                bnf_net: needs_bnf.then(|| self.bnf_net.clone()),
                lfv_net: lfv.then(|| self.lfv_net.clone()),
                ..Default::default()
            },
            model: settings.model.clone(),
            train: settings.train.clone(),
            decode: settings.decode.clone(),
            score: ScoreConfig::default(),
        }
    }

    /// Rows for one condition; monolingual runs one system per language.
    pub fn run_condition(
        &self,
        condition: Condition,
        mode: UnitMode,
        kind: FeatureKind,
        settings: &RecipeSettings,
        seed: u64,
        out: &Path,
    ) -> Result<Vec<ResultRow>> {
        let name = condition.to_string();
        let tag = format!("{}-{mode:?}-{}", name.replace('+', "_"), kind.name()).to_lowercase();
        match condition {
            Condition::Monolingual => {
                let mut s = settings.clone();
                s.train.epochs = settings.monolingual_epochs.unwrap_or(settings.train.epochs);
                let mut rows = Vec::new();
                for lang in &self.languages {
                    let cfg = self.experiment_config(
                        &name,
                        std::slice::from_ref(lang),
                        mode,
                        kind,
                        false,
                        &s,
                        seed,
                        out.join(format!("{tag}-{lang}")),
                    );
                    rows.extend(run_experiment(&cfg)?.rows);
                }
                Ok(rows)
            }
            Condition::Multilingual | Condition::MultilingualLfv => {
                let lfv = condition == Condition::MultilingualLfv;
                let cfg = self.experiment_config(&name, &self.languages, mode, kind, lfv, settings, seed, out.join(tag));
                Ok(run_experiment(&cfg)?.rows)
            }
        }
    }

    /// Monolingual, ML and ML+LFV rows on BNF inputs.
    pub fn condition_table(&self, mode: UnitMode, settings: &RecipeSettings, seed: u64, out: &Path) -> Result<Vec<ResultRow>> {
        let mut rows = Vec::new();
        for c in [Condition::Monolingual, Condition::Multilingual, Condition::MultilingualLfv] {
            rows.extend(self.run_condition(c, mode, FeatureKind::Bnf, settings, seed, out)?);
        }
        Ok(rows)
    }

    /// The same multilingual system on log-Mel and on BNF inputs.
    pub fn feature_comparison(&self, mode: UnitMode, settings: &RecipeSettings, seed: u64, out: &Path) -> Result<Vec<ResultRow>> {
        let mut rows = Vec::new();
        for kind in [FeatureKind::Logmel, FeatureKind::Bnf] {
            let name = match kind {
                FeatureKind::Bnf => "ML-BNF",
                _ => "logmel",
            };
            let cfg = self.experiment_config(
                name,
                &self.languages,
                mode,
                kind,
                false,
                settings,
                seed,
                out.join(format!("features-{}-{mode:?}", kind.name()).to_lowercase()),
            );
            rows.extend(run_experiment(&cfg)?.rows);
        }
        Ok(rows)
    }
}
