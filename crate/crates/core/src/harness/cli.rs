use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use super::experiment::{run_experiment, train_system, ExperimentConfig, Featurizer};
use super::manifest::{ingest, read_manifest, read_targets, write_manifest, IngestFilters, ManifestEntry};
use super::synth::{generate_corpus, pseudo_languages, CorpusShape, PseudoLanguageConfig};
use crate::decoder::{greedy_decode, prefix_beam_decode, train_char_lm, BeamConfig, CharNgramLm};
use crate::error::{Error, Result};
use crate::features::{
    train_bottleneck_net, train_lfv_net, BottleneckNet, BottleneckNetConfig, FeatureKind, FeatureMatrix,
    LabeledFrames,
};
use crate::network::AcousticModel;
use crate::optim::TrainConfig;
use crate::scoring::{edit_distance, split_words, ErrorBreakdown};
use crate::unitset::{detokenize, normalize_whitespace, Lexicon, UnitInventory, WORD_BOUNDARY_SYMBOL};

#[derive(Debug, Parser)]
#[command(name = "ctcpoly", version, about = "Multilingual CTC speech recognition at desk scale")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic multi-language corpus
    GenData(GenData),
    /// Compute log-Mel, BNF or LFV features for a manifest
    Featurize(Featurize),
    /// Train a bottleneck-feature network on frame targets
    TrainBnf(TrainBnf),
    /// Train a language-feature-vector network on BNFs
    TrainLfv(TrainLfv),
    /// Train an acoustic model from an experiment config
    Train(ConfigArgs),
    /// Transcribe the utterances of a manifest
    Decode(Decode),
    /// Score hypotheses against references
    Score(Score),
    /// Run a full experiment: features, training, decoding, scoring
    Experiment(ConfigArgs),
}

#[derive(Debug, clap::Args)]
struct GenData {
    /// Output directory
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 2)]
    languages: usize,
    /// Utterances per language
    #[arg(long, default_value_t = 200)]
    utts: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Feature dimension
    #[arg(long, default_value_t = 16)]
    dim: usize,
    /// Fraction of units realized with another unit's prototype
    #[arg(long, default_value_t = 0.5)]
    conflict_rate: f64,
    #[arg(long, default_value_t = 1.0)]
    noise: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum KindArg {
    Logmel,
    Bnf,
    Lfv,
}

#[derive(Debug, clap::Args)]
struct Featurize {
    #[arg(long)]
    manifest: PathBuf,
    /// Directory for feature files and the new manifest
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = KindArg::Logmel)]
    kind: KindArg,
    #[arg(long)]
    bnf_net: Option<PathBuf>,
    #[arg(long)]
    lfv_net: Option<PathBuf>,
    #[arg(long, default_value_t = 40)]
    n_mels: usize,
}

#[derive(Debug, clap::Args)]
struct NetArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Checkpoint to write
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 3)]
    layers: usize,
    #[arg(long)]
    width: Option<usize>,
    #[arg(long)]
    bottleneck: Option<usize>,
    /// 1-based position of the bottleneck layer
    #[arg(long)]
    position: Option<usize>,
    #[arg(long, default_value_t = 4)]
    epochs: usize,
    #[arg(long, default_value_t = 0.01)]
    learning_rate: f64,
    #[arg(long, default_value_t = 64)]
    batch_size: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl NetArgs {
    fn apply(&self, mut cfg: BottleneckNetConfig) -> BottleneckNetConfig {
        cfg.n_layers = self.layers;
        cfg.layer_width = self.width.unwrap_or(cfg.layer_width);
        cfg.bottleneck_dim = self.bottleneck.unwrap_or(cfg.bottleneck_dim);
        cfg.bottleneck_position = self.position.unwrap_or(cfg.bottleneck_position.min(self.layers));
        cfg
    }

    fn train(&self) -> TrainConfig {
        TrainConfig {
            learning_rate: self.learning_rate,
            batch_size: self.batch_size,
            epochs: self.epochs,
            seed: self.seed,
            ..Default::default()
        }
    }
}

#[derive(Debug, clap::Args)]
struct TrainBnf {
    #[command(flatten)]
    net: NetArgs,
    /// Number of target classes; defaults to the largest target id plus one
    #[arg(long)]
    n_targets: Option<usize>,
}

#[derive(Debug, clap::Args)]
struct TrainLfv {
    #[command(flatten)]
    net: NetArgs,
    /// Bottleneck net applied when the manifest holds log-Mel features
    #[arg(long)]
    bnf_net: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
struct ConfigArgs {
    /// Experiment config (TOML)
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config seed
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, clap::Args)]
struct Decode {
    /// Acoustic model checkpoint
    #[arg(long)]
    model: PathBuf,
    /// Unit inventory written at training time
    #[arg(long)]
    units: PathBuf,
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long, value_enum, default_value_t = KindArg::Logmel)]
    kind: KindArg,
    #[arg(long)]
    bnf_net: Option<PathBuf>,
    /// Feed LFVs from this net to the model
    #[arg(long)]
    lfv_net: Option<PathBuf>,
    /// Prefix beam width; greedy decoding when unset
    #[arg(long)]
    beam: Option<usize>,
    /// Character LM file for beam search
    #[arg(long, requires = "beam")]
    lm: Option<PathBuf>,
    /// Train the LM on this manifest's transcripts instead
    #[arg(long, requires = "beam", conflicts_with = "lm")]
    lm_corpus: Option<PathBuf>,
    #[arg(long, default_value_t = 3)]
    lm_order: usize,
    /// Pronunciation lexicon, for phone-mode LM training
    #[arg(long)]
    lexicon: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 0.5)]
    beta: f64,
    /// Write `id<TAB>hypothesis` lines here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Metric {
    Ter,
    Wer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Tokens {
    /// Every character is a token; whitespace runs are word boundaries
    Chars,
    /// Whitespace-separated tokens; the boundary marker separates words
    Whitespace,
}

#[derive(Debug, clap::Args)]
struct Score {
    /// References, one per line
    #[arg(long = "ref")]
    reference: PathBuf,
    /// Hypotheses, one per line
    #[arg(long)]
    hyp: PathBuf,
    #[arg(long, value_enum, default_value_t = Metric::Ter)]
    metric: Metric,
    #[arg(long, value_enum, default_value_t = Tokens::Chars)]
    tokens: Tokens,
}

/// Run the command line; returns the process exit code.
pub fn cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::GenData(a) => gen_data(a),
        Command::Featurize(a) => featurize(a),
        Command::TrainBnf(a) => train_bnf(a),
        Command::TrainLfv(a) => train_lfv(a),
        Command::Train(a) => {
            let cfg = load_config(&a)?;
            let sys = train_system(&cfg)?;
            let mut out = std::io::stdout().lock();
            for e in &sys.report.epochs {
                writeln!(out, "{}\t{:.6}", e.epoch, e.mean_loss)?;
            }
            Ok(())
        }
        Command::Decode(a) => decode(a),
        Command::Score(a) => score(a),
        Command::Experiment(a) => {
            let cfg = load_config(&a)?;
            let result = run_experiment(&cfg)?;
            let mut out = std::io::stdout().lock();
            for r in &result.rows {
                writeln!(out, "{}", r.to_tsv())?;
            }
            Ok(())
        }
    }
}

fn load_config(a: &ConfigArgs) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(&a.config)?;
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn gen_data(a: GenData) -> Result<()> {
    let cfg = PseudoLanguageConfig {
        n_languages: a.languages,
        dim: a.dim,
        conflict_rate: a.conflict_rate,
        noise: a.noise,
        ..Default::default()
    };
    let specs = pseudo_languages(&cfg, a.seed)?;
    let shape = CorpusShape {
        utts_per_language: a.utts,
        ..Default::default()
    };
    let corpus = generate_corpus(&specs, &shape, a.seed, &a.out)?;
    println!("{}", corpus.manifest.display());
    Ok(())
}

fn kind_of(k: KindArg) -> FeatureKind {
    match k {
        KindArg::Logmel => FeatureKind::Logmel,
        KindArg::Bnf => FeatureKind::Bnf,
        KindArg::Lfv => FeatureKind::Lfv,
    }
}

fn featurizer(n_mels: usize, bnf: Option<&PathBuf>, lfv: Option<&PathBuf>) -> Result<Featurizer> {
    Ok(Featurizer {
        n_mels,
        bnf: bnf.map(BottleneckNet::load).transpose()?,
        lfv: lfv.map(crate::features::LfvNet::load).transpose()?,
    })
}

fn featurize(a: Featurize) -> Result<()> {
    let f = featurizer(a.n_mels, a.bnf_net.as_ref(), a.lfv_net.as_ref())?;
    fs::create_dir_all(&a.out)?;
    let entries = read_manifest(&a.manifest)?;
    let mut out = Vec::with_capacity(entries.len());
    for e in entries {
        let feat = match a.kind {
            KindArg::Logmel => f.features(&e.source, FeatureKind::Logmel, false)?.0,
            KindArg::Bnf => f.features(&e.source, FeatureKind::Bnf, false)?.0,
            KindArg::Lfv => f.features(&e.source, FeatureKind::Bnf, true)?.1.expect("requested"),
        };
        let name = PathBuf::from(format!("{}.{}.feat", e.utterance_id, kind_of(a.kind).name()));
        feat.save(a.out.join(&name))?;
        out.push(ManifestEntry {
            source: name,
            targets: e.targets.as_ref().map(|t| fs::canonicalize(t).unwrap_or_else(|_| t.clone())),
            ..e
        });
    }
    write_manifest(a.out.join("manifest.jsonl"), &out)?;
    println!("{}", a.out.join("manifest.jsonl").display());
    Ok(())
}

fn train_bnf(a: TrainBnf) -> Result<()> {
    let entries = ingest(&a.net.manifest, &IngestFilters::default())?.entries;
    let corpus = entries
        .iter()
        .map(|e| {
            let targets = e
                .targets
                .as_ref()
                .ok_or_else(|| Error::InvalidConfig(format!("{} has no frame targets", e.utterance_id)))?;
            Ok(LabeledFrames {
                features: FeatureMatrix::load(&e.source)?,
                targets: read_targets(targets)?,
                language: e.language.clone(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let n_targets = a.n_targets.unwrap_or_else(|| {
        corpus.iter().flat_map(|u| u.targets.iter()).max().map_or(1, |&m| m as usize + 1)
    });
    let cfg = a.net.apply(BottleneckNetConfig::desk_bnf(n_targets));
    let trained = train_bottleneck_net(&corpus, &cfg, &a.net.train())?;
    trained.net.save(&a.net.out)?;
    print_losses(&trained.loss_history)
}

fn train_lfv(a: TrainLfv) -> Result<()> {
    let entries = ingest(&a.net.manifest, &IngestFilters::default())?.entries;
    let f = featurizer(40, a.bnf_net.as_ref(), None)?;
    let corpus = entries
        .iter()
        .map(|e| Ok((f.bnf(&f.base(&e.source)?)?, e.language.clone())))
        .collect::<Result<Vec<_>>>()?;
    let cfg = a.net.apply(BottleneckNetConfig::desk_lfv(2));
    let trained = train_lfv_net(&corpus, &cfg, &a.net.train())?;
    trained.net.save(&a.net.out)?;
    print_losses(&trained.loss_history)
}

fn print_losses(history: &[f64]) -> Result<()> {
    let mut out = std::io::stdout().lock();
    for (i, l) in history.iter().enumerate() {
        writeln!(out, "{}\t{l:.6}", i + 1)?;
    }
    Ok(())
}

fn decode(a: Decode) -> Result<()> {
    let model = AcousticModel::load(&a.model)?;
    let inventory = UnitInventory::load(&a.units)?;
    if inventory.len() != model.config().output_dim {
        return Err(Error::DimMismatch {
            layer: "output layer vs unit inventory".into(),
            expected: model.config().output_dim,
            found: inventory.len(),
        });
    }
    let lm = match (&a.lm, &a.lm_corpus) {
        (Some(p), _) => Some(CharNgramLm::load(p, &inventory)?),
        (None, Some(m)) => {
            let lexicon = a.lexicon.as_ref().map(Lexicon::load).transpose()?;
            let transcripts: Vec<String> = read_manifest(m)?.into_iter().map(|e| e.transcript).collect();
            Some(train_char_lm(&transcripts, &inventory, lexicon.as_ref(), a.lm_order, 1.0)?)
        }
        (None, None) => None,
    };
    let f = featurizer(40, a.bnf_net.as_ref(), a.lfv_net.as_ref())?;
    let entries = read_manifest(&a.manifest)?;
    let mut text = String::new();
    for e in &entries {
        let (feat, lfv) = f.features(&e.source, kind_of(a.kind), a.lfv_net.is_some())?;
        let logits = model.forward(&feat, lfv.as_ref())?;
        let ids = match a.beam {
            Some(beam) => prefix_beam_decode(
                logits.view(),
                lm.as_ref(),
                &BeamConfig {
                    beam,
                    alpha: a.alpha,
                    beta: a.beta,
                },
            )?,
            None => greedy_decode(logits.view())?,
        };
        text.push_str(&format!("{}\t{}\n", e.utterance_id, detokenize(&ids, &inventory)?));
    }
    match &a.out {
        Some(p) => fs::write(p, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn lines(path: &Path) -> Result<Vec<String>> {
    Ok(fs::read_to_string(path)?.lines().map(str::to_owned).collect())
}

/// Unit tokens of one transcript line.
fn units(line: &str, tokens: Tokens) -> Vec<String> {
    match tokens {
        Tokens::Chars => normalize_whitespace(line).chars().map(String::from).collect(),
        Tokens::Whitespace => line.split_whitespace().map(str::to_owned).collect(),
    }
}

/// Word tokens of one transcript line.
fn words(line: &str, tokens: Tokens) -> Vec<String> {
    match tokens {
        Tokens::Chars => split_words(line).into_iter().map(str::to_owned).collect(),
        Tokens::Whitespace => units(line, tokens)
            .split(|t| t == WORD_BOUNDARY_SYMBOL)
            .filter(|w| !w.is_empty())
            .map(|w| w.join(" "))
            .collect(),
    }
}

fn score(a: Score) -> Result<()> {
    let refs = lines(&a.reference)?;
    let hyps = lines(&a.hyp)?;
    if refs.len() != hyps.len() {
        return Err(Error::LengthMismatch {
            refs: refs.len(),
            hyps: hyps.len(),
        });
    }
    let total: ErrorBreakdown = refs
        .iter()
        .zip(&hyps)
        .map(|(r, h)| match a.metric {
            Metric::Ter => edit_distance(&units(r, a.tokens), &units(h, a.tokens)),
            Metric::Wer => edit_distance(&words(r, a.tokens), &words(h, a.tokens)),
        })
        .sum();
    let name = match a.metric {
        Metric::Ter => "TER",
        Metric::Wer => "WER",
    };
    println!(
        "{name} {:.1}% (S={} I={} D={} N={})",
        total.percent(),
        total.substitutions,
        total.insertions,
        total.deletions,
        total.ref_len
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> i32 {
        cli(std::iter::once("ctcpoly").chain(args.iter().copied()))
    }

    #[test]
    fn help_and_unknown_flags() {
        for sub in ["gen-data", "featurize", "train-bnf", "train-lfv", "train", "decode", "score", "experiment"] {
            assert_eq!(run(&[sub, "--help"]), 0, "{sub}");
            assert_eq!(run(&[sub, "--no-such-flag"]), 2, "{sub}");
        }
        assert_eq!(run(&["frobnicate"]), 2);
        assert_eq!(run(&[]), 2);
    }

    #[test]
    fn score_identical_files() {
        let dir = tempfile::tempdir().unwrap();
        let r = dir.path().join("r.txt");
        fs::write(&r, "hello world\nfoo\n").unwrap();
        let r = r.to_str().unwrap();
        assert_eq!(run(&["score", "--ref", r, "--hyp", r, "--metric", "ter"]), 0);
        assert_eq!(run(&["score", "--ref", r, "--hyp", "/no/such/file"]), 1);
    }

    #[test]
    fn token_splitting() {
        assert_eq!(units("ab  c", Tokens::Chars), ["a", "b", " ", "c"]);
        assert_eq!(words("a b <wb> c", Tokens::Whitespace), ["a b", "c"]);
        assert_eq!(words(" ab c ", Tokens::Chars), ["ab", "c"]);
    }
}
