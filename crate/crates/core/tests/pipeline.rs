use std::fs;
use std::path::Path;

use ctcpoly::features::FeatureKind;
use ctcpoly::harness::experiment::{DataConfig, DecodeConfig, FeatureConfig, ScoreConfig};
use ctcpoly::harness::{
    generate_corpus, prepare_benchmark, pseudo_languages, read_manifest, run_experiment, write_manifest, BenchmarkConfig,
    CorpusShape, ExperimentConfig, PseudoLanguageConfig,
};
use ctcpoly::optim::TrainConfig;
use ctcpoly::unitset::UnitMode;
use ctcpoly::Error;

fn small_corpus(dir: &Path, seed: u64) -> ctcpoly::harness::synth::GeneratedCorpus {
    let specs = pseudo_languages(&PseudoLanguageConfig::default(), seed).unwrap();
    let shape = CorpusShape {
        utts_per_language: 20,
        ..Default::default()
    };
    generate_corpus(&specs, &shape, seed, dir).unwrap()
}

fn config(manifest: &Path, out: &Path) -> ExperimentConfig {
    ExperimentConfig {
        name: "sys".into(),
        seed: 1,
        output_dir: out.to_path_buf(),
        data: DataConfig {
            manifest: manifest.to_path_buf(),
            lexicon: None,
            languages: vec!["aa".into(), "bb".into()],
            mode: UnitMode::Grapheme,
            held_out: 0.2,
            split_seed: 0,
            min_duration: 1.0,
            max_symbols: 639,
        },
        features: FeatureConfig::default(),
        model: Default::default(),
        train: TrainConfig {
            learning_rate: 0.03,
            epochs: 2,
            max_grad_norm: Some(10.0),
            ..Default::default()
        },
        decode: DecodeConfig::default(),
        score: ScoreConfig::default(),
    }
}

#[test]
fn grapheme_run_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = small_corpus(&dir.path().join("data"), 3);
    let out = dir.path().join("run");
    let result = run_experiment(&config(&corpus.manifest, &out)).unwrap();

    assert_eq!(result.rows.len(), 2);
    assert!(result.rows.iter().all(|r| r.metric == "TER" && r.breakdown.ref_len > 0));
    assert_eq!(result.train.loss_history.len(), 2);
    for f in ["config.toml", "units.txt", "loss.tsv", "model.ckpt", "hypotheses.tsv", "results.tsv", "log.txt"] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    let results = fs::read_to_string(out.join("results.tsv")).unwrap();
    assert_eq!(results.lines().count(), 2);
    let hyps = fs::read_to_string(out.join("hypotheses.tsv")).unwrap();
    assert_eq!(hyps.lines().count(), result.transcriptions.len() + 1);

    // the saved config reproduces the run
    let reloaded = ExperimentConfig::load(out.join("config.toml")).unwrap();
    assert_eq!(reloaded.train, config(&corpus.manifest, &out).train);
}

#[test]
fn phone_mode_with_lm_reports_wer() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = small_corpus(&dir.path().join("data"), 4);
    let mut cfg = config(&corpus.manifest, &dir.path().join("run"));
    cfg.data.mode = UnitMode::Phone;
    cfg.data.lexicon = Some(corpus.lexicon.clone());
    cfg.decode.lm_order = Some(3);
    cfg.decode.beam.beam = 4;
    let result = run_experiment(&cfg).unwrap();
    let metrics: Vec<&str> = result.rows.iter().map(|r| r.metric.as_str()).collect();
    assert_eq!(metrics, ["TER", "TER", "WER", "WER"]);
}

#[test]
fn failing_stage_is_named_and_logged() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = small_corpus(&dir.path().join("data"), 5);
    let mut entries = read_manifest(&corpus.manifest).unwrap();
    entries[0].source = dir.path().join("missing.feat");
    let broken = dir.path().join("broken.jsonl");
    write_manifest(&broken, &entries).unwrap();

    let out = dir.path().join("run");
    let err = run_experiment(&config(&broken, &out)).unwrap_err();
    assert!(matches!(err, Error::Stage { stage: "features", .. }), "{err}");
    let log = fs::read_to_string(out.join("log.txt")).unwrap();
    assert!(log.contains("[ingest] done"));
    assert!(log.contains("[features] failed"));
}

#[test]
fn unknown_language_fails_at_ingest() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = small_corpus(&dir.path().join("data"), 6);
    let mut cfg = config(&corpus.manifest, &dir.path().join("run"));
    cfg.data.languages.push("zz".into());
    let err = run_experiment(&cfg).unwrap_err();
    assert!(matches!(err, Error::Stage { stage: "ingest", .. }), "{err}");
}

#[test]
fn lfv_system_on_benchmark() {
    let dir = tempfile::tempdir().unwrap();
    let mut bc = BenchmarkConfig::default();
    bc.languages.n_languages = 2;
    bc.shape.utts_per_language = 20;
    bc.bnf_train.epochs = 1;
    bc.lfv_train.epochs = 1;
    let bench = prepare_benchmark(&bc, 7, dir.path()).unwrap();
    assert!(bench.bnf_net.exists() && bench.lfv_net.exists());
    assert_eq!(bench.languages, ["aa", "bb"]);

    let mut settings = ctcpoly::harness::RecipeSettings::default();
    settings.train.epochs = 1;
    let cfg = bench.experiment_config(
        "ML+LFV",
        &bench.languages,
        UnitMode::Grapheme,
        FeatureKind::Bnf,
        true,
        &settings,
        7,
        dir.path().join("lfv"),
    );
    let result = run_experiment(&cfg).unwrap();
    assert!(result.model.config().lfv_dim > 0);
    assert_eq!(result.rows.len(), 2);
}
