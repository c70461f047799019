//! A config-driven experiment: ingest, split, featurize, train, decode and
//! score, with artifacts written to the output directory.

use ctcpoly::harness::{generate_corpus, pseudo_languages, run_experiment, CorpusShape, ExperimentConfig, PseudoLanguageConfig};
use ctcpoly::scoring::report;

const CONFIG: &str = r#"
name = "ML"
seed = 1
output_dir = "run"

[data]
manifest = "data/manifest.jsonl"
lexicon = "data/lexicon.txt"
languages = ["aa", "bb"]
mode = "phone"

[train]
learning_rate = 0.03
epochs = 8
batch_size = 10
max_grad_norm = 10.0

[decode]
lm_order = 3

[decode.beam]
beam = 8
"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let specs = pseudo_languages(&PseudoLanguageConfig::default(), 2)?;
    generate_corpus(&specs, &CorpusShape { utts_per_language: 100, ..Default::default() }, 2, dir.path().join("data"))?;
    std::fs::write(dir.path().join("exp.toml"), CONFIG)?;

    // relative paths resolve against the config file; CTCPOLY_SEED overrides `seed`
    let cfg = ExperimentConfig::load(dir.path().join("exp.toml"))?;
    let result = run_experiment(&cfg)?;
    println!("{}", report(&result.rows).table);
    println!("loss per epoch {:.2?}", result.train.loss_history);
    for t in result.transcriptions.iter().take(3) {
        println!("{}  ref {:?}\n{}  hyp {:?}", t.utterance_id, t.reference, " ".repeat(t.utterance_id.len()), t.hypothesis);
    }
    let mut files: Vec<String> = std::fs::read_dir(&cfg.output_dir)?
        .map(|e| e.map(|e| e.file_name().to_string_lossy().into_owned()))
        .collect::<Result<_, _>>()?;
    files.sort();
    println!("artifacts: {}", files.join(", "));
    Ok(())
}
