//! Generate pseudo-languages with conflicting unit realizations and write
//! them as a corpus with manifest, lexicon and frame targets.

use ctcpoly::harness::{generate_corpus, ingest, pseudo_languages, CorpusShape, IngestFilters, PseudoLanguageConfig};

fn main() -> ctcpoly::Result<()> {
    let cfg = PseudoLanguageConfig {
        n_languages: 3,
        ..Default::default()
    };
    let specs = pseudo_languages(&cfg, 1)?;
    for s in &specs {
        let words: Vec<&str> = s.words.iter().take(5).map(|w| w.spelling.as_str()).collect();
        println!("{}: {} units, words {}", s.code, s.units.len(), words.join(" "));
    }

    let dir = tempfile::tempdir().map_err(ctcpoly::Error::Io)?;
    let shape = CorpusShape {
        utts_per_language: 10,
        ..Default::default()
    };
    let corpus = generate_corpus(&specs, &shape, 1, dir.path())?;
    let report = ingest(&corpus.manifest, &IngestFilters::default())?;
    println!("{} utterances kept, for example:", report.entries.len());
    for e in report.entries.iter().step_by(10) {
        println!("  {} [{}] {:.2}s {:?}", e.utterance_id, e.language, e.duration, e.transcript);
    }
    Ok(())
}
