//! Manifests, the synthetic corpus generator, experiment runner and CLI.

pub mod cli;
pub mod experiment;
pub mod manifest;
pub mod recipes;
pub mod synth;

pub use cli::cli;
pub use experiment::{run_experiment, split_held_out, train_system, ExperimentConfig, ExperimentResult, Featurizer, TrainedSystem};
pub use manifest::{ingest, read_manifest, write_manifest, IngestFilters, IngestReport, ManifestEntry};
pub use recipes::{prepare_benchmark, Benchmark, BenchmarkConfig, Condition, RecipeSettings};
pub use synth::{
    generate_corpus, pseudo_languages, synthesize, CorpusShape, PseudoLanguageConfig, SyntheticLanguageSpec,
    SyntheticUnit, SyntheticUtterance,
};
