//! Monolingual, multilingual and multilingual+LFV systems on a generated
//! four-language benchmark, plus log-Mel against BNF inputs.
//!
//! `cargo run --release --example benchmark_conditions [seed]`; takes a few
//! minutes on one core.

use ctcpoly::harness::{prepare_benchmark, BenchmarkConfig, RecipeSettings};
use ctcpoly::scoring::report;
use ctcpoly::unitset::UnitMode;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed: u64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(11);
    let dir = tempfile::tempdir()?;
    let bench = prepare_benchmark(&BenchmarkConfig::default(), seed, dir.path())?;
    println!(
        "LFV net: held-out frame accuracy {:.2}, utterance distance within {:.2} / between {:.2}",
        bench.lfv_accuracy, bench.separability.within, bench.separability.between
    );

    let settings = RecipeSettings {
        monolingual_epochs: Some(16),
        ..Default::default()
    };
    let rows = bench.condition_table(UnitMode::Grapheme, &settings, seed, dir.path())?;
    println!("\n{}", report(&rows).table);
    let rows = bench.feature_comparison(UnitMode::Grapheme, &settings, seed, dir.path())?;
    println!("\n{}", report(&rows).table);
    Ok(())
}
