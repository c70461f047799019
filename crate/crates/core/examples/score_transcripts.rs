//! Token and word error rates with their breakdown, and a results table.

use ctcpoly::scoring::{edit_distance, report, ter, wer, ResultRow};

fn main() -> ctcpoly::Result<()> {
    let e = edit_distance(&"kitten".chars().collect::<Vec<_>>(), &"sitting".chars().collect::<Vec<_>>());
    println!("kitten → sitting: S={} I={} D={} ({} edits)", e.substitutions, e.insertions, e.deletions, e.errors());

    let refs = vec![vec![3, 4, 1, 5, 6], vec![7, 8]];
    let hyps = vec![vec![3, 1, 5, 5, 6], vec![7, 8, 9]];
    let t = ter(&refs, &hyps)?;
    println!("TER {:.1}% over {} reference tokens", t.percent(), t.ref_len);

    let w_de = wer(&["das ist gut", "ja"], &["das is gut", "ja"])?;
    let w_fr = wer(&["c'est bon"], &["c'est bon"])?;
    let rows = [
        ResultRow::new("ML", "de", "WER", w_de),
        ResultRow::new("ML", "fr", "WER", w_fr),
        ResultRow::new("ML+LFV", "de", "WER", w_fr),
    ];
    println!("{}", report(&rows).table);
    for r in &rows {
        println!("{}", r.to_tsv());
    }
    Ok(())
}
