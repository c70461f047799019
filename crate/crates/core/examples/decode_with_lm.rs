//! Greedy decoding versus prefix beam search with a character n-gram LM on
//! made-up, ambiguous posteriors.

use ctcpoly::decoder::{greedy_decode, prefix_beam_search, train_char_lm, BeamConfig};
use ctcpoly::unitset::{build_grapheme_inventory, detokenize, tokenize};
use ndarray::Array2;

fn main() -> ctcpoly::Result<()> {
    let corpus = ["the cat", "the hat", "a cat sat", "the cat sat", "that cat"];
    let inv = build_grapheme_inventory(&corpus)?;
    let lm = train_char_lm(&corpus, &inv, None, 3, 0.1)?;

    // frames favouring "thc cat" with "e" a close second at frame 2
    let target = tokenize("the cat", &inv, None)?;
    let e = inv.id_of("e").unwrap() as usize;
    let c = inv.id_of("c").unwrap() as usize;
    let mut logits = Array2::from_elem((target.len() * 2, inv.len()), -3.0);
    for (i, &id) in target.iter().enumerate() {
        logits[[2 * i, id as usize]] = 2.0;
        logits[[2 * i + 1, 0]] = 2.0;
    }
    logits[[4, c]] = 2.2;
    logits[[4, e]] = 1.9;

    let greedy = greedy_decode(logits.view())?;
    println!("greedy:      {:?}", detokenize(&greedy, &inv)?);
    let plain = BeamConfig { beam: 8, alpha: 0.0, beta: 0.0 };
    let with_lm = BeamConfig { beam: 8, alpha: 1.0, beta: 0.5 };
    for (name, lm, cfg) in [("beam", None, plain), ("beam + LM", Some(&lm), with_lm)] {
        let hyps = prefix_beam_search(logits.view(), lm, &cfg)?;
        println!("{name:<12} {:?} (score {:.2})", detokenize(&hyps[0].prefix, &inv)?, hyps[0].score(cfg.beta));
    }
    Ok(())
}
