//! Grapheme and phone inventories, tokenization, and merging across languages.

use ctcpoly::unitset::{
    build_grapheme_inventory, detokenize, merge_inventories, tokenize, Lexicon, UnitInventory,
};

fn main() -> ctcpoly::Result<()> {
    let german = ["Straße und Bäume", "der große Hund"];
    let graphemes = build_grapheme_inventory(&german)?;
    println!("{} grapheme units (blank and boundary included)", graphemes.len());
    let ids = tokenize(german[0], &graphemes, None)?;
    println!("{:?} -> {ids:?} -> {:?}", german[0], detokenize(&ids, &graphemes)?);

    let mut lexicon = Lexicon::new();
    lexicon.insert("hund", &["h", "U", "n", "t"])?;
    lexicon.insert("der", &["d", "e:", "6"])?;
    let phones = UnitInventory::from_lexicon(&lexicon)?;
    let ids = tokenize("der hund", &phones, Some(&lexicon))?;
    println!("phone ids {ids:?} -> {}", detokenize(&ids, &phones)?);

    // one output layer for several languages: union of the unit sets
    let french = build_grapheme_inventory(&["où est la forêt"])?;
    let merged = merge_inventories(&[graphemes, french])?;
    println!("merged inventory: {} units, fingerprint {}", merged.len(), &merged.fingerprint()[..12]);
    Ok(())
}
