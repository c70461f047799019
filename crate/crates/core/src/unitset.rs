//! Acoustic modeling units and the global unit inventory.
//!
//! An inventory always starts with the two reserved units: the CTC blank at
//! id 0 and the word-boundary marker at id 1. Content units (graphemes or
//! phones) follow in code-point order, so that two inventories built from
//! the same symbols are identical no matter how they were assembled.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};

pub const BLANK_ID: u32 = 0;
pub const WORD_BOUNDARY_ID: u32 = 1;
pub const BLANK_SYMBOL: &str = "<blk>";
pub const WORD_BOUNDARY_SYMBOL: &str = "<wb>";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnitKind {
    Blank,
    Grapheme,
    Phone,
    WordBoundary,
}

impl fmt::Display for UnitKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            UnitKind::Blank => "blank",
            UnitKind::Grapheme => "grapheme",
            UnitKind::Phone => "phone",
            UnitKind::WordBoundary => "word-boundary",
        })
    }
}

impl FromStr for UnitKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "blank" => Ok(UnitKind::Blank),
            "grapheme" => Ok(UnitKind::Grapheme),
            "phone" => Ok(UnitKind::Phone),
            "word-boundary" => Ok(UnitKind::WordBoundary),
            other => Err(Error::InvalidInventory(format!("unknown unit kind {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnitMode {
    Grapheme,
    Phone,
}

impl UnitMode {
    fn content_kind(self) -> UnitKind {
        match self {
            UnitMode::Grapheme => UnitKind::Grapheme,
            UnitMode::Phone => UnitKind::Phone,
        }
    }
}

impl FromStr for UnitMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "grapheme" => Ok(UnitMode::Grapheme),
            "phone" => Ok(UnitMode::Phone),
            other => Err(Error::InvalidConfig(format!("unknown unit mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Unit {
    pub id: u32,
    pub symbol: String,
    pub kind: UnitKind,
    pub languages: BTreeSet<String>,
}

/// NFC-normalize and lowercase a transcript.
pub fn normalize_text(s: &str) -> String {
    s.nfc().collect::<String>().to_lowercase()
}

/// Collapse runs of whitespace into single spaces and trim the ends.
pub fn normalize_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Ordered global symbol set shared across languages.
#[derive(Debug, Clone)]
pub struct UnitInventory {
    units: Vec<Unit>,
    mode: UnitMode,
    index: HashMap<String, u32>,
}

impl PartialEq for UnitInventory {
    fn eq(&self, other: &Self) -> bool {
        self.mode == other.mode && self.units == other.units
    }
}

impl UnitInventory {
    /// Canonical construction: reserved units first, then content symbols in
    /// code-point order.
    fn from_symbols(mode: UnitMode, symbols: BTreeMap<String, BTreeSet<String>>) -> Result<Self> {
        let mut all_langs = BTreeSet::new();
        for langs in symbols.values() {
            all_langs.extend(langs.iter().cloned());
        }
        let mut units = vec![
            Unit {
                id: BLANK_ID,
                symbol: BLANK_SYMBOL.to_string(),
                kind: UnitKind::Blank,
                languages: all_langs.clone(),
            },
            Unit {
                id: WORD_BOUNDARY_ID,
                symbol: WORD_BOUNDARY_SYMBOL.to_string(),
                kind: UnitKind::WordBoundary,
                languages: all_langs,
            },
        ];
        for (symbol, languages) in symbols {
            if symbol.is_empty() || symbol.chars().any(char::is_whitespace) {
                return Err(Error::InvalidInventory(format!("bad unit symbol {symbol:?}")));
            }
            if symbol == BLANK_SYMBOL || symbol == WORD_BOUNDARY_SYMBOL {
                return Err(Error::InvalidInventory(format!("{symbol} is reserved")));
            }
            units.push(Unit {
                id: units.len() as u32,
                symbol,
                kind: mode.content_kind(),
                languages,
            });
        }
        Ok(Self::with_units(mode, units))
    }

    fn with_units(mode: UnitMode, units: Vec<Unit>) -> Self {
        let index = units.iter().map(|u| (u.symbol.clone(), u.id)).collect();
        Self { units, mode, index }
    }

    /// Phone inventory covering every phone used by `lexicon`.
    pub fn from_lexicon(lexicon: &Lexicon) -> Result<Self> {
        let symbols = lexicon
            .entries
            .values()
            .flatten()
            .map(|p| (p.clone(), BTreeSet::new()))
            .collect();
        Self::from_symbols(UnitMode::Phone, symbols)
    }

    /// Phone inventory from an explicit phone list.
    pub fn from_phones<S: AsRef<str>>(phones: &[S]) -> Result<Self> {
        let symbols = phones
            .iter()
            .map(|p| (p.as_ref().to_string(), BTreeSet::new()))
            .collect();
        Self::from_symbols(UnitMode::Phone, symbols)
    }

    /// Tag every unit as originating from `language`.
    pub fn tag_language(mut self, language: &str) -> Self {
        for unit in &mut self.units {
            unit.languages.insert(language.to_string());
        }
        self
    }

    pub fn mode(&self) -> UnitMode {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }

    pub fn units(&self) -> &[Unit] {
        &self.units
    }

    pub fn id_of(&self, symbol: &str) -> Option<u32> {
        self.index.get(symbol).copied()
    }

    pub fn symbol_of(&self, id: u32) -> Option<&str> {
        self.units.get(id as usize).map(|u| u.symbol.as_str())
    }

    pub fn unit(&self, id: u32) -> Option<&Unit> {
        self.units.get(id as usize)
    }

    /// Short stable fingerprint of the serialized inventory.
    pub fn fingerprint(&self) -> String {
        let digest = Sha256::digest(self.to_text().as_bytes());
        hex::encode(&digest[..8])
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for u in &self.units {
            let langs: Vec<&str> = u.languages.iter().map(String::as_str).collect();
            out.push_str(&format!("{}\t{}\t{}\t{}\n", u.id, u.symbol, u.kind, langs.join(",")));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut units = Vec::new();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 4 {
                return Err(Error::InvalidInventory(format!(
                    "line {}: expected 4 tab-separated fields",
                    n + 1
                )));
            }
            let id: u32 = fields[0]
                .parse()
                .map_err(|_| Error::InvalidInventory(format!("line {}: bad id", n + 1)))?;
            let languages = fields[3]
                .split(',')
                .filter(|l| !l.is_empty())
                .map(str::to_string)
                .collect();
            units.push(Unit {
                id,
                symbol: fields[1].to_string(),
                kind: fields[2].parse()?,
                languages,
            });
        }
        let mode = if units.iter().any(|u| u.kind == UnitKind::Phone) {
            UnitMode::Phone
        } else {
            UnitMode::Grapheme
        };
        let inv = Self::with_units(mode, units);
        inv.validate()?;
        Ok(inv)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_text(&fs::read_to_string(path)?)
    }

    fn validate(&self) -> Result<()> {
        for (pos, u) in self.units.iter().enumerate() {
            if u.id as usize != pos {
                return Err(Error::InvalidInventory(format!(
                    "ids must be contiguous: position {pos} has id {}",
                    u.id
                )));
            }
        }
        let blanks: Vec<u32> = self
            .units
            .iter()
            .filter(|u| u.kind == UnitKind::Blank)
            .map(|u| u.id)
            .collect();
        if blanks != [BLANK_ID] {
            return Err(Error::InvalidInventory("exactly one blank at id 0 required".into()));
        }
        let boundaries = self
            .units
            .iter()
            .filter(|u| u.kind == UnitKind::WordBoundary)
            .count();
        if boundaries != 1 {
            return Err(Error::InvalidInventory("exactly one word-boundary unit required".into()));
        }
        if self.index.len() != self.units.len() {
            return Err(Error::InvalidInventory("duplicate symbols".into()));
        }
        let content = self.mode.content_kind();
        if let Some(u) = self
            .units
            .iter()
            .find(|u| !matches!(u.kind, UnitKind::Blank | UnitKind::WordBoundary) && u.kind != content)
        {
            return Err(Error::InvalidInventory(format!("mixed unit kinds at {}", u.symbol)));
        }
        Ok(())
    }

    fn content_symbols(&self) -> impl Iterator<Item = &Unit> {
        self.units
            .iter()
            .filter(|u| !matches!(u.kind, UnitKind::Blank | UnitKind::WordBoundary))
    }
}

/// Grapheme inventory over every distinct non-whitespace character.
pub fn build_grapheme_inventory<S: AsRef<str>>(transcripts: &[S]) -> Result<UnitInventory> {
    let mut symbols: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for t in transcripts {
        for c in normalize_text(t.as_ref()).chars().filter(|c| !c.is_whitespace()) {
            symbols.entry(c.to_string()).or_default();
        }
    }
    if symbols.is_empty() {
        return Err(Error::EmptyTranscriptSet);
    }
    UnitInventory::from_symbols(UnitMode::Grapheme, symbols)
}

/// Union of several inventories of the same mode.
pub fn merge_inventories(parts: &[UnitInventory]) -> Result<UnitInventory> {
    let first = parts
        .first()
        .ok_or_else(|| Error::InvalidInventory("nothing to merge".into()))?;
    if parts.iter().any(|p| p.mode != first.mode) {
        return Err(Error::MixedModes);
    }
    let mut symbols: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    let mut reserved_langs = BTreeSet::new();
    for part in parts {
        for u in &part.units {
            reserved_langs.extend(u.languages.iter().cloned());
        }
        for u in part.content_symbols() {
            symbols
                .entry(u.symbol.clone())
                .or_default()
                .extend(u.languages.iter().cloned());
        }
    }
    let mut merged = UnitInventory::from_symbols(first.mode, symbols)?;
    for u in &mut merged.units[..2] {
        u.languages = reserved_langs.clone();
    }
    Ok(merged)
}

/// Pronunciation dictionary: word → phone sequence.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Lexicon {
    entries: BTreeMap<String, Vec<String>>,
}

impl Lexicon {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert<S: AsRef<str>>(&mut self, word: &str, phones: &[S]) -> Result<()> {
        if phones.is_empty() {
            return Err(Error::InvalidLexicon(format!("empty pronunciation for {word:?}")));
        }
        let phones: Vec<String> = phones.iter().map(|p| p.as_ref().to_string()).collect();
        let word = normalize_text(word);
        if let Some(existing) = self.entries.get(&word) {
            if *existing != phones {
                return Err(Error::InvalidLexicon(format!(
                    "conflicting pronunciations for {word:?}"
                )));
            }
        }
        self.entries.insert(word, phones);
        Ok(())
    }

    pub fn get(&self, word: &str) -> Option<&[String]> {
        self.entries.get(word).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &[String])> {
        self.entries.iter().map(|(w, p)| (w.as_str(), p.as_slice()))
    }

    /// Every phone must resolve in `inventory`.
    pub fn validate(&self, inventory: &UnitInventory) -> Result<()> {
        for (word, phones) in &self.entries {
            for p in phones {
                if inventory.id_of(p).is_none() {
                    return Err(Error::InvalidLexicon(format!(
                        "phone {p:?} of {word:?} not in inventory"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn merge(&mut self, other: &Lexicon) -> Result<()> {
        for (w, p) in &other.entries {
            self.insert(w, p)?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        self.entries
            .iter()
            .map(|(w, p)| format!("{w}\t{}\n", p.join(" ")))
            .collect()
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lex = Lexicon::new();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (word, pron) = line
                .split_once('\t')
                .ok_or_else(|| Error::InvalidLexicon(format!("line {}: missing tab", n + 1)))?;
            let phones: Vec<&str> = pron.split_whitespace().collect();
            lex.insert(word, &phones)?;
        }
        Ok(lex)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_text(&fs::read_to_string(path)?)
    }
}

/// Transcript → unit ids, words joined by the word-boundary unit.
pub fn tokenize(
    transcript: &str,
    inventory: &UnitInventory,
    lexicon: Option<&Lexicon>,
) -> Result<Vec<u32>> {
    let text = normalize_text(transcript);
    if text.trim().is_empty() {
        return Err(Error::EmptyTranscript);
    }
    let mut ids = Vec::new();
    match inventory.mode {
        UnitMode::Grapheme => {
            let mut pending_boundary = false;
            for (pos, c) in text.chars().enumerate() {
                if c.is_whitespace() {
                    pending_boundary = !ids.is_empty();
                    continue;
                }
                if pending_boundary {
                    ids.push(WORD_BOUNDARY_ID);
                    pending_boundary = false;
                }
                let mut buf = [0u8; 4];
                let id = inventory
                    .id_of(c.encode_utf8(&mut buf))
                    .ok_or_else(|| Error::UnknownToken {
                        kind: "character",
                        token: c.to_string(),
                        position: pos,
                    })?;
                ids.push(id);
            }
        }
        UnitMode::Phone => {
            let lexicon = lexicon
                .ok_or_else(|| Error::InvalidConfig("phone mode requires a lexicon".into()))?;
            for (pos, word) in text.split_whitespace().enumerate() {
                let phones = lexicon.get(word).ok_or_else(|| Error::UnknownToken {
                    kind: "word",
                    token: word.to_string(),
                    position: pos,
                })?;
                if pos > 0 {
                    ids.push(WORD_BOUNDARY_ID);
                }
                for p in phones {
                    let id = inventory.id_of(p).ok_or_else(|| Error::UnknownToken {
                        kind: "phone",
                        token: p.clone(),
                        position: pos,
                    })?;
                    ids.push(id);
                }
            }
        }
    }
    Ok(ids)
}

/// Unit ids → display string.
///
/// Grapheme mode renders word boundaries as single spaces. Phone mode joins
/// phones with spaces and renders boundaries with the marker symbol, since a
/// bare space already separates phones.
pub fn detokenize(ids: &[u32], inventory: &UnitInventory) -> Result<String> {
    let mut out = String::new();
    for (pos, &id) in ids.iter().enumerate() {
        if id == BLANK_ID {
            return Err(Error::BlankInSequence(pos));
        }
        let symbol = inventory.symbol_of(id).ok_or(Error::UnknownId(id))?;
        match (inventory.mode, id) {
            (UnitMode::Grapheme, WORD_BOUNDARY_ID) => out.push(' '),
            (UnitMode::Grapheme, _) => out.push_str(symbol),
            (UnitMode::Phone, _) => {
                if pos > 0 {
                    out.push(' ');
                }
                out.push_str(symbol);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn symbols(inv: &UnitInventory) -> Vec<&str> {
        inv.units().iter().map(|u| u.symbol.as_str()).collect()
    }

    #[test]
    fn grapheme_inventory_examples() {
        let inv = build_grapheme_inventory(&["ab", "ba"]).unwrap();
        assert_eq!(symbols(&inv), ["<blk>", "<wb>", "a", "b"]);
        assert_eq!(build_grapheme_inventory(&["a"]).unwrap().len(), 3);
        let inv = build_grapheme_inventory(&["aß", "ße"]).unwrap();
        assert_eq!(symbols(&inv), ["<blk>", "<wb>", "a", "e", "ß"]);
        assert!(matches!(
            build_grapheme_inventory(&["", "  "]),
            Err(Error::EmptyTranscriptSet)
        ));
    }

    #[test]
    fn normalization_applies_nfc_and_lowercase() {
        // "e" + combining acute composes to é
        let inv = build_grapheme_inventory(&["E\u{301}"]).unwrap();
        assert_eq!(symbols(&inv), ["<blk>", "<wb>", "é"]);
    }

    #[test]
    fn merge_examples() {
        let a = build_grapheme_inventory(&["ab"]).unwrap().tag_language("en");
        let b = build_grapheme_inventory(&["bc"]).unwrap().tag_language("de");
        let m = merge_inventories(&[a.clone(), b.clone()]).unwrap();
        assert_eq!(symbols(&m), ["<blk>", "<wb>", "a", "b", "c"]);
        let b_unit = m.unit(m.id_of("b").unwrap()).unwrap();
        assert_eq!(b_unit.languages.iter().collect::<Vec<_>>(), ["de", "en"]);
        assert_eq!(merge_inventories(std::slice::from_ref(&a)).unwrap(), a);
        assert_eq!(m, merge_inventories(&[b, a]).unwrap());
    }

    #[test]
    fn merge_rejects_mixed_modes() {
        let g = build_grapheme_inventory(&["ab"]).unwrap();
        let p = UnitInventory::from_phones(&["aa", "b"]).unwrap();
        assert!(matches!(merge_inventories(&[g, p]), Err(Error::MixedModes)));
    }

    #[test]
    fn tokenize_examples() {
        let inv = build_grapheme_inventory(&["ab"]).unwrap();
        let (a, b) = (inv.id_of("a").unwrap(), inv.id_of("b").unwrap());
        assert_eq!(
            tokenize("ab ba", &inv, None).unwrap(),
            [a, b, WORD_BOUNDARY_ID, b, a]
        );
        assert!(matches!(tokenize("", &inv, None), Err(Error::EmptyTranscript)));
        // boundaries are not emitted at the edges
        assert_eq!(tokenize("  ab  ", &inv, None).unwrap(), [a, b]);

        let mut lex = Lexicon::new();
        lex.insert("hi", &["h", "ai"]).unwrap();
        let pinv = UnitInventory::from_lexicon(&lex).unwrap();
        let ids = tokenize("hi", &pinv, Some(&lex)).unwrap();
        assert_eq!(ids, [pinv.id_of("h").unwrap(), pinv.id_of("ai").unwrap()]);
        assert_eq!(detokenize(&ids, &pinv).unwrap(), "h ai");
    }

    #[test]
    fn tokenize_names_unknown_tokens() {
        let inv = build_grapheme_inventory(&["ab"]).unwrap();
        match tokenize("ab ax", &inv, None) {
            Err(Error::UnknownToken { token, position, .. }) => {
                assert_eq!(token, "x");
                assert_eq!(position, 4);
            }
            other => panic!("unexpected {other:?}"),
        }
        let mut lex = Lexicon::new();
        lex.insert("hi", &["h", "ai"]).unwrap();
        let pinv = UnitInventory::from_lexicon(&lex).unwrap();
        match tokenize("hi there", &pinv, Some(&lex)) {
            Err(Error::UnknownToken { token, position, .. }) => {
                assert_eq!((token.as_str(), position), ("there", 1));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn detokenize_examples() {
        let inv = build_grapheme_inventory(&["ab"]).unwrap();
        let (a, b) = (inv.id_of("a").unwrap(), inv.id_of("b").unwrap());
        assert_eq!(detokenize(&[a, b, WORD_BOUNDARY_ID, b, a], &inv).unwrap(), "ab ba");
        assert_eq!(detokenize(&[], &inv).unwrap(), "");
        assert!(matches!(
            detokenize(&[a, BLANK_ID], &inv),
            Err(Error::BlankInSequence(1))
        ));
    }

    #[test]
    fn inventory_file_round_trip() {
        let a = build_grapheme_inventory(&["ab"]).unwrap().tag_language("en");
        let b = build_grapheme_inventory(&["bç"]).unwrap().tag_language("fr");
        let m = merge_inventories(&[a, b]).unwrap();
        let text = m.to_text();
        assert!(text.starts_with("0\t<blk>\tblank\ten,fr\n1\t<wb>\tword-boundary\ten,fr\n"));
        assert_eq!(UnitInventory::from_text(&text).unwrap(), m);
    }

    #[test]
    fn inventory_file_rejects_gaps_and_duplicates() {
        let gap = "0\t<blk>\tblank\t\n1\t<wb>\tword-boundary\t\n3\ta\tgrapheme\t\n";
        assert!(UnitInventory::from_text(gap).is_err());
        let dup = "0\t<blk>\tblank\t\n1\t<wb>\tword-boundary\t\n2\ta\tgrapheme\t\n3\ta\tgrapheme\t\n";
        assert!(UnitInventory::from_text(dup).is_err());
        let no_wb = "0\t<blk>\tblank\t\n1\ta\tgrapheme\t\n";
        assert!(UnitInventory::from_text(no_wb).is_err());
    }

    #[test]
    fn lexicon_file_and_validation() {
        let lex = Lexicon::from_text("hi\th ai\nyo\tj o\n").unwrap();
        assert_eq!(lex.get("yo").unwrap(), ["j", "o"]);
        assert_eq!(Lexicon::from_text(&lex.to_text()).unwrap(), lex);
        let inv = UnitInventory::from_phones(&["h", "ai"]).unwrap();
        assert!(lex.validate(&inv).is_err());
        assert!(lex.validate(&UnitInventory::from_lexicon(&lex).unwrap()).is_ok());
        assert!(Lexicon::from_text("hi\t\n").is_err());
    }

    fn inventory_strategy() -> impl Strategy<Value = UnitInventory> {
        proptest::collection::vec("[a-f]{1,4}", 1..4).prop_map(|ts| build_grapheme_inventory(&ts).unwrap())
    }

    proptest! {
        #[test]
        fn lookups_are_mutual_inverses(inv in inventory_strategy()) {
            for u in inv.units() {
                prop_assert_eq!(inv.id_of(inv.symbol_of(u.id).unwrap()), Some(u.id));
                prop_assert_eq!(inv.symbol_of(inv.id_of(&u.symbol).unwrap()), Some(u.symbol.as_str()));
            }
        }

        #[test]
        fn merge_is_associative_and_commutative(
            a in inventory_strategy(), b in inventory_strategy(), c in inventory_strategy()
        ) {
            let (a, b, c) = (a.tag_language("x"), b.tag_language("y"), c.tag_language("z"));
            let left = merge_inventories(&[merge_inventories(&[a.clone(), b.clone()]).unwrap(), c.clone()]).unwrap();
            let right = merge_inventories(&[a.clone(), merge_inventories(&[b.clone(), c.clone()]).unwrap()]).unwrap();
            prop_assert_eq!(&left, &right);
            prop_assert_eq!(
                merge_inventories(&[a.clone(), b.clone()]).unwrap(),
                merge_inventories(&[b, a]).unwrap()
            );
        }

        #[test]
        fn tokenize_round_trips(words in proptest::collection::vec("[a-eé]{1,5}", 1..6)) {
            let transcript = words.join(" ");
            let inv = build_grapheme_inventory(&[&transcript]).unwrap();
            let ids = tokenize(&transcript, &inv, None).unwrap();
            prop_assert!(!ids.contains(&BLANK_ID));
            prop_assert_eq!(detokenize(&ids, &inv).unwrap(), normalize_whitespace(&transcript));
        }
    }
}
