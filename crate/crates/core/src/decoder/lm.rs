//! Character (unit-level) n-gram language model with add-k smoothing and
//! backoff to shorter contexts.
//!
//! Each transcript is padded with `order - 1` start symbols and terminated by
//! an end symbol. A context that was observed in training owns a complete
//! add-k distribution over the vocabulary (every non-blank unit plus the end
//! symbol); an unobserved context backs off to its longest observed suffix.
//! Every distribution the model can return is therefore normalized.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::math::logsumexp;
use crate::unitset::{tokenize, Lexicon, UnitInventory, BLANK_ID};

/// Sentence-start padding symbol (context only, never predicted).
pub const BOS: u32 = u32::MAX;
/// Sentence-end symbol.
pub const EOS: u32 = u32::MAX - 1;

const BOS_TEXT: &str = "<s>";
const EOS_TEXT: &str = "</s>";

/// The last `order - 1` symbols seen, BOS-padded.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LmState(Vec<u32>);

#[derive(Debug, Clone)]
pub struct CharNgramLm {
    order: usize,
    k: f64,
    /// Predictable symbols: non-blank unit ids followed by EOS.
    vocab: Vec<u32>,
    vocab_index: HashMap<u32, usize>,
    symbols: HashMap<u32, String>,
    fingerprint: String,
    /// Observed context → log-probabilities over `vocab`.
    tables: HashMap<Vec<u32>, Vec<f64>>,
}

impl CharNgramLm {
    fn empty(order: usize, k: f64, inventory: &UnitInventory) -> Result<Self> {
        if order < 1 {
            return Err(Error::InvalidConfig("LM order must be at least 1".into()));
        }
        if k.is_nan() || k <= 0.0 {
            return Err(Error::InvalidConfig("add-k smoothing requires k > 0".into()));
        }
        let mut vocab: Vec<u32> = inventory
            .units()
            .iter()
            .map(|u| u.id)
            .filter(|&id| id != BLANK_ID)
            .collect();
        vocab.push(EOS);
        let vocab_index = vocab.iter().enumerate().map(|(i, &s)| (s, i)).collect();
        let mut symbols: HashMap<u32, String> =
            inventory.units().iter().map(|u| (u.id, u.symbol.clone())).collect();
        symbols.insert(BOS, BOS_TEXT.into());
        symbols.insert(EOS, EOS_TEXT.into());
        Ok(Self {
            order,
            k,
            vocab,
            vocab_index,
            symbols,
            fingerprint: inventory.fingerprint(),
            tables: HashMap::new(),
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    /// Predictable symbols, EOS last.
    pub fn vocab(&self) -> &[u32] {
        &self.vocab
    }

    pub fn initial_state(&self) -> LmState {
        LmState(vec![BOS; self.order - 1])
    }

    pub fn advance(&self, state: &LmState, symbol: u32) -> LmState {
        let mut ctx = state.0.clone();
        if !ctx.is_empty() {
            ctx.remove(0);
            ctx.push(symbol);
        }
        LmState(ctx)
    }

    /// State after consuming `prefix` from the start.
    pub fn state_for(&self, prefix: &[u32]) -> LmState {
        prefix
            .iter()
            .fold(self.initial_state(), |s, &sym| self.advance(&s, sym))
    }

    fn distribution(&self, context: &[u32]) -> &[f64] {
        for start in 0..=context.len() {
            if let Some(d) = self.tables.get(&context[start..]) {
                return d;
            }
        }
        unreachable!("the empty context is always observed")
    }

    /// `log P(symbol | state)`.
    pub fn score(&self, state: &LmState, symbol: u32) -> Result<f64> {
        let idx = *self.vocab_index.get(&symbol).ok_or_else(|| {
            Error::ForeignSymbol(
                self.symbols
                    .get(&symbol)
                    .cloned()
                    .unwrap_or_else(|| format!("#{symbol}")),
            )
        })?;
        Ok(self.distribution(&state.0)[idx])
    }

    /// Log-probabilities for every vocabulary symbol in `state`.
    pub fn next_distribution(&self, state: &LmState) -> &[f64] {
        self.distribution(&state.0)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "order\t{}", self.order);
        let _ = writeln!(out, "k\t{}", self.k);
        let _ = writeln!(out, "inventory\t{}", self.fingerprint);
        let mut contexts: Vec<&Vec<u32>> = self.tables.keys().collect();
        contexts.sort_by_key(|c| (c.len(), (*c).clone()));
        for ctx in contexts {
            let ctx_text = ctx
                .iter()
                .map(|s| self.symbols[s].as_str())
                .collect::<Vec<_>>()
                .join(" ");
            for (sym, logp) in self.vocab.iter().zip(&self.tables[ctx]) {
                let _ = writeln!(out, "{ctx_text}\t{}\t{logp}", self.symbols[sym]);
            }
        }
        out
    }

    pub fn load(path: impl AsRef<Path>, inventory: &UnitInventory) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)?;
        let bad = |reason: String| Error::format(path, reason);
        let mut lines = text.lines();
        let mut header = |key: &str| -> Result<String> {
            let line = lines.next().ok_or_else(|| bad(format!("missing {key} header")))?;
            match line.split_once('\t') {
                Some((k, v)) if k == key => Ok(v.to_string()),
                _ => Err(bad(format!("expected {key} header, found {line:?}"))),
            }
        };
        let order: usize = header("order")?.parse().map_err(|_| bad("bad order".into()))?;
        let k: f64 = header("k")?.parse().map_err(|_| bad("bad k".into()))?;
        let fingerprint = header("inventory")?;
        if fingerprint != inventory.fingerprint() {
            return Err(bad("LM was trained on a different inventory".into()));
        }
        let mut lm = Self::empty(order, k, inventory)?;
        let lookup = |s: &str| -> Result<u32> {
            match s {
                BOS_TEXT => Ok(BOS),
                EOS_TEXT => Ok(EOS),
                _ => inventory
                    .id_of(s)
                    .ok_or_else(|| Error::ForeignSymbol(s.to_string())),
            }
        };
        for (n, line) in lines.enumerate() {
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(bad(format!("n-gram line {}: expected 3 fields", n + 1)));
            }
            let ctx = fields[0]
                .split_whitespace()
                .map(lookup)
                .collect::<Result<Vec<u32>>>()?;
            let sym = lookup(fields[1])?;
            let logp: f64 = fields[2]
                .parse()
                .map_err(|_| bad(format!("n-gram line {}: bad log-probability", n + 1)))?;
            let idx = *lm
                .vocab_index
                .get(&sym)
                .ok_or_else(|| Error::ForeignSymbol(fields[1].to_string()))?;
            let vocab_len = lm.vocab.len();
            lm.tables
                .entry(ctx)
                .or_insert_with(|| vec![f64::NEG_INFINITY; vocab_len])[idx] = logp;
        }
        if !lm.tables.contains_key(&Vec::new()) {
            return Err(bad("missing unigram distribution".into()));
        }
        Ok(lm)
    }
}

/// Train on unit-id sequences (already tokenized).
pub fn train_char_lm_ids(
    sequences: &[Vec<u32>],
    inventory: &UnitInventory,
    order: usize,
    k: f64,
) -> Result<CharNgramLm> {
    if sequences.is_empty() {
        return Err(Error::EmptyTranscriptSet);
    }
    let mut lm = CharNgramLm::empty(order, k, inventory)?;
    let vocab_len = lm.vocab.len();
    let mut counts: HashMap<Vec<u32>, Vec<f64>> = HashMap::new();
    for seq in sequences {
        let mut padded = vec![BOS; order - 1];
        padded.extend_from_slice(seq);
        padded.push(EOS);
        for i in order - 1..padded.len() {
            let idx = *lm
                .vocab_index
                .get(&padded[i])
                .ok_or(Error::UnknownId(padded[i]))?;
            for h in 0..order {
                counts
                    .entry(padded[i - h..i].to_vec())
                    .or_insert_with(|| vec![0.0; vocab_len])[idx] += 1.0;
            }
        }
    }
    for (ctx, row) in counts {
        let denom = (row.iter().sum::<f64>() + k * vocab_len as f64).ln();
        let dist: Vec<f64> = row.iter().map(|c| (c + k).ln() - denom).collect();
        debug_assert!(logsumexp(&dist).abs() < 1e-9);
        lm.tables.insert(ctx, dist);
    }
    Ok(lm)
}

/// Train on raw transcripts, tokenized with `inventory` (and `lexicon` in
/// phone mode).
pub fn train_char_lm<S: AsRef<str>>(
    transcripts: &[S],
    inventory: &UnitInventory,
    lexicon: Option<&Lexicon>,
    order: usize,
    k: f64,
) -> Result<CharNgramLm> {
    let seqs = transcripts
        .iter()
        .map(|t| tokenize(t.as_ref(), inventory, lexicon))
        .collect::<Result<Vec<_>>>()?;
    train_char_lm_ids(&seqs, inventory, order, k)
}

/// `log P(next | prefix)`, rescoring the full prefix from the start.
pub fn lm_score(lm: &CharNgramLm, prefix: &[u32], next: u32) -> Result<f64> {
    lm.score(&lm.state_for(prefix), next)
}
