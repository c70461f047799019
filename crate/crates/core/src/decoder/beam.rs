use std::cmp::Ordering;
use std::collections::HashMap;

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use super::lm::{CharNgramLm, LmState, EOS};
use crate::error::{Error, Result};
use crate::math::{log_add, log_softmax_rows};
use crate::unitset::BLANK_ID;

const NEG_INF: f64 = f64::NEG_INFINITY;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BeamConfig {
    pub beam: usize,
    /// LM weight.
    pub alpha: f64,
    /// Per-unit length bonus.
    pub beta: f64,
}

impl Default for BeamConfig {
    fn default() -> Self {
        Self {
            beam: 64,
            alpha: 1.0,
            beta: 0.5,
        }
    }
}

/// A collapsed label prefix with its split acoustic mass.
#[derive(Debug, Clone)]
pub struct Hypothesis {
    pub prefix: Vec<u32>,
    pub logp_blank: f64,
    pub logp_nonblank: f64,
    /// Accumulated, already `alpha`-weighted LM log-probability.
    pub lm_logp: f64,
    pub lm_state: Option<LmState>,
}

impl Hypothesis {
    pub fn acoustic(&self) -> f64 {
        log_add(self.logp_blank, self.logp_nonblank)
    }

    pub fn score(&self, beta: f64) -> f64 {
        self.acoustic() + self.lm_logp + beta * self.prefix.len() as f64
    }
}

fn rank(a: &Hypothesis, b: &Hypothesis, beta: f64) -> Ordering {
    b.score(beta)
        .total_cmp(&a.score(beta))
        .then_with(|| a.prefix.cmp(&b.prefix))
}

/// CTC prefix beam search; returns the surviving hypotheses best-first.
///
/// With an LM, the final ranking includes the end-of-sentence probability.
pub fn prefix_beam_search(
    logits: ArrayView2<'_, f64>,
    lm: Option<&CharNgramLm>,
    cfg: &BeamConfig,
) -> Result<Vec<Hypothesis>> {
    if cfg.beam == 0 {
        return Err(Error::ZeroBeam);
    }
    if !(cfg.alpha >= 0.0 && cfg.beta >= 0.0) {
        return Err(Error::InvalidConfig("alpha and beta must be non-negative".into()));
    }
    let (frames, vocab) = logits.dim();
    if frames == 0 || vocab == 0 {
        return Err(Error::EmptyLogits);
    }
    let log_probs = log_softmax_rows(logits);

    let mut beam = vec![Hypothesis {
        prefix: Vec::new(),
        logp_blank: 0.0,
        logp_nonblank: NEG_INF,
        lm_logp: 0.0,
        lm_state: lm.map(CharNgramLm::initial_state),
    }];

    for t in 0..frames {
        let row = log_probs.row(t);
        let mut next: HashMap<Vec<u32>, Hypothesis> = HashMap::with_capacity(beam.len() * vocab);
        for hyp in &beam {
            let total = hyp.acoustic();
            let last = hyp.prefix.last().copied();

            // stay on the same prefix via blank or a repeated last unit
            let stay_blank = total + row[BLANK_ID as usize];
            let stay_repeat = last.map_or(NEG_INF, |c| hyp.logp_nonblank + row[c as usize]);
            let entry = next.entry(hyp.prefix.clone()).or_insert_with(|| Hypothesis {
                logp_blank: NEG_INF,
                logp_nonblank: NEG_INF,
                ..hyp.clone()
            });
            entry.logp_blank = log_add(entry.logp_blank, stay_blank);
            entry.logp_nonblank = log_add(entry.logp_nonblank, stay_repeat);

            for c in 1..vocab as u32 {
                // a repeated unit only extends from paths that ended in blank
                let mass = if Some(c) == last {
                    hyp.logp_blank + row[c as usize]
                } else {
                    total + row[c as usize]
                };
                if mass == NEG_INF {
                    continue;
                }
                let mut prefix = hyp.prefix.clone();
                prefix.push(c);
                let entry = match next.get_mut(&prefix) {
                    Some(e) => e,
                    None => {
                        let (lm_logp, lm_state) = match (lm, &hyp.lm_state) {
                            (Some(lm), Some(state)) => (
                                hyp.lm_logp + cfg.alpha * lm.score(state, c)?,
                                Some(lm.advance(state, c)),
                            ),
                            _ => (hyp.lm_logp, None),
                        };
                        next.entry(prefix.clone()).or_insert(Hypothesis {
                            prefix,
                            logp_blank: NEG_INF,
                            logp_nonblank: NEG_INF,
                            lm_logp,
                            lm_state,
                        })
                    }
                };
                entry.logp_nonblank = log_add(entry.logp_nonblank, mass);
            }
        }
        let mut candidates: Vec<Hypothesis> = next
            .into_values()
            .filter(|h| h.acoustic() > NEG_INF)
            .collect();
        candidates.sort_by(|a, b| rank(a, b, cfg.beta));
        candidates.truncate(cfg.beam);
        beam = candidates;
    }

    if let Some(lm) = lm {
        for hyp in &mut beam {
            if let Some(state) = &hyp.lm_state {
                hyp.lm_logp += cfg.alpha * lm.score(state, EOS)?;
            }
        }
        beam.sort_by(|a, b| rank(a, b, cfg.beta));
    }
    Ok(beam)
}

/// Best labeling under prefix beam search.
pub fn prefix_beam_decode(
    logits: ArrayView2<'_, f64>,
    lm: Option<&CharNgramLm>,
    cfg: &BeamConfig,
) -> Result<Vec<u32>> {
    let beam = prefix_beam_search(logits, lm, cfg)?;
    Ok(beam.into_iter().next().map(|h| h.prefix).unwrap_or_default())
}
