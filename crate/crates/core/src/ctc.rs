//! Connectionist temporal classification: exact loss and gradient by the
//! forward-backward recursion over the blank-extended label sequence.
//!
//! All lattice quantities live in natural-log space. `alpha[t][s]` is the
//! log-probability of all path prefixes ending in extended state `s` at frame
//! `t` (emission at `t` included); `beta[t][s]` is the log-probability of
//! completing the labeling from state `s` at frame `t` (emission at `t`
//! excluded). Hence `alpha[t][s] + beta[t][s]` is the mass of all paths through
//! `(t, s)` and sums to `-loss` at every frame.

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::math::{log_add, log_softmax_rows, logsumexp};
use crate::unitset::BLANK_ID;

const NEG_INF: f64 = f64::NEG_INFINITY;

/// Blank-interleaved target sequence `(blank, y1, blank, ..., yL, blank)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtendedLabels(Vec<u32>);

impl ExtendedLabels {
    pub fn new(targets: &[u32]) -> Result<Self> {
        if let Some(pos) = targets.iter().position(|&t| t == BLANK_ID) {
            return Err(Error::BlankInSequence(pos));
        }
        let mut ext = Vec::with_capacity(2 * targets.len() + 1);
        ext.push(BLANK_ID);
        for &t in targets {
            ext.push(t);
            ext.push(BLANK_ID);
        }
        Ok(Self(ext))
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Whether a transition may skip from `s - 2` directly to `s`.
    fn can_skip_into(&self, s: usize) -> bool {
        s >= 2 && self.0[s] != BLANK_ID && self.0[s] != self.0[s - 2]
    }
}

#[derive(Debug, Clone)]
pub struct CtcLattice {
    pub alpha: Array2<f64>,
    pub beta: Array2<f64>,
    pub log_probs: Array2<f64>,
    pub labels: ExtendedLabels,
    pub loss: f64,
}

impl CtcLattice {
    /// Posterior occupancy of each unit per frame, `T × V`.
    pub fn occupancy(&self) -> Array2<f64> {
        let (frames, vocab) = self.log_probs.dim();
        let mut occ = Array2::zeros((frames, vocab));
        for t in 0..frames {
            for (s, &label) in self.labels.as_slice().iter().enumerate() {
                let lp = self.alpha[[t, s]] + self.beta[[t, s]] + self.loss;
                if lp > NEG_INF {
                    occ[[t, label as usize]] += lp.exp();
                }
            }
        }
        occ
    }
}

/// Minimum frame count able to carry `targets`: one per label plus a blank
/// between each pair of equal neighbours.
pub fn min_frames(targets: &[u32]) -> usize {
    targets.len() + repeat_count(targets)
}

fn repeat_count(targets: &[u32]) -> usize {
    targets.windows(2).filter(|w| w[0] == w[1]).count()
}

fn check_feasible(frames: usize, targets: &[u32]) -> Result<()> {
    if targets.is_empty() {
        return Err(Error::InvalidConfig("CTC target sequence is empty".into()));
    }
    if frames < min_frames(targets) {
        return Err(Error::NoValidAlignment {
            frames,
            labels: targets.len(),
            repeats: repeat_count(targets),
        });
    }
    Ok(())
}

/// CTC loss `-log P(targets | logits)` plus the full lattice.
pub fn ctc_loss(logits: ArrayView2<'_, f64>, targets: &[u32]) -> Result<(f64, CtcLattice)> {
    let labels = ExtendedLabels::new(targets)?;
    let (frames, vocab) = logits.dim();
    check_feasible(frames, targets)?;
    if let Some(&bad) = targets.iter().find(|&&t| t as usize >= vocab) {
        return Err(Error::UnknownId(bad));
    }
    let log_probs = log_softmax_rows(logits);
    let ext = labels.as_slice();
    let states = ext.len();

    let mut alpha = Array2::from_elem((frames, states), NEG_INF);
    alpha[[0, 0]] = log_probs[[0, ext[0] as usize]];
    alpha[[0, 1]] = log_probs[[0, ext[1] as usize]];
    for t in 1..frames {
        for s in 0..states {
            let mut acc = alpha[[t - 1, s]];
            if s >= 1 {
                acc = log_add(acc, alpha[[t - 1, s - 1]]);
            }
            if labels.can_skip_into(s) {
                acc = log_add(acc, alpha[[t - 1, s - 2]]);
            }
            if acc > NEG_INF {
                alpha[[t, s]] = acc + log_probs[[t, ext[s] as usize]];
            }
        }
    }

    let mut beta = Array2::from_elem((frames, states), NEG_INF);
    beta[[frames - 1, states - 1]] = 0.0;
    beta[[frames - 1, states - 2]] = 0.0;
    for t in (0..frames - 1).rev() {
        for s in 0..states {
            let mut acc = beta[[t + 1, s]] + log_probs[[t + 1, ext[s] as usize]];
            if s + 1 < states {
                acc = log_add(acc, beta[[t + 1, s + 1]] + log_probs[[t + 1, ext[s + 1] as usize]]);
            }
            if s + 2 < states && labels.can_skip_into(s + 2) {
                acc = log_add(acc, beta[[t + 1, s + 2]] + log_probs[[t + 1, ext[s + 2] as usize]]);
            }
            beta[[t, s]] = acc;
        }
    }

    let total = log_add(alpha[[frames - 1, states - 1]], alpha[[frames - 1, states - 2]]);
    if !total.is_finite() {
        return Err(Error::NoValidAlignment {
            frames,
            labels: targets.len(),
            repeats: repeat_count(targets),
        });
    }
    let loss = (-total).max(0.0);
    Ok((
        loss,
        CtcLattice {
            alpha,
            beta,
            log_probs,
            labels,
            loss: -total,
        },
    ))
}

/// Loss together with `d loss / d logits`.
pub fn ctc_loss_and_grad(logits: ArrayView2<'_, f64>, targets: &[u32]) -> Result<(f64, Array2<f64>)> {
    let (loss, lattice) = ctc_loss(logits, targets)?;
    let mut grad = lattice.log_probs.mapv(f64::exp);
    grad -= &lattice.occupancy();
    Ok((loss, grad))
}

/// `d loss / d logits`: softmax outputs minus posterior occupancy.
pub fn ctc_grad(logits: ArrayView2<'_, f64>, targets: &[u32]) -> Result<Array2<f64>> {
    ctc_loss_and_grad(logits, targets).map(|(_, g)| g)
}

/// Merge adjacent repeats, then drop blanks.
pub fn collapse(path: &[u32]) -> Vec<u32> {
    let mut out = Vec::new();
    let mut prev = None;
    for &p in path {
        if Some(p) != prev && p != BLANK_ID {
            out.push(p);
        }
        prev = Some(p);
    }
    out
}

const BRUTE_FORCE_LIMIT: f64 = 1e7;

/// Exhaustive path enumeration: `-log` of the summed probability of every
/// frame path that collapses to `targets`. Test oracle for [`ctc_loss`].
pub fn brute_force_ctc(log_probs: ArrayView2<'_, f64>, targets: &[u32]) -> Result<f64> {
    let (frames, vocab) = log_probs.dim();
    let paths = (vocab as f64).powi(frames as i32);
    if paths > BRUTE_FORCE_LIMIT {
        return Err(Error::InstanceTooLarge(paths));
    }
    if let Some(pos) = targets.iter().position(|&t| t == BLANK_ID) {
        return Err(Error::BlankInSequence(pos));
    }
    let mut path = vec![0u32; frames];
    let mut terms = Vec::new();
    loop {
        if collapse(&path) == targets {
            terms.push(
                path.iter()
                    .enumerate()
                    .map(|(t, &k)| log_probs[[t, k as usize]])
                    .sum::<f64>(),
            );
        }
        // odometer increment
        let mut pos = 0;
        loop {
            if pos == frames {
                let total = logsumexp(&terms);
                if total == NEG_INF {
                    return Err(Error::NoValidAlignment {
                        frames,
                        labels: targets.len(),
                        repeats: repeat_count(targets),
                    });
                }
                return Ok(-total);
            }
            path[pos] += 1;
            if (path[pos] as usize) < vocab {
                break;
            }
            path[pos] = 0;
            pos += 1;
        }
    }
}
