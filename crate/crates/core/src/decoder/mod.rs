//! Greedy best-path decoding and prefix beam search with an optional
//! character LM.

mod beam;
pub mod lm;

use ndarray::ArrayView2;

pub use beam::{prefix_beam_decode, prefix_beam_search, BeamConfig, Hypothesis};
pub use lm::{lm_score, train_char_lm, train_char_lm_ids, CharNgramLm, LmState};

use crate::ctc::collapse;
use crate::error::{Error, Result};
use crate::math::argmax;

/// Per-frame argmax (ties toward the lowest id), then collapse.
pub fn greedy_decode(logits: ArrayView2<'_, f64>) -> Result<Vec<u32>> {
    if logits.nrows() == 0 || logits.ncols() == 0 {
        return Err(Error::EmptyLogits);
    }
    let path: Vec<u32> = logits
        .rows()
        .into_iter()
        .map(|row| argmax(row.iter().copied()) as u32)
        .collect();
    Ok(collapse(&path))
}
