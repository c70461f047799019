use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{AcousticModel, Mode, Utterance};
use crate::ctc::{ctc_loss_and_grad, min_frames};
use crate::error::{Error, Result};
use crate::optim::{Nesterov, TrainConfig};

#[derive(Debug, Clone)]
pub struct TrainingExample {
    pub id: String,
    pub feat: Array2<f64>,
    pub lfv: Option<Array2<f64>>,
    pub targets: Vec<u32>,
}

impl TrainingExample {
    pub fn frames(&self) -> usize {
        self.feat.nrows()
    }

    pub fn utterance(&self) -> Utterance<'_> {
        Utterance {
            feat: self.feat.view(),
            lfv: self.lfv.as_ref().map(|l| l.view()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    /// Mean per-utterance CTC loss over the epoch.
    pub mean_loss: f64,
    pub updates: usize,
    pub rejected_updates: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub loss_history: Vec<f64>,
    pub epochs: Vec<EpochStats>,
    /// Utterances left out because no CTC alignment fits their frames.
    pub skipped: Vec<String>,
    /// Batches of each epoch as corpus indices, in visiting order.
    pub batch_order: Vec<Vec<Vec<usize>>>,
    /// 1-based epoch whose parameters were kept.
    pub best_epoch: usize,
}

/// Mini-batch SGD with Nesterov momentum on the batch-mean CTC loss.
///
/// The first epoch runs shortest-first when `sort_first_epoch` is set; every
/// other epoch is a seeded shuffle. Parameters from the epoch with the lowest
/// mean loss are kept at the end.
pub fn train(model: &mut AcousticModel, corpus: &[TrainingExample], cfg: &TrainConfig) -> Result<TrainReport> {
    cfg.validate()?;
    let mut feasible = Vec::with_capacity(corpus.len());
    let mut skipped = Vec::new();
    for (i, ex) in corpus.iter().enumerate() {
        let out = model.config().output_frames(ex.frames());
        if ex.targets.is_empty() || out < min_frames(&ex.targets) {
            log::warn!(
                "skipping {}: {} labels need {} frames, model emits {out}",
                ex.id,
                ex.targets.len(),
                min_frames(&ex.targets)
            );
            skipped.push(ex.id.clone());
        } else {
            feasible.push(i);
        }
    }
    if feasible.is_empty() {
        return Err(Error::InvalidConfig("no trainable utterances".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut opt = Nesterov::new(model.params());
    let mut report = TrainReport {
        loss_history: Vec::new(),
        epochs: Vec::new(),
        skipped,
        batch_order: Vec::new(),
        best_epoch: 0,
    };
    let mut best = (f64::INFINITY, model.params().clone());
    for epoch in 1..=cfg.epochs {
        let mut order = feasible.clone();
        if epoch == 1 && cfg.sort_first_epoch {
            order.sort_by_key(|&i| corpus[i].frames());
        } else {
            order.shuffle(&mut rng);
        }
        let batches: Vec<Vec<usize>> = order.chunks(cfg.batch_size).map(<[usize]>::to_vec).collect();
        let (mut total, mut count) = (0.0, 0usize);
        let mut stats = EpochStats {
            epoch,
            mean_loss: 0.0,
            updates: 0,
            rejected_updates: 0,
        };
        for batch in &batches {
            let utts: Vec<Utterance<'_>> = batch.iter().map(|&i| corpus[i].utterance()).collect();
            let fwd = model.forward_batch(&utts, Mode::Train)?;
            let n = batch.len() as f64;
            let mut dlogits = Vec::with_capacity(batch.len());
            let mut batch_loss = 0.0;
            for (logits, &i) in fwd.logits.iter().zip(batch) {
                let (loss, grad) = ctc_loss_and_grad(logits.view(), &corpus[i].targets)?;
                batch_loss += loss;
                dlogits.push(grad / n);
            }
            let mut grads = model.backward(&fwd, &dlogits)?;
            if let Some(max) = cfg.max_grad_norm {
                let norm = grads.norm();
                if norm > max {
                    grads.scale(max / norm);
                }
            }
            match opt.step(model.params_mut(), &grads, cfg) {
                Ok(()) => {
                    model.update_running_stats(&fwd);
                    stats.updates += 1;
                }
                Err(Error::NonFiniteGradient(name)) => {
                    log::warn!("epoch {epoch}: rejected update with non-finite values in {name}");
                    stats.rejected_updates += 1;
                }
                Err(e) => return Err(e),
            }
            if batch_loss.is_finite() {
                total += batch_loss;
                count += batch.len();
            }
        }
        stats.mean_loss = if count > 0 { total / count as f64 } else { f64::INFINITY };
        log::info!("epoch {epoch}: mean CTC loss {:.4}", stats.mean_loss);
        if stats.mean_loss < best.0 {
            best = (stats.mean_loss, model.params().clone());
            report.best_epoch = epoch;
        }
        report.loss_history.push(stats.mean_loss);
        report.epochs.push(stats);
        report.batch_order.push(batches);
    }
    if report.best_epoch > 0 {
        *model.params_mut() = best.1;
    }
    Ok(report)
}
