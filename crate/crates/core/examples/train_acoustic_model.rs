//! Train the convolutional BiLSTM CTC model directly on synthetic utterances
//! and greedily decode a few held-out ones.

use ctcpoly::decoder::greedy_decode;
use ctcpoly::harness::{pseudo_languages, synthesize, CorpusShape, PseudoLanguageConfig};
use ctcpoly::network::{train, AcousticModel, Mode, ModelConfig, TrainingExample};
use ctcpoly::optim::TrainConfig;
use ctcpoly::scoring::ter;
use ctcpoly::unitset::{build_grapheme_inventory, detokenize, tokenize};

fn main() -> ctcpoly::Result<()> {
    let specs = pseudo_languages(&PseudoLanguageConfig::default(), 9)?;
    let utts = synthesize(&specs, &CorpusShape { utts_per_language: 100, ..Default::default() }, 9)?;
    let transcripts: Vec<&str> = utts.iter().map(|u| u.transcript.as_str()).collect();
    let inv = build_grapheme_inventory(&transcripts)?;
    let examples = utts
        .iter()
        .map(|u| {
            Ok(TrainingExample {
                id: u.id.clone(),
                feat: u.features.to_f64(),
                lfv: None,
                targets: tokenize(&u.transcript, &inv, None)?,
            })
        })
        .collect::<ctcpoly::Result<Vec<_>>>()?;
    let (test, train_set): (Vec<_>, Vec<_>) = examples.into_iter().partition(|e| e.id.ends_with('7'));

    let cfg = ModelConfig::desk(specs[0].dim(), inv.len(), 0);
    let mut model = AcousticModel::new(cfg, 9)?;
    println!("{} trainable parameters", model.params().num_trainable());
    let opt = TrainConfig { learning_rate: 0.03, batch_size: 10, epochs: 10, max_grad_norm: Some(10.0), ..Default::default() };
    let report = train(&mut model, &train_set, &opt)?;
    for e in &report.epochs {
        println!("epoch {:>2}  loss {:8.3}  updates {}", e.epoch, e.mean_loss, e.updates);
    }

    let mut hyps = Vec::new();
    for ex in &test {
        let logits = model.forward_batch(&[ex.utterance()], Mode::Infer)?.logits.remove(0);
        hyps.push(greedy_decode(logits.view())?);
    }
    let refs: Vec<Vec<u32>> = test.iter().map(|e| e.targets.clone()).collect();
    println!("held-out TER {:.1}%", ter(&refs, &hyps)?.percent());
    for (r, h) in refs.iter().zip(&hyps).take(3) {
        println!("  ref {:?}\n  hyp {:?}", detokenize(r, &inv)?, detokenize(h, &inv)?);
    }
    Ok(())
}
