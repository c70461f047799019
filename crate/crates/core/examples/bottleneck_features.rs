//! Train a multilingual bottleneck net on frame targets, then a language
//! classifier on its BNFs, and look at the resulting language feature vectors.

use ctcpoly::features::{
    frame_accuracy, lfv_separability, train_bottleneck_net, train_lfv_net, BottleneckNetConfig, FeatureMatrix,
    LabeledFrames,
};
use ctcpoly::harness::synth::phone_inventory;
use ctcpoly::harness::{pseudo_languages, synthesize, CorpusShape, PseudoLanguageConfig};
use ctcpoly::optim::TrainConfig;

fn main() -> ctcpoly::Result<()> {
    let specs = pseudo_languages(&PseudoLanguageConfig { n_languages: 3, ..Default::default() }, 4)?;
    let shape = CorpusShape { utts_per_language: 40, ..Default::default() };
    let utts = synthesize(&specs, &shape, 4)?;
    let (train, test): (Vec<_>, Vec<_>) = utts.into_iter().partition(|u| !u.id.ends_with('0'));
    let frames = |set: &[ctcpoly::harness::SyntheticUtterance]| -> Vec<LabeledFrames> {
        set.iter()
            .map(|u| LabeledFrames {
                features: u.features.clone(),
                targets: u.frame_targets.clone(),
                language: u.language.clone(),
            })
            .collect()
    };

    let opt = TrainConfig { learning_rate: 0.01, batch_size: 64, epochs: 4, ..Default::default() };
    let bnf_cfg = BottleneckNetConfig::desk_bnf(phone_inventory(&specs)?.len());
    let bnf = train_bottleneck_net(&frames(&train), &bnf_cfg, &opt)?;
    println!("BNF net loss per epoch {:.3?}", bnf.loss_history);
    println!("held-out unit accuracy {:.3}", frame_accuracy(&bnf.net.0, &frames(&test))?);

    let to_bnf = |set: &[ctcpoly::harness::SyntheticUtterance]| -> ctcpoly::Result<Vec<(FeatureMatrix, String)>> {
        set.iter().map(|u| Ok((bnf.net.extract(&u.features)?, u.language.clone()))).collect()
    };
    let lfv = train_lfv_net(&to_bnf(&train)?, &BottleneckNetConfig::desk_lfv(3), &opt)?;
    println!("LFV net loss per epoch {:.3?}", lfv.loss_history);

    let vectors = to_bnf(&test)?
        .iter()
        .map(|(f, l)| lfv.net.utterance_vector(f, Some(l)))
        .collect::<ctcpoly::Result<Vec<_>>>()?;
    let s = lfv_separability(&vectors);
    println!("LFV distances: within language {:.2}, between languages {:.2}", s.within, s.between);
    for v in vectors.iter().step_by(4) {
        println!("  {:?} {:.2?}", v.language_hint.as_deref().unwrap_or("?"), v.values);
    }
    Ok(())
}
