use ndarray::Array2;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::features::FeatureKind;
use crate::optim::TrainConfig;

fn tiny(input_dim: usize, lfv_dim: usize, output_dim: usize) -> ModelConfig {
    ModelConfig {
        conv_specs: vec![
            ConvSpec {
                kernel: (3, 3),
                stride: (2, 2),
                channels: 2,
            },
            ConvSpec {
                kernel: (3, 3),
                stride: (1, 2),
                channels: 2,
            },
        ],
        recurrent_layers: 1,
        recurrent_width: 3,
        lfv_dim,
        output_dim,
        input_dim,
    }
}

fn random(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| rng.random_range(-1.0..1.0))
}

fn feature(data: &Array2<f64>, kind: FeatureKind) -> FeatureMatrix {
    FeatureMatrix::from_f64(data.view(), 10.0, kind).unwrap()
}

#[test]
fn output_frames_follow_strides() {
    let cfg = ModelConfig::desk(40, 10, 0);
    let model = AcousticModel::new(cfg.clone(), 0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for frames in [1, 2, 3, 7, 8, 31] {
        let x = random(frames, 40, &mut rng);
        let out = model.forward(&feature(&x, FeatureKind::Logmel), None).unwrap();
        assert_eq!(out.dim(), (frames.div_ceil(2), 10));
        assert_eq!(cfg.output_frames(frames), frames.div_ceil(2));
    }
    let mut s = tiny(4, 0, 3);
    s.conv_specs[1].stride.0 = 3;
    assert_eq!(s.output_frames(13), 13usize.div_ceil(2).div_ceil(3));
}

#[test]
fn config_validation() {
    let mut c = tiny(4, 0, 3);
    c.conv_specs.pop();
    assert!(AcousticModel::new(c, 0).is_err());
    assert!(AcousticModel::new(tiny(4, 0, 1), 0).is_err());
    let mut full = ModelConfig::desk(40, 50, 42);
    full.recurrent_layers = 4;
    let m = AcousticModel::new(full, 0).unwrap();
    assert_eq!(m.params().tensors().iter().filter(|t| t.name.starts_with("rnn4.")).count(), 6);
}

#[test]
fn dimension_errors_name_the_layer() {
    let model = AcousticModel::new(tiny(4, 2, 3), 0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let x = random(6, 5, &mut rng);
    let err = model.forward(&feature(&x, FeatureKind::Logmel), None).unwrap_err();
    assert!(err.to_string().contains("conv1"), "{err}");
    let x = random(6, 4, &mut rng);
    let err = model.forward(&feature(&x, FeatureKind::Logmel), None).unwrap_err();
    assert!(err.to_string().contains("lfv"), "{err}");
    let l = random(5, 2, &mut rng);
    let err = model
        .forward(&feature(&x, FeatureKind::Logmel), Some(&feature(&l, FeatureKind::Lfv)))
        .unwrap_err();
    assert!(err.to_string().contains("lfv frames"), "{err}");
}

#[test]
fn zero_lfv_matches_absent_lfv_with_zeroed_weights() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let with = AcousticModel::new(tiny(6, 3, 4), 7).unwrap();
    let mut without = AcousticModel::new(tiny(6, 0, 4), 7).unwrap();
    // copy every tensor, dropping the LFV rows of the first recurrent inputs
    let rows = with.lfv_input_rows();
    let skip = with.first_recurrent_input_weights();
    for (i, t) in with.params().tensors().iter().enumerate() {
        let dst = without.params_mut().data_mut(i);
        if skip.contains(&i) {
            let cols = t.shape[1];
            let mut k = 0;
            for r in 0..t.shape[0] {
                if rows.contains(&r) {
                    continue;
                }
                dst[k * cols..(k + 1) * cols].copy_from_slice(&t.data[r * cols..(r + 1) * cols]);
                k += 1;
            }
        } else {
            dst.copy_from_slice(&t.data);
        }
    }
    let x = feature(&random(9, 6, &mut rng), FeatureKind::Logmel);
    let zero = feature(&Array2::zeros((9, 3)), FeatureKind::Lfv);
    assert_eq!(with.forward(&x, Some(&zero)).unwrap(), without.forward(&x, None).unwrap());
}

#[test]
fn lfv_only_enters_at_the_recurrent_stack() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let model = AcousticModel::new(tiny(6, 2, 4), 1).unwrap();
    let x = random(10, 6, &mut rng);
    let a = random(10, 2, &mut rng);
    let b = random(10, 2, &mut rng);
    let run = |l: &Array2<f64>| {
        model
            .forward_batch(&[Utterance { feat: x.view(), lfv: Some(l.view()) }], Mode::Train)
            .unwrap()
    };
    let (fa, fb) = (run(&a), run(&b));
    assert_eq!(fa.conv_output(0), fb.conv_output(0));
    assert_ne!(fa.logits[0], fb.logits[0]);
}

#[test]
fn lfv_frames_are_taken_at_conv_centres() {
    let cfg = ModelConfig::desk(8, 3, 1);
    assert_eq!((0..4).map(|t| cfg.center_frame(t, 7)).collect::<Vec<_>>(), [0, 2, 4, 6]);
    assert_eq!(cfg.center_frame(4, 8), 7);
}

#[test]
fn forward_is_deterministic_and_inference_ignores_batch() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut model = AcousticModel::new(tiny(5, 0, 3), 2).unwrap();
    let xs: Vec<Array2<f64>> = (0..3).map(|i| random(6 + i, 5, &mut rng)).collect();
    let utts: Vec<Utterance<'_>> = xs.iter().map(|x| Utterance { feat: x.view(), lfv: None }).collect();
    // move running stats away from their initial values
    let fwd = model.forward_batch(&utts, Mode::Train).unwrap();
    model.update_running_stats(&fwd);

    let alone = model.forward_batch(&utts[..1], Mode::Infer).unwrap();
    let together = model.forward_batch(&utts, Mode::Infer).unwrap();
    assert_eq!(alone.logits[0], together.logits[0]);
    assert_eq!(
        model.forward_batch(&utts, Mode::Infer).unwrap().logits,
        together.logits
    );
    // training mode does depend on the batch
    let t_alone = model.forward_batch(&utts[..1], Mode::Train).unwrap();
    let t_all = model.forward_batch(&utts, Mode::Train).unwrap();
    assert_ne!(t_alone.logits[0], t_all.logits[0]);
}

#[test]
fn gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for trial in 0..4u64 {
        let lfv_dim = (trial % 2) as usize * 2;
        let mut cfg = tiny(5, lfv_dim, 4);
        cfg.recurrent_layers = 1 + (trial / 2) as usize;
        let model = AcousticModel::new(cfg.clone(), trial).unwrap();
        assert!(model.params().num_trainable() <= 5000);
        let xs: Vec<Array2<f64>> = (0..2).map(|i| random(7 + 2 * i, 5, &mut rng)).collect();
        let ls: Vec<Array2<f64>> = xs.iter().map(|x| random(x.nrows(), lfv_dim, &mut rng)).collect();
        let utts: Vec<Utterance<'_>> = xs
            .iter()
            .zip(&ls)
            .map(|(x, l)| Utterance {
                feat: x.view(),
                lfv: (lfv_dim > 0).then(|| l.view()),
            })
            .collect();
        let targets = vec![vec![1, 2], vec![3, 3]];
        let worst = model.gradient_check(&utts, &targets, 1e-4).unwrap();
        assert!(worst < 1e-4, "trial {trial}: relative error {worst}");
    }
}

#[test]
fn backward_is_linear_in_dlogits() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let model = AcousticModel::new(tiny(4, 0, 3), 3).unwrap();
    let x = random(8, 4, &mut rng);
    let utts = [Utterance { feat: x.view(), lfv: None }];
    let fwd = model.forward_batch(&utts, Mode::Train).unwrap();
    let zero = model.backward(&fwd, &[Array2::zeros(fwd.logits[0].raw_dim())]).unwrap();
    assert!(zero.tensors().iter().all(|t| t.data.iter().all(|&g| g == 0.0)));
    let d = random(4, 3, &mut rng);
    let g1 = model.backward(&fwd, std::slice::from_ref(&d)).unwrap();
    let g2 = model.backward(&fwd, &[&d * 2.0]).unwrap();
    for (a, b) in g1.tensors().iter().zip(g2.tensors()) {
        for (x, y) in a.data.iter().zip(&b.data) {
            assert!((2.0 * x - y).abs() <= 1e-12 * y.abs().max(1.0));
        }
    }
    let infer = model.forward_batch(&utts, Mode::Infer).unwrap();
    assert!(matches!(
        model.backward(&infer, &[d]),
        Err(Error::MissingForwardCache)
    ));
}

#[test]
fn checkpoint_round_trip_and_failures() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let model = AcousticModel::new(ModelConfig::desk(12, 5, 2), 4).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.ckpt");
    model.save(&path).unwrap();
    let back = AcousticModel::load(&path).unwrap();
    let x = feature(&random(20, 12, &mut rng), FeatureKind::Logmel);
    let l = feature(&random(20, 2, &mut rng), FeatureKind::Lfv);
    let a = model.forward(&x, Some(&l)).unwrap();
    let b = back.forward(&x, Some(&l)).unwrap();
    assert!(a.iter().zip(b.iter()).all(|(p, q)| p.to_bits() == q.to_bits()));

    let other = ModelConfig::desk(12, 6, 2);
    assert!(matches!(AcousticModel::load_for(&path, &other), Err(Error::ShapeMismatch { .. })));
    assert!(AcousticModel::load_for(&path, model.config()).is_ok());

    let bytes = std::fs::read(&path).unwrap();
    std::fs::write(&path, &bytes[..bytes.len() / 2]).unwrap();
    assert!(matches!(AcousticModel::load(&path), Err(Error::Format { .. })));
}

fn toy_corpus(n: usize, rng: &mut ChaCha8Rng) -> Vec<TrainingExample> {
    // unit k shows up as a bump in feature band k
    (0..n)
        .map(|i| {
            let labels: Vec<u32> = (0..2 + i % 3).map(|_| rng.random_range(1..4)).collect();
            let mut frames = Vec::new();
            for &l in &labels {
                frames.extend(std::iter::repeat_n(0u32, 2));
                frames.extend(std::iter::repeat_n(l, 4));
            }
            frames.extend([0, 0]);
            let feat = Array2::from_shape_fn((frames.len(), 6), |(t, d)| {
                let on = frames[t] != 0 && d / 2 == frames[t] as usize - 1;
                (if on { 2.0 } else { 0.0 }) + rng.random_range(-0.3..0.3)
            });
            TrainingExample {
                id: format!("u{i:03}"),
                feat,
                lfv: None,
                targets: labels,
            }
        })
        .collect()
}

fn fast(epochs: usize) -> TrainConfig {
    TrainConfig {
        learning_rate: 0.01,
        momentum: 0.9,
        batch_size: 4,
        epochs,
        seed: 3,
        ..Default::default()
    }
}

#[test]
fn first_epoch_is_sorted_by_length() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let corpus = toy_corpus(12, &mut rng);
    let mut model = AcousticModel::new(tiny(6, 0, 4), 0).unwrap();
    let report = train(&mut model, &corpus, &fast(2)).unwrap();
    let first: Vec<usize> = report.batch_order[0].iter().flatten().map(|&i| corpus[i].frames()).collect();
    assert!(first.windows(2).all(|w| w[0] <= w[1]), "{first:?}");
    let second: Vec<usize> = report.batch_order[1].iter().flatten().copied().collect();
    let mut sorted = second.clone();
    sorted.sort_unstable();
    assert_eq!(sorted, (0..12).collect::<Vec<_>>());
    assert!(report.batch_order[0].iter().all(|b| b.len() <= 4));
}

#[test]
fn infeasible_utterances_are_skipped() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut corpus = toy_corpus(4, &mut rng);
    corpus[1].targets = vec![1; 40];
    let mut model = AcousticModel::new(tiny(6, 0, 4), 0).unwrap();
    let report = train(&mut model, &corpus, &fast(1)).unwrap();
    assert_eq!(report.skipped, ["u001"]);
    assert!(report.batch_order[0].iter().flatten().all(|&i| i != 1));
}

#[test]
fn single_utterance_is_memorized() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let corpus = toy_corpus(1, &mut rng);
    let mut model = AcousticModel::new(tiny(6, 0, 4), 0).unwrap();
    let cfg = TrainConfig {
        learning_rate: 0.05,
        epochs: 150,
        ..fast(0)
    };
    let report = train(&mut model, &corpus, &cfg).unwrap();
    let last = *report.loss_history.last().unwrap();
    assert!(last < 0.05 * report.loss_history[0], "{:?}", report.loss_history);
}

#[test]
fn training_is_reproducible() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let corpus = toy_corpus(8, &mut rng);
    let run = || {
        let mut m = AcousticModel::new(tiny(6, 0, 4), 5).unwrap();
        let r = train(&mut m, &corpus, &fast(3)).unwrap();
        (m, r)
    };
    let (m1, r1) = run();
    let (m2, r2) = run();
    assert_eq!(r1, r2);
    assert_eq!(m1, m2);
}
