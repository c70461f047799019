//! Acceptance suite: one line per criterion, non-zero exit if any fails.
//!
//! Oracles here are written from scratch (path enumeration, finite
//! differences, hand-counted fixtures) rather than borrowed from the crate.

use std::collections::HashMap;
use std::path::Path;
use std::time::{Duration, Instant};

use ndarray::{Array2, ArrayView2};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use ctcpoly::ctc::{ctc_grad, ctc_loss};
use ctcpoly::decoder::{greedy_decode, prefix_beam_decode, BeamConfig};
use ctcpoly::features::FeatureKind;
use ctcpoly::harness::experiment::{DataConfig, ScoreConfig};
use ctcpoly::harness::{
    generate_corpus, ingest, prepare_benchmark, pseudo_languages, run_experiment, BenchmarkConfig, Condition,
    CorpusShape, ExperimentConfig, IngestFilters, PseudoLanguageConfig, RecipeSettings,
};
use ctcpoly::network::{AcousticModel, ConvSpec, ModelConfig, Utterance};
use ctcpoly::optim::TrainConfig;
use ctcpoly::scoring::{edit_distance, ter, ResultRow};
use ctcpoly::unitset::UnitMode;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

// ---------------------------------------------------------------- oracles

fn log_softmax(x: ArrayView2<'_, f64>) -> Array2<f64> {
    let mut out = x.to_owned();
    for mut row in out.rows_mut() {
        let m = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        let z = row.iter().map(|v| (v - m).exp()).sum::<f64>().ln() + m;
        row.mapv_inplace(|v| v - z);
    }
    out
}

fn merge_and_strip(path: &[u32]) -> Vec<u32> {
    let mut out: Vec<u32> = Vec::new();
    let mut last = u32::MAX;
    for &p in path {
        if p != last && p != 0 {
            out.push(p);
        }
        last = p;
    }
    out
}

fn logsumexp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Log-probability of every collapsed labeling, by visiting all V^T paths.
fn labeling_posteriors(logp: &Array2<f64>) -> HashMap<Vec<u32>, f64> {
    let (t, v) = logp.dim();
    let mut terms: HashMap<Vec<u32>, Vec<f64>> = HashMap::new();
    let mut path = vec![0u32; t];
    loop {
        let lp: f64 = path.iter().enumerate().map(|(i, &p)| logp[[i, p as usize]]).sum();
        terms.entry(merge_and_strip(&path)).or_default().push(lp);
        let mut i = 0;
        loop {
            if i == t {
                return terms.into_iter().map(|(k, v)| (k, logsumexp(&v))).collect();
            }
            path[i] += 1;
            if (path[i] as usize) < v {
                break;
            }
            path[i] = 0;
            i += 1;
        }
    }
}

fn random_logits(rng: &mut ChaCha8Rng, t: usize, v: usize, scale: f64) -> Array2<f64> {
    let n = Normal::new(0.0, scale).unwrap();
    Array2::from_shape_fn((t, v), |_| n.sample(rng))
}

fn feasible(t: usize, labels: &[u32]) -> bool {
    labels.len() + labels.windows(2).filter(|w| w[0] == w[1]).count() <= t
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

// ---------------------------------------------------------------- criteria

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst: f64 = 0.0;
    let mut n = 0;
    while n < 250 {
        let t = rng.random_range(1..=8);
        let v = rng.random_range(2..=4);
        let l = rng.random_range(1..=3);
        let labels: Vec<u32> = (0..l).map(|_| rng.random_range(1..v as u32)).collect();
        if !feasible(t, &labels) {
            continue;
        }
        let logits = random_logits(&mut rng, t, v, 2.0);
        let oracle = -labeling_posteriors(&log_softmax(logits.view()))[&labels];
        let (loss, _) = ctc_loss(logits.view(), &labels).expect("feasible");
        worst = worst.max((loss - oracle).abs());
        n += 1;
    }
    outcome(worst <= 1e-10, format!("{n} instances, max |Δ| = {worst:.2e} (limit 1e-10)"))
}

fn ctc_grad_check(rng: &mut ChaCha8Rng) -> f64 {
    loop {
        let t = rng.random_range(2..=8);
        let v = rng.random_range(2..=5);
        let l = rng.random_range(1..=3);
        let labels: Vec<u32> = (0..l).map(|_| rng.random_range(1..v as u32)).collect();
        if !feasible(t, &labels) {
            continue;
        }
        let logits = random_logits(rng, t, v, 1.5);
        let grad = ctc_grad(logits.view(), &labels).unwrap();
        let h = 1e-4;
        let mut worst: f64 = 0.0;
        for i in 0..t {
            for j in 0..v {
                let mut up = logits.clone();
                up[[i, j]] += h;
                let mut down = logits.clone();
                down[[i, j]] -= h;
                let num = (ctc_loss(up.view(), &labels).unwrap().0 - ctc_loss(down.view(), &labels).unwrap().0) / (2.0 * h);
                worst = worst.max(rel_err(grad[[i, j]], num));
            }
        }
        return worst;
    }
}

fn tiny_model(rng: &mut ChaCha8Rng) -> ModelConfig {
    let mut conv = || ConvSpec {
        kernel: (rng.random_range(1..=3), rng.random_range(1..=3)),
        stride: (rng.random_range(1..=2), rng.random_range(1..=2)),
        channels: rng.random_range(1..=2),
    };
    let conv_specs = vec![conv(), conv()];
    ModelConfig {
        conv_specs,
        recurrent_layers: rng.random_range(1..=2),
        recurrent_width: rng.random_range(2..=3),
        lfv_dim: if rng.random::<bool>() { 2 } else { 0 },
        output_dim: rng.random_range(3..=4),
        input_dim: rng.random_range(3..=5),
    }
}

/// Worst relative error of the analytic gradient against central differences
/// at `h`, and against the Richardson combination of `h` and `h/2`.
fn model_grad_check(rng: &mut ChaCha8Rng) -> (f64, f64) {
    let cfg = tiny_model(rng);
    let mut model = AcousticModel::new(cfg.clone(), rng.random()).unwrap();
    let batch = rng.random_range(1..=2);
    let mut feats = Vec::new();
    let mut targets = Vec::new();
    for _ in 0..batch {
        let t = rng.random_range(6..=9);
        feats.push((
            random_logits(rng, t, cfg.input_dim, 1.0),
            (cfg.lfv_dim > 0).then(|| random_logits(rng, t, cfg.lfv_dim, 1.0)),
        ));
        let out = cfg.output_frames(t);
        let len = rng.random_range(1..=2.min(out));
        let mut labels: Vec<u32> = (0..len).map(|_| rng.random_range(1..cfg.output_dim as u32)).collect();
        if !feasible(out, &labels) {
            labels.truncate(1);
        }
        targets.push(labels);
    }
    let utts: Vec<Utterance<'_>> = feats
        .iter()
        .map(|(f, l)| Utterance {
            feat: f.view(),
            lfv: l.as_ref().map(|a| a.view()),
        })
        .collect();
    let (_, grads) = model.ctc_objective(&utts, &targets).unwrap();
    let h = 1e-4;
    let mut worst: f64 = 0.0;
    let mut worst_extrapolated: f64 = 0.0;
    let n_tensors = model.params().tensors().len();
    for ti in 0..n_tensors {
        if !model.params().tensors()[ti].trainable {
            continue;
        }
        for j in 0..model.params().tensors()[ti].data.len() {
            let orig = model.params().tensors()[ti].data[j];
            let mut central = |step: f64| {
                model.params_mut().data_mut(ti)[j] = orig + step;
                let up = model.ctc_objective(&utts, &targets).unwrap().0;
                model.params_mut().data_mut(ti)[j] = orig - step;
                let down = model.ctc_objective(&utts, &targets).unwrap().0;
                model.params_mut().data_mut(ti)[j] = orig;
                (up - down) / (2.0 * step)
            };
            let (d1, d2) = (central(h), central(h / 2.0));
            let analytic = grads.tensors()[ti].data[j];
            worst = worst.max(rel_err(analytic, d1));
            worst_extrapolated = worst_extrapolated.max(rel_err(analytic, (4.0 * d2 - d1) / 3.0));
        }
    }
    (worst, worst_extrapolated)
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let ctc_worst = (0..25).map(|_| ctc_grad_check(&mut rng)).fold(0.0, f64::max);
    let (model_worst, extrapolated) = (0..20)
        .map(|_| model_grad_check(&mut rng))
        .fold((0.0, 0.0), |(a, b), (x, y)| (f64::max(a, x), f64::max(b, y)));
    // the extrapolated figure is diagnostic only; pass/fail uses plain central differences
    outcome(
        ctc_worst < 1e-4 && model_worst < 1e-4,
        format!(
            "ctc_grad 25 configs max rel {ctc_worst:.2e}; model 20 configs max rel {model_worst:.2e} (limit 1e-4, h 1e-4); \
             vs Richardson-extrapolated differences {extrapolated:.2e}"
        ),
    )
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let exhaustive = BeamConfig {
        beam: 1 << 20,
        alpha: 0.0,
        beta: 0.0,
    };
    let mut map_hits = 0;
    let n = 150;
    for _ in 0..n {
        let t = rng.random_range(1..=6);
        let v = rng.random_range(2..=4);
        let logits = random_logits(&mut rng, t, v, 1.5);
        let post = labeling_posteriors(&log_softmax(logits.view()));
        let map = post
            .iter()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(k, _)| k.clone())
            .unwrap();
        if prefix_beam_decode(logits.view(), None, &exhaustive).unwrap() == map {
            map_hits += 1;
        }
    }
    let one = BeamConfig {
        beam: 1,
        alpha: 0.0,
        beta: 0.0,
    };
    let mut greedy_hits = 0;
    for _ in 0..n {
        let t = rng.random_range(1..=6);
        let v = rng.random_range(2..=4);
        let mut logits = random_logits(&mut rng, t, v, 1.0);
        for i in 0..t {
            let j = rng.random_range(0..v);
            logits[[i, j]] += 8.0;
        }
        if prefix_beam_decode(logits.view(), None, &one).unwrap() == greedy_decode(logits.view()).unwrap() {
            greedy_hits += 1;
        }
    }
    outcome(
        map_hits == n && greedy_hits == n,
        format!("exhaustive beam = MAP on {map_hits}/{n}; beam 1 = greedy on {greedy_hits}/{n} peaked inputs"),
    )
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let word = |rng: &mut ChaCha8Rng| -> Vec<u8> { (0..rng.random_range(0..8)).map(|_| rng.random_range(b'a'..b'e')).collect() };
    let mut failures = Vec::new();
    for _ in 0..500 {
        let (a, b, c) = (word(&mut rng), word(&mut rng), word(&mut rng));
        let ab = edit_distance(&a, &b);
        let ba = edit_distance(&b, &a);
        if ab.errors() != ba.errors() || ab.substitutions != ba.substitutions || ab.insertions != ba.deletions {
            failures.push("symmetry");
        }
        if ab.errors() > edit_distance(&a, &c).errors() + edit_distance(&c, &b).errors() {
            failures.push("triangle");
        }
        if edit_distance(&a, &a).errors() != 0 || ((ab.errors() == 0) != (a == b)) {
            failures.push("identity");
        }
    }
    let kitten = edit_distance(b"kitten", b"sitting").errors();
    if kitten != 3 {
        failures.push("kitten/sitting");
    }
    // deletion of 3, insertion of a second 6, 8 read as 9: 3 errors over 9 tokens
    let refs = vec![vec![1, 2, 3, 4], vec![5, 6], vec![7, 8, 9]];
    let hyps = vec![vec![1, 2, 4], vec![5, 6, 6], vec![7, 9, 9]];
    let corpus = ter(&refs, &hyps).unwrap();
    let expected = (1, 1, 1, 9);
    if (corpus.substitutions, corpus.insertions, corpus.deletions, corpus.ref_len) != expected
        || (corpus.rate() - 3.0 / 9.0).abs() > 1e-12
    {
        failures.push("corpus TER fixture");
    }
    failures.dedup();
    outcome(
        failures.is_empty(),
        format!("500 random triples, kitten/sitting = {kitten}, fixture TER {:.2}%; failures {failures:?}", corpus.percent()),
    )
}

fn experiment(name: &str, manifest: &Path, languages: &[&str], out: &Path, seed: u64, train: TrainConfig) -> ExperimentConfig {
    ExperimentConfig {
        name: name.into(),
        seed,
        output_dir: out.to_path_buf(),
        data: DataConfig {
            manifest: manifest.to_path_buf(),
            lexicon: None,
            languages: languages.iter().map(|s| s.to_string()).collect(),
            mode: UnitMode::Grapheme,
            held_out: 0.1,
            split_seed: 0,
            min_duration: 1.0,
            max_symbols: 639,
        },
        features: Default::default(),
        model: Default::default(),
        train,
        decode: Default::default(),
        score: ScoreConfig { training_set: true },
    }
}

fn convergence_train() -> TrainConfig {
    TrainConfig {
        learning_rate: 0.03,
        epochs: 12,
        max_grad_norm: Some(10.0),
        ..Default::default()
    }
}

fn criterion_5(work: &Path) -> Outcome {
    let start = Instant::now();
    let specs = pseudo_languages(&PseudoLanguageConfig::default(), 5).unwrap();
    let corpus = generate_corpus(&specs, &CorpusShape::default(), 5, work.join("data")).unwrap();
    let cfg = experiment("conv", &corpus.manifest, &["aa", "bb"], &work.join("run"), 5, convergence_train());
    let result = run_experiment(&cfg).unwrap();
    let train_rows: Vec<&ResultRow> = result.rows.iter().filter(|r| r.system.ends_with("/train")).collect();
    let total = train_rows.iter().map(|r| r.breakdown).sum::<ctcpoly::scoring::ErrorBreakdown>();
    let h = &result.train.loss_history;
    let ratio = h[9] / h[0];
    let elapsed = start.elapsed();
    outcome(
        total.percent() < 10.0 && ratio < 0.5 && elapsed < Duration::from_secs(15 * 60),
        format!(
            "training TER {:.2}% (limit 10%), epoch-10/epoch-1 loss {:.3} (limit 0.5), {} epochs in {:.0?}",
            total.percent(),
            ratio,
            h.len(),
            elapsed
        ),
    )
}

const SEEDS: [u64; 5] = [11, 12, 13, 14, 15];

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

fn benchmark_config() -> BenchmarkConfig {
    BenchmarkConfig::default()
}

fn benchmark_settings() -> RecipeSettings {
    let mut s = RecipeSettings::default();
    s.train.epochs = 5;
    s.monolingual_epochs = Some(10);
    s
}

struct TrendRuns {
    /// (mode, condition, language) → TER per seed
    ter: HashMap<(UnitMode, String, String), Vec<f64>>,
    /// pooled multilingual TER per seed, by feature kind
    features: HashMap<FeatureKind, Vec<f64>>,
    separable: Vec<bool>,
    lfv_accuracy: Vec<f64>,
    elapsed: Duration,
}

fn trend_runs(work: &Path) -> TrendRuns {
    let start = Instant::now();
    let settings = benchmark_settings();
    let mut runs = TrendRuns {
        ter: HashMap::new(),
        features: HashMap::new(),
        separable: Vec::new(),
        lfv_accuracy: Vec::new(),
        elapsed: Duration::ZERO,
    };
    for seed in SEEDS {
        let dir = work.join(format!("bench-{seed}"));
        let bench = prepare_benchmark(&benchmark_config(), seed, &dir).unwrap();
        runs.separable.push(bench.separability.separable());
        runs.lfv_accuracy.push(bench.lfv_accuracy);
        for mode in [UnitMode::Grapheme, UnitMode::Phone] {
            for c in [Condition::Monolingual, Condition::Multilingual, Condition::MultilingualLfv] {
                let rows = bench.run_condition(c, mode, FeatureKind::Bnf, &settings, seed, &dir).unwrap();
                for r in &rows {
                    runs.ter
                        .entry((mode, r.system.clone(), r.language.clone()))
                        .or_default()
                        .push(r.breakdown.percent());
                }
                if mode == UnitMode::Grapheme && c == Condition::Multilingual {
                    let pooled: ctcpoly::scoring::ErrorBreakdown = rows.iter().map(|r| r.breakdown).sum();
                    runs.features.entry(FeatureKind::Bnf).or_default().push(pooled.percent());
                }
            }
        }
        let rows = bench
            .run_condition(Condition::Multilingual, UnitMode::Grapheme, FeatureKind::Logmel, &settings, seed, &dir.join("logmel"))
            .unwrap();
        let pooled: ctcpoly::scoring::ErrorBreakdown = rows.iter().map(|r| r.breakdown).sum();
        runs.features.entry(FeatureKind::Logmel).or_default().push(pooled.percent());
        eprintln!("  benchmark seed {seed} done after {:.0?}", start.elapsed());
    }
    runs.elapsed = start.elapsed();
    runs
}

fn criterion_6(runs: &TrendRuns) -> Outcome {
    let mut lines = Vec::new();
    let mut pass = true;
    let mut langs: Vec<&String> = runs.ter.keys().map(|k| &k.2).collect();
    langs.sort();
    langs.dedup();
    for mode in [UnitMode::Grapheme, UnitMode::Phone] {
        for lang in &langs {
            let m = |c: &str| median(runs.ter[&(mode, c.to_string(), (*lang).clone())].clone());
            let (mono, lfv, ml) = (m("Monolingual"), m("ML+LFV"), m("ML"));
            let ok = mono <= lfv && lfv <= ml;
            pass &= ok;
            lines.push(format!("{mode:?}/{lang}: {mono:.1} ≤ {lfv:.1} ≤ {ml:.1}{}", if ok { "" } else { " (violated)" }));
        }
    }
    outcome(
        pass,
        format!(
            "median TER mono ≤ ML+LFV ≤ ML over {} seeds; LFV separable {:?}, held-out LFV accuracy {:?}\n    {}",
            SEEDS.len(),
            runs.separable,
            runs.lfv_accuracy.iter().map(|a| format!("{a:.2}")).collect::<Vec<_>>(),
            lines.join("\n    ")
        ),
    )
}

fn criterion_7(runs: &TrendRuns) -> Outcome {
    let bnf = median(runs.features[&FeatureKind::Bnf].clone());
    let logmel = median(runs.features[&FeatureKind::Logmel].clone());
    outcome(
        bnf <= logmel,
        format!(
            "median multilingual TER: BNF {bnf:.1}% vs log-Mel {logmel:.1}% over {} seeds (benchmark total {:.0?})",
            SEEDS.len(),
            runs.elapsed
        ),
    )
}

fn criterion_8(work: &Path) -> Outcome {
    let specs = pseudo_languages(&PseudoLanguageConfig::default(), 8).unwrap();
    let shape = CorpusShape {
        utts_per_language: 30,
        ..Default::default()
    };
    let corpus = generate_corpus(&specs, &shape, 8, work.join("data")).unwrap();
    let train = TrainConfig {
        learning_rate: 0.003,
        epochs: 3,
        ..Default::default()
    };
    let a = run_experiment(&experiment("det", &corpus.manifest, &["aa", "bb"], &work.join("a"), 8, train.clone())).unwrap();
    let b = run_experiment(&experiment("det", &corpus.manifest, &["aa", "bb"], &work.join("b"), 8, train)).unwrap();
    let same_rows = a.rows == b.rows;
    let same_curves = a.train.loss_history.iter().map(|x| x.to_bits()).eq(b.train.loss_history.iter().map(|x| x.to_bits()));
    let ckpt_a = std::fs::read(work.join("a/model.ckpt")).unwrap();
    let same_ckpt = ckpt_a == std::fs::read(work.join("b/model.ckpt")).unwrap();

    let loaded = AcousticModel::load(work.join("a/model.ckpt")).unwrap();
    let feats = ctcpoly::features::FeatureMatrix::load(corpus.manifest.parent().unwrap().join(&corpus.entries[0].source)).unwrap();
    let before = a.model.forward(&feats, None).unwrap();
    let after = loaded.forward(&feats, None).unwrap();
    let bit_identical = before.iter().map(|x| x.to_bits()).eq(after.iter().map(|x| x.to_bits()));
    outcome(
        same_rows && same_curves && same_ckpt && bit_identical,
        format!("rows equal {same_rows}, loss curves equal {same_curves}, checkpoints byte-equal {same_ckpt}, reloaded logits bit-identical {bit_identical}"),
    )
}

fn criterion_9() -> Outcome {
    let fixture = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/ingest.jsonl");
    let report = ingest(&fixture, &IngestFilters::default()).unwrap();
    let kept: Vec<&str> = report.entries.iter().map(|e| e.utterance_id.as_str()).collect();
    let dropped_right = !kept.contains(&"short_0p5s") && !kept.contains(&"long_640");
    outcome(
        report.too_short == 1 && report.too_long == 1 && report.noise_only == 0 && dropped_right && kept.len() == 4,
        format!(
            "kept {kept:?}; dropped {} short, {} long, {} noise-only",
            report.too_short, report.too_long, report.noise_only
        ),
    )
}

fn main() {
    let work = tempfile::tempdir().expect("temp dir");
    let mut results: Vec<(usize, Outcome, Duration)> = Vec::new();
    let mut run = |n: usize, f: &mut dyn FnMut() -> Outcome, limit: Option<Duration>| {
        let t = Instant::now();
        let mut o = f();
        let took = t.elapsed();
        if let Some(limit) = limit {
            if took > limit {
                o.pass = false;
                o.detail.push_str(&format!("; runtime {took:.1?} over {limit:?}"));
            }
        }
        println!("criterion {n} [{}] {} ({took:.1?})", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        results.push((n, o, took));
    };
    run(1, &mut criterion_1, Some(Duration::from_secs(10)));
    run(2, &mut criterion_2, Some(Duration::from_secs(60)));
    run(3, &mut criterion_3, Some(Duration::from_secs(30)));
    run(4, &mut criterion_4, None);
    run(5, &mut || criterion_5(&work.path().join("c5")), Some(Duration::from_secs(15 * 60)));
    let runs = trend_runs(&work.path().join("c6"));
    run(6, &mut || criterion_6(&runs), None);
    run(7, &mut || criterion_7(&runs), None);
    run(8, &mut || criterion_8(&work.path().join("c8")), None);
    run(9, &mut criterion_9, None);
    let failed: Vec<usize> = results.iter().filter(|r| !r.1.pass).map(|r| r.0).collect();
    println!("acceptance: {}/{} criteria passed", results.len() - failed.len(), results.len());
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
