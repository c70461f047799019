use std::collections::BTreeMap;
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{stack_context, FeatureKind, FeatureMatrix};
use crate::checkpoint;
use crate::error::{Error, Result};
use crate::math::{argmax, log_softmax_rows};
use crate::optim::{Nesterov, TrainConfig};
use crate::params::{Handle, ParamStore};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BottleneckNetConfig {
    pub n_layers: usize,
    pub layer_width: usize,
    pub bottleneck_dim: usize,
    /// 1-based index of the bottleneck among the hidden layers.
    pub bottleneck_position: usize,
    pub context_left: usize,
    pub context_right: usize,
    pub context_stride: usize,
    pub n_targets: usize,
}

impl BottleneckNetConfig {
    /// Five hidden layers of 1000, 42-unit bottleneck as the fourth, ±6 frames.
    pub fn full_bnf(n_targets: usize) -> Self {
        Self {
            n_layers: 5,
            layer_width: 1000,
            bottleneck_dim: 42,
            bottleneck_position: 4,
            context_left: 6,
            context_right: 6,
            context_stride: 1,
            n_targets,
        }
    }

    /// Six hidden layers of 1600 with the 42-unit bottleneck second to last,
    /// ±33 frames taking every third.
    pub fn full_lfv(n_languages: usize) -> Self {
        Self {
            n_layers: 6,
            layer_width: 1600,
            bottleneck_dim: 42,
            bottleneck_position: 5,
            context_left: 33,
            context_right: 33,
            context_stride: 3,
            n_targets: n_languages,
        }
    }

    pub fn desk_bnf(n_targets: usize) -> Self {
        Self {
            n_layers: 3,
            layer_width: 64,
            bottleneck_dim: 8,
            bottleneck_position: 2,
            context_left: 6,
            context_right: 6,
            context_stride: 1,
            n_targets,
        }
    }

    pub fn desk_lfv(n_languages: usize) -> Self {
        Self {
            n_layers: 3,
            layer_width: 32,
            bottleneck_dim: 4,
            bottleneck_position: 2,
            context_left: 33,
            context_right: 33,
            context_stride: 3,
            n_targets: n_languages,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_layers == 0 || !(1..=self.n_layers).contains(&self.bottleneck_position) {
            return Err(Error::InvalidConfig(format!(
                "bottleneck_position {} outside 1..={}",
                self.bottleneck_position, self.n_layers
            )));
        }
        if self.bottleneck_dim == 0 || self.bottleneck_dim >= self.layer_width {
            return Err(Error::InvalidConfig(format!(
                "bottleneck_dim {} must be in 1..{}",
                self.bottleneck_dim, self.layer_width
            )));
        }
        if self.n_targets == 0 {
            return Err(Error::InvalidConfig("n_targets must be ≥ 1".into()));
        }
        if self.context_stride == 0
            || !self.context_left.is_multiple_of(self.context_stride)
            || !self.context_right.is_multiple_of(self.context_stride)
        {
            return Err(Error::InvalidConfig("context must be a multiple of a non-zero stride".into()));
        }
        Ok(())
    }

    pub fn context_positions(&self) -> usize {
        (self.context_left + self.context_right) / self.context_stride + 1
    }

    fn layer_dim(&self, layer: usize) -> usize {
        if layer == self.bottleneck_position {
            self.bottleneck_dim
        } else {
            self.layer_width
        }
    }
}

/// Tanh feed-forward classifier over context-stacked frames with one
/// output layer per head (language).
#[derive(Debug, Clone, PartialEq)]
pub struct FeedForwardNet {
    cfg: BottleneckNetConfig,
    feature_dim: usize,
    heads: Vec<String>,
    /// Names of the output classes, when they have any.
    class_names: Vec<String>,
    params: ParamStore,
    layers: Vec<(Handle, Handle)>,
    outputs: Vec<(Handle, Handle)>,
}

#[derive(Serialize, Deserialize)]
struct NetHeader {
    net: String,
    config: BottleneckNetConfig,
    feature_dim: usize,
    heads: Vec<String>,
    #[serde(default)]
    class_names: Vec<String>,
}

struct Cache {
    input: Array2<f64>,
    /// Post-tanh activations of each hidden layer.
    acts: Vec<Array2<f64>>,
}

impl FeedForwardNet {
    pub fn new(cfg: BottleneckNetConfig, feature_dim: usize, heads: Vec<String>, seed: u64) -> Result<Self> {
        cfg.validate()?;
        if heads.is_empty() {
            return Err(Error::InvalidConfig("at least one output head is required".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = ParamStore::new();
        let mut fan_in = feature_dim * cfg.context_positions();
        let mut layers = Vec::new();
        for l in 1..=cfg.n_layers {
            let out = cfg.layer_dim(l);
            let w = params.add_glorot(format!("hidden{l}.w"), &[fan_in, out], fan_in, out, &mut rng);
            let b = params.add_const(format!("hidden{l}.b"), &[out], 0.0, true);
            layers.push((w, b));
            fan_in = out;
        }
        let mut outputs = Vec::new();
        for h in &heads {
            let w = params.add_glorot(format!("out.{h}.w"), &[fan_in, cfg.n_targets], fan_in, cfg.n_targets, &mut rng);
            let b = params.add_const(format!("out.{h}.b"), &[cfg.n_targets], 0.0, true);
            outputs.push((w, b));
        }
        Ok(Self {
            cfg,
            feature_dim,
            heads,
            class_names: Vec::new(),
            params,
            layers,
            outputs,
        })
    }

    pub fn config(&self) -> &BottleneckNetConfig {
        &self.cfg
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn heads(&self) -> &[String] {
        &self.heads
    }

    pub fn head_index(&self, head: &str) -> Option<usize> {
        self.heads.iter().position(|h| h == head)
    }

    pub fn params(&self) -> &ParamStore {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.params
    }

    /// Handles of the layers after the bottleneck, including output heads.
    pub fn post_bottleneck_handles(&self) -> Vec<Handle> {
        let mut out: Vec<Handle> = self.layers[self.cfg.bottleneck_position..]
            .iter()
            .flat_map(|&(w, b)| [w, b])
            .collect();
        out.extend(self.outputs.iter().flat_map(|&(w, b)| [w, b]));
        out
    }

    pub fn stack(&self, feat: &FeatureMatrix) -> Result<Array2<f64>> {
        if feat.dim() != self.feature_dim {
            return Err(Error::DimMismatch {
                layer: "extractor input".into(),
                expected: self.feature_dim,
                found: feat.dim(),
            });
        }
        let c = &self.cfg;
        Ok(stack_context(feat, c.context_left, c.context_right, c.context_stride)?.to_f64())
    }

    fn affine(&self, x: ArrayView2<'_, f64>, (w, b): (Handle, Handle)) -> Array2<f64> {
        x.dot(&self.params.view2(w)) + self.params.view1(b)
    }

    fn forward_hidden(&self, input: Array2<f64>) -> Cache {
        let mut acts: Vec<Array2<f64>> = Vec::with_capacity(self.layers.len());
        for &layer in &self.layers {
            let x = acts.last().map_or(input.view(), |a| a.view());
            let z = self.affine(x, layer);
            acts.push(z.mapv(f64::tanh));
        }
        Cache { input, acts }
    }

    /// Linear activations of the bottleneck; later layers are not touched.
    pub fn bottleneck(&self, stacked: ArrayView2<'_, f64>) -> Array2<f64> {
        let mut x = stacked.to_owned();
        for (l, &layer) in self.layers.iter().enumerate() {
            let z = self.affine(x.view(), layer);
            if l + 1 == self.cfg.bottleneck_position {
                return z;
            }
            x = z.mapv(f64::tanh);
        }
        unreachable!("bottleneck position validated")
    }

    /// Log-posteriors of one head for each stacked frame.
    pub fn log_posteriors(&self, stacked: ArrayView2<'_, f64>, head: usize) -> Array2<f64> {
        let cache = self.forward_hidden(stacked.to_owned());
        let last = cache.acts.last().expect("≥1 hidden layer");
        log_softmax_rows(self.affine(last.view(), self.outputs[head]).view())
    }

    pub fn classify(&self, feat: &FeatureMatrix, head: usize) -> Result<Vec<u32>> {
        let lp = self.log_posteriors(self.stack(feat)?.view(), head);
        Ok(lp.rows().into_iter().map(|r| argmax(r.iter().copied()) as u32).collect())
    }

    /// Mean cross-entropy over the batch and its gradient.
    pub fn loss_and_grad(
        &self,
        input: ArrayView2<'_, f64>,
        targets: &[u32],
        heads: &[usize],
    ) -> (f64, ParamStore) {
        let n = input.nrows();
        let cache = self.forward_hidden(input.to_owned());
        let last = cache.acts.last().expect("≥1 hidden layer");
        let mut grads = self.params.zeros_like();
        let mut d_last = Array2::<f64>::zeros(last.raw_dim());
        let mut loss = 0.0;
        for (h, &(w, b)) in self.outputs.iter().enumerate() {
            let rows: Vec<usize> = (0..n).filter(|&i| heads[i] == h).collect();
            if rows.is_empty() {
                continue;
            }
            let x = last.select(Axis(0), &rows);
            let lp = log_softmax_rows(self.affine(x.view(), (w, b)).view());
            let mut d = lp.mapv(f64::exp);
            for (r, &i) in rows.iter().enumerate() {
                let k = targets[i] as usize;
                loss -= lp[[r, k]];
                d[[r, k]] -= 1.0;
            }
            d /= n as f64;
            grads.view2_mut(w).assign(&x.t().dot(&d));
            grads.view1_mut(b).assign(&d.sum_axis(Axis(0)));
            let dx = d.dot(&self.params.view2(w).t());
            for (r, &i) in rows.iter().enumerate() {
                d_last.row_mut(i).assign(&dx.row(r));
            }
        }
        let mut delta = d_last;
        for l in (0..self.layers.len()).rev() {
            let (w, b) = self.layers[l];
            // through tanh
            delta = delta * cache.acts[l].mapv(|a| 1.0 - a * a);
            let x = if l == 0 { cache.input.view() } else { cache.acts[l - 1].view() };
            grads.view2_mut(w).assign(&x.t().dot(&delta));
            grads.view1_mut(b).assign(&delta.sum_axis(Axis(0)));
            if l > 0 {
                delta = delta.dot(&self.params.view2(w).t());
            }
        }
        (loss / n as f64, grads)
    }

    fn header(&self, net: &str) -> NetHeader {
        NetHeader {
            net: net.into(),
            config: self.cfg.clone(),
            feature_dim: self.feature_dim,
            heads: self.heads.clone(),
            class_names: self.class_names.clone(),
        }
    }

    fn save_as(&self, net: &str, path: &Path) -> Result<()> {
        let header = serde_json::to_string(&self.header(net))?;
        checkpoint::write(path, &header, &self.params)
    }

    fn load_as(net: &str, path: &Path) -> Result<Self> {
        let (header, params) = checkpoint::read(path)?;
        let h: NetHeader = serde_json::from_str(&header)?;
        if h.net != net {
            return Err(Error::format(path, format!("expected a {net} net, found {}", h.net)));
        }
        let mut fresh = Self::new(h.config, h.feature_dim, h.heads, 0)?;
        fresh.class_names = h.class_names;
        checkpoint::restore_into(&mut fresh.params, params)?;
        Ok(fresh)
    }
}

/// One utterance of frame-labelled training data.
#[derive(Debug, Clone)]
pub struct LabeledFrames {
    pub features: FeatureMatrix,
    pub targets: Vec<u32>,
    pub language: String,
}

#[derive(Debug, Clone)]
pub struct TrainedNet<N> {
    pub net: N,
    /// Mean per-frame cross-entropy for each epoch.
    pub loss_history: Vec<f64>,
}

fn distinct_languages<'a>(langs: impl Iterator<Item = &'a str>) -> Vec<String> {
    let set: std::collections::BTreeSet<&str> = langs.collect();
    set.into_iter().map(str::to_owned).collect()
}

fn fit(net: &mut FeedForwardNet, corpus: &[LabeledFrames], train: &TrainConfig) -> Result<Vec<f64>> {
    train.validate()?;
    let mut blocks = Vec::new();
    let mut targets = Vec::new();
    let mut heads = Vec::new();
    for utt in corpus {
        if utt.targets.len() != utt.features.frames() {
            return Err(Error::LengthMismatch {
                refs: utt.features.frames(),
                hyps: utt.targets.len(),
            });
        }
        if let Some(&bad) = utt.targets.iter().find(|&&t| t as usize >= net.cfg.n_targets) {
            return Err(Error::InvalidConfig(format!(
                "target {bad} ≥ n_targets {}",
                net.cfg.n_targets
            )));
        }
        let head = net
            .head_index(&utt.language)
            .ok_or_else(|| Error::InvalidConfig(format!("no output head for language {}", utt.language)))?;
        blocks.push(net.stack(&utt.features)?);
        targets.extend_from_slice(&utt.targets);
        heads.extend(std::iter::repeat_n(head, utt.targets.len()));
    }
    if targets.is_empty() {
        return Err(Error::InvalidConfig("empty training corpus".into()));
    }
    let views: Vec<_> = blocks.iter().map(|b| b.view()).collect();
    let inputs = ndarray::concatenate(Axis(0), &views).expect("consistent stacked dims");
    drop(blocks);

    let mut rng = ChaCha8Rng::seed_from_u64(train.seed ^ 0x5eed_f00d);
    let mut opt = Nesterov::new(&net.params);
    let mut order: Vec<usize> = (0..targets.len()).collect();
    let mut history = Vec::with_capacity(train.epochs);
    for epoch in 0..train.epochs {
        order.shuffle(&mut rng);
        let (mut total, mut count) = (0.0, 0usize);
        for batch in order.chunks(train.batch_size) {
            let x = inputs.select(Axis(0), batch);
            let t: Vec<u32> = batch.iter().map(|&i| targets[i]).collect();
            let h: Vec<usize> = batch.iter().map(|&i| heads[i]).collect();
            let (loss, grads) = net.loss_and_grad(x.view(), &t, &h);
            opt.step(&mut net.params, &grads, train)?;
            total += loss * batch.len() as f64;
            count += batch.len();
        }
        let mean = total / count as f64;
        log::debug!("extractor epoch {}: loss {mean:.4}", epoch + 1);
        history.push(mean);
    }
    Ok(history)
}

/// Network whose bottleneck yields multilingual BNFs.
#[derive(Debug, Clone, PartialEq)]
pub struct BottleneckNet(pub FeedForwardNet);

impl BottleneckNet {
    pub fn extract(&self, feat: &FeatureMatrix) -> Result<FeatureMatrix> {
        let stacked = self.0.stack(feat)?;
        let z = self.0.bottleneck(stacked.view());
        FeatureMatrix::from_f64(z.view(), feat.frame_shift_ms(), FeatureKind::Bnf)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.0.save_as("bnf", path.as_ref())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        FeedForwardNet::load_as("bnf", path.as_ref()).map(Self)
    }
}

/// Shared hidden layers with one output layer per language.
pub fn train_bottleneck_net(
    corpus: &[LabeledFrames],
    cfg: &BottleneckNetConfig,
    train: &TrainConfig,
) -> Result<TrainedNet<BottleneckNet>> {
    let dim = corpus
        .first()
        .map(|u| u.features.dim())
        .ok_or_else(|| Error::InvalidConfig("empty training corpus".into()))?;
    if let Some(u) = corpus.iter().find(|u| u.features.dim() != dim) {
        return Err(Error::DimMismatch {
            layer: "extractor input".into(),
            expected: dim,
            found: u.features.dim(),
        });
    }
    let langs = distinct_languages(corpus.iter().map(|u| u.language.as_str()));
    let mut net = FeedForwardNet::new(cfg.clone(), dim, langs, train.seed)?;
    let loss_history = fit(&mut net, corpus, train)?;
    Ok(TrainedNet {
        net: BottleneckNet(net),
        loss_history,
    })
}

/// Utterance-level summary of an LFV sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct LanguageVector {
    pub values: Vec<f64>,
    pub language_hint: Option<String>,
}

/// Frame-level language classifier over stacked BNFs.
#[derive(Debug, Clone, PartialEq)]
pub struct LfvNet(pub FeedForwardNet);

impl LfvNet {
    pub fn languages(&self) -> &[String] {
        &self.0.class_names
    }

    pub fn extract(&self, bnf: &FeatureMatrix) -> Result<FeatureMatrix> {
        if bnf.kind() != FeatureKind::Bnf {
            return Err(Error::WrongFeatureKind {
                expected: FeatureKind::Bnf.name().into(),
                found: bnf.kind().name().into(),
            });
        }
        let stacked = self.0.stack(bnf)?;
        let z = self.0.bottleneck(stacked.view());
        FeatureMatrix::from_f64(z.view(), bnf.frame_shift_ms(), FeatureKind::Lfv)
    }

    /// Frame-averaged LFV.
    pub fn utterance_vector(&self, bnf: &FeatureMatrix, hint: Option<&str>) -> Result<LanguageVector> {
        let lfv = self.extract(bnf)?.to_f64();
        let mean: Array1<f64> = lfv.mean_axis(Axis(0)).expect("T ≥ 1");
        Ok(LanguageVector {
            values: mean.to_vec(),
            language_hint: hint.map(str::to_owned),
        })
    }

    /// Predicted language index per frame.
    pub fn classify(&self, bnf: &FeatureMatrix) -> Result<Vec<u32>> {
        self.0.classify(bnf, 0)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.0.save_as("lfv", path.as_ref())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        FeedForwardNet::load_as("lfv", path.as_ref()).map(Self)
    }
}

/// Train the language classifier; class `i` is the `i`-th language in sorted
/// order.
pub fn train_lfv_net(
    corpus: &[(FeatureMatrix, String)],
    cfg: &BottleneckNetConfig,
    train: &TrainConfig,
) -> Result<TrainedNet<LfvNet>> {
    let langs = distinct_languages(corpus.iter().map(|(_, l)| l.as_str()));
    if langs.len() < 2 {
        return Err(Error::TooFewLanguages);
    }
    if let Some((f, _)) = corpus.iter().find(|(f, _)| f.kind() != FeatureKind::Bnf) {
        return Err(Error::WrongFeatureKind {
            expected: FeatureKind::Bnf.name().into(),
            found: f.kind().name().into(),
        });
    }
    let dim = corpus[0].0.dim();
    let cfg = BottleneckNetConfig {
        n_targets: langs.len(),
        ..cfg.clone()
    };
    let mut net = FeedForwardNet::new(cfg, dim, vec!["lang".into()], train.seed)?;
    let labelled: Vec<LabeledFrames> = corpus
        .iter()
        .map(|(f, l)| LabeledFrames {
            features: f.clone(),
            targets: vec![langs.binary_search(l).expect("listed") as u32; f.frames()],
            language: "lang".into(),
        })
        .collect();
    let loss_history = fit(&mut net, &labelled, train)?;
    net.class_names = langs;
    Ok(TrainedNet {
        net: LfvNet(net),
        loss_history,
    })
}

/// Fraction of frames whose argmax class under `head` equals the target.
pub fn frame_accuracy(net: &FeedForwardNet, corpus: &[LabeledFrames]) -> Result<f64> {
    let (mut right, mut total) = (0usize, 0usize);
    for utt in corpus {
        let head = net.head_index(&utt.language).unwrap_or(0);
        let pred = net.classify(&utt.features, head)?;
        right += pred.iter().zip(&utt.targets).filter(|(a, b)| a == b).count();
        total += pred.len();
    }
    Ok(if total == 0 { 0.0 } else { right as f64 / total as f64 })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Separability {
    pub within: f64,
    pub between: f64,
}

impl Separability {
    pub fn separable(&self) -> bool {
        self.between > self.within
    }
}

/// Mean Euclidean distance between utterance vectors of the same and of
/// different languages.
pub fn lfv_separability(vectors: &[LanguageVector]) -> Separability {
    let mut sums: BTreeMap<bool, (f64, usize)> = BTreeMap::new();
    for (i, a) in vectors.iter().enumerate() {
        for b in &vectors[i + 1..] {
            let d = a
                .values
                .iter()
                .zip(&b.values)
                .map(|(x, y)| (x - y).powi(2))
                .sum::<f64>()
                .sqrt();
            let e = sums.entry(a.language_hint == b.language_hint).or_default();
            e.0 += d;
            e.1 += 1;
        }
    }
    let mean = |same| {
        sums.get(&same)
            .map_or(f64::NAN, |&(s, n)| s / n as f64)
    };
    Separability {
        within: mean(true),
        between: mean(false),
    }
}
