//! Acoustic model: two strided convolutions over time × frequency with
//! batch normalization, optional LFV concatenation, stacked bidirectional
//! LSTMs and an affine output layer producing CTC logits.

mod conv;
mod lstm;
mod train;

use std::path::Path;

use ndarray::{concatenate, s, Array1, Array2, ArrayView2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use train::{train, EpochStats, TrainReport, TrainingExample};

use crate::checkpoint;
use crate::ctc::{ctc_loss, ctc_loss_and_grad};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::params::{Handle, ParamStore};
use conv::{col2im, im2col, ConvGeometry};
use lstm::{LstmCache, LstmHandles};

const BN_EPS: f64 = 1e-5;
const BN_MOMENTUM: f64 = 0.1;

/// One convolution: kernel and stride as (time, frequency).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvSpec {
    pub kernel: (usize, usize),
    pub stride: (usize, usize),
    pub channels: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub conv_specs: Vec<ConvSpec>,
    pub recurrent_layers: usize,
    /// Units per direction.
    pub recurrent_width: usize,
    /// 0 disables LFV input.
    pub lfv_dim: usize,
    pub output_dim: usize,
    pub input_dim: usize,
}

impl ModelConfig {
    /// 11×11 kernels with strides 2×2 and 1×2, 8 channels, two
    /// bidirectional layers of 32 units.
    pub fn desk(input_dim: usize, output_dim: usize, lfv_dim: usize) -> Self {
        Self {
            conv_specs: vec![
                ConvSpec {
                    kernel: (11, 11),
                    stride: (2, 2),
                    channels: 8,
                },
                ConvSpec {
                    kernel: (11, 11),
                    stride: (1, 2),
                    channels: 8,
                },
            ],
            recurrent_layers: 2,
            recurrent_width: 32,
            lfv_dim,
            output_dim,
            input_dim,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.conv_specs.len() != 2 {
            return Err(Error::InvalidConfig(format!(
                "exactly 2 convolution layers are required, got {}",
                self.conv_specs.len()
            )));
        }
        for (i, c) in self.conv_specs.iter().enumerate() {
            if c.kernel.0 == 0 || c.kernel.1 == 0 || c.stride.0 == 0 || c.stride.1 == 0 || c.channels == 0 {
                return Err(Error::InvalidConfig(format!("conv{} has a zero kernel, stride or channel count", i + 1)));
            }
        }
        if self.output_dim < 2 {
            return Err(Error::InvalidConfig("output_dim must be ≥ 2 (blank plus one unit)".into()));
        }
        if self.recurrent_layers == 0 || self.recurrent_width == 0 || self.input_dim == 0 {
            return Err(Error::InvalidConfig("recurrent stack and input must be non-empty".into()));
        }
        Ok(())
    }

    fn geometry(&self, layer: usize, frames: usize, freq: usize, channels_in: usize) -> ConvGeometry {
        let c = &self.conv_specs[layer];
        ConvGeometry::new(frames, freq, channels_in, c)
    }

    /// Frames after the convolutional stack.
    pub fn output_frames(&self, frames: usize) -> usize {
        let a = frames.div_ceil(self.conv_specs[0].stride.0);
        a.div_ceil(self.conv_specs[1].stride.0)
    }

    fn conv_freq(&self) -> (usize, usize) {
        let f1 = self.input_dim.div_ceil(self.conv_specs[0].stride.1);
        (f1, f1.div_ceil(self.conv_specs[1].stride.1))
    }

    /// Per-frame width of the flattened conv output, before LFVs.
    pub fn conv_output_dim(&self) -> usize {
        self.conv_freq().1 * self.conv_specs[1].channels
    }

    /// Input frame sitting at the centre of conv-output frame `t`.
    pub fn center_frame(&self, t: usize, frames: usize) -> usize {
        (t * self.conv_specs[0].stride.0 * self.conv_specs[1].stride.0).min(frames - 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Batch statistics in batch norm; a backward cache is kept.
    Train,
    /// Running statistics; no cache.
    Infer,
}

/// One utterance: `T × input_dim` features and optional `T × lfv_dim` LFVs.
#[derive(Debug, Clone, Copy)]
pub struct Utterance<'a> {
    pub feat: ArrayView2<'a, f64>,
    pub lfv: Option<ArrayView2<'a, f64>>,
}

#[derive(Debug, Clone, PartialEq)]
struct Handles {
    conv_w: [Handle; 2],
    gamma: [Handle; 2],
    beta: [Handle; 2],
    running_mean: [Handle; 2],
    running_var: [Handle; 2],
    lstm: Vec<[LstmHandles; 2]>,
    out_w: Handle,
    out_b: Handle,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AcousticModel {
    cfg: ModelConfig,
    params: ParamStore,
    h: Handles,
}

#[derive(Debug)]
struct ConvLayerCache {
    geom: Vec<ConvGeometry>,
    cols: Vec<Array2<f64>>,
    xhat: Vec<Array2<f64>>,
    act: Vec<Array2<f64>>,
    inv_std: Array1<f64>,
    mean: Array1<f64>,
    var: Array1<f64>,
    rows: usize,
}

#[derive(Debug)]
struct Cache {
    conv: [ConvLayerCache; 2],
    rnn_in: Vec<Array2<f64>>,
    lstm: Vec<Vec<[LstmCache; 2]>>,
    top: Vec<Array2<f64>>,
}

/// Logits of a batch, plus the state needed for backpropagation when run
/// in training mode.
#[derive(Debug)]
pub struct Forward {
    pub logits: Vec<Array2<f64>>,
    cache: Option<Cache>,
}

impl Forward {
    /// Flattened activations of the last convolution for utterance `u`.
    pub fn conv_output(&self, u: usize) -> Option<Array2<f64>> {
        self.cache.as_ref().map(|c| c.rnn_in[u].slice(s![.., ..c.conv_dim()]).to_owned())
    }

    /// Batch mean and variance of each batch-norm layer.
    pub fn batch_stats(&self) -> Option<[(Array1<f64>, Array1<f64>); 2]> {
        self.cache.as_ref().map(|c| {
            [
                (c.conv[0].mean.clone(), c.conv[0].var.clone()),
                (c.conv[1].mean.clone(), c.conv[1].var.clone()),
            ]
        })
    }
}

impl Cache {
    fn conv_dim(&self) -> usize {
        let g = &self.conv[1].geom[0];
        g.out_f * g.c_out
    }
}

fn tanh_grad(act: &Array2<f64>) -> Array2<f64> {
    act.mapv(|a| 1.0 - a * a)
}

impl AcousticModel {
    pub fn new(cfg: ModelConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = ParamStore::new();
        let mut c_in = 1;
        let mut conv_w = [0; 2];
        let mut gamma = [0; 2];
        let mut beta = [0; 2];
        let mut running_mean = [0; 2];
        let mut running_var = [0; 2];
        for (i, spec) in cfg.conv_specs.iter().enumerate() {
            let k = spec.kernel.0 * spec.kernel.1;
            let n = i + 1;
            conv_w[i] = p.add_glorot(format!("conv{n}.w"), &[k * c_in, spec.channels], k * c_in, k * spec.channels, &mut rng);
            gamma[i] = p.add_const(format!("conv{n}.bn.gamma"), &[spec.channels], 1.0, true);
            beta[i] = p.add_const(format!("conv{n}.bn.beta"), &[spec.channels], 0.0, true);
            running_mean[i] = p.add_const(format!("conv{n}.bn.running_mean"), &[spec.channels], 0.0, false);
            running_var[i] = p.add_const(format!("conv{n}.bn.running_var"), &[spec.channels], 1.0, false);
            c_in = spec.channels;
        }
        let mut d_in = cfg.conv_output_dim() + cfg.lfv_dim;
        let hidden = cfg.recurrent_width;
        let mut lstm = Vec::new();
        for l in 0..cfg.recurrent_layers {
            let fwd = LstmHandles::new(&mut p, &format!("rnn{}.fwd", l + 1), d_in, hidden, &mut rng);
            let bwd = LstmHandles::new(&mut p, &format!("rnn{}.bwd", l + 1), d_in, hidden, &mut rng);
            lstm.push([fwd, bwd]);
            d_in = 2 * hidden;
        }
        let out_w = p.add_glorot("out.w", &[d_in, cfg.output_dim], d_in, cfg.output_dim, &mut rng);
        let out_b = p.add_const("out.b", &[cfg.output_dim], 0.0, true);
        Ok(Self {
            cfg,
            params: p,
            h: Handles {
                conv_w,
                gamma,
                beta,
                running_mean,
                running_var,
                lstm,
                out_w,
                out_b,
            },
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.cfg
    }

    pub fn params(&self) -> &ParamStore {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamStore {
        &mut self.params
    }

    /// Rows of the first recurrent layer's input weights that read the LFV.
    pub fn lfv_input_rows(&self) -> std::ops::Range<usize> {
        let start = self.cfg.conv_output_dim();
        start..start + self.cfg.lfv_dim
    }

    /// Input weight handles of the first recurrent layer (both directions).
    pub fn first_recurrent_input_weights(&self) -> [Handle; 2] {
        [self.h.lstm[0][0].wx, self.h.lstm[0][1].wx]
    }

    fn check(&self, u: &Utterance<'_>, idx: usize) -> Result<()> {
        if u.feat.nrows() == 0 {
            return Err(Error::InvalidConfig(format!("utterance {idx} has no frames")));
        }
        if u.feat.ncols() != self.cfg.input_dim {
            return Err(Error::DimMismatch {
                layer: "conv1 input".into(),
                expected: self.cfg.input_dim,
                found: u.feat.ncols(),
            });
        }
        match (u.lfv, self.cfg.lfv_dim) {
            (None, 0) => Ok(()),
            (None, d) => Err(Error::DimMismatch {
                layer: "lfv input".into(),
                expected: d,
                found: 0,
            }),
            (Some(l), d) if l.ncols() != d => Err(Error::DimMismatch {
                layer: "lfv input".into(),
                expected: d,
                found: l.ncols(),
            }),
            (Some(l), _) if l.nrows() != u.feat.nrows() => Err(Error::DimMismatch {
                layer: "lfv frames".into(),
                expected: u.feat.nrows(),
                found: l.nrows(),
            }),
            _ => Ok(()),
        }
    }

    fn conv_layer(&self, layer: usize, inputs: &[(Array2<f64>, usize, usize)], mode: Mode) -> ConvLayerCache {
        let c_in = inputs[0].0.ncols();
        let w = self.params.view2(self.h.conv_w[layer]);
        let mut geom = Vec::new();
        let mut cols = Vec::new();
        let mut z = Vec::new();
        for (x, frames, freq) in inputs {
            let g = self.cfg.geometry(layer, *frames, *freq, c_in);
            let c = im2col(x.view(), &g);
            z.push(c.dot(&w));
            cols.push(c);
            geom.push(g);
        }
        let channels = w.ncols();
        let rows: usize = z.iter().map(|m| m.nrows()).sum();
        let (mean, var) = match mode {
            Mode::Train => {
                let mut mean = Array1::zeros(channels);
                for m in &z {
                    mean += &m.sum_axis(Axis(0));
                }
                mean /= rows as f64;
                let mut var = Array1::zeros(channels);
                for m in &z {
                    var += &(m - &mean).mapv(|d| d * d).sum_axis(Axis(0));
                }
                var /= rows as f64;
                (mean, var)
            }
            Mode::Infer => (
                self.params.view1(self.h.running_mean[layer]).to_owned(),
                self.params.view1(self.h.running_var[layer]).to_owned(),
            ),
        };
        let inv_std = var.mapv(|v| 1.0 / (v + BN_EPS).sqrt());
        let gamma = self.params.view1(self.h.gamma[layer]);
        let beta = self.params.view1(self.h.beta[layer]);
        let mut xhat = Vec::with_capacity(z.len());
        let mut act = Vec::with_capacity(z.len());
        for m in z {
            let xh = (m - &mean) * &inv_std;
            act.push((&xh * &gamma + beta).mapv(f64::tanh));
            xhat.push(xh);
        }
        ConvLayerCache {
            geom,
            cols,
            xhat,
            act,
            inv_std,
            mean,
            var,
            rows,
        }
    }

    /// Run a batch. In [`Mode::Train`] batch norm uses the batch's own
    /// statistics and the result can be passed to [`AcousticModel::backward`].
    pub fn forward_batch(&self, batch: &[Utterance<'_>], mode: Mode) -> Result<Forward> {
        if batch.is_empty() {
            return Ok(Forward {
                logits: Vec::new(),
                cache: None,
            });
        }
        for (i, u) in batch.iter().enumerate() {
            self.check(u, i)?;
        }
        let inputs: Vec<_> = batch
            .iter()
            .map(|u| {
                let (t, f) = u.feat.dim();
                (u.feat.to_owned().into_shape_with_order((t * f, 1)).expect("contiguous"), t, f)
            })
            .collect();
        let c1 = self.conv_layer(0, &inputs, mode);
        let inputs2: Vec<_> = c1
            .act
            .iter()
            .zip(&c1.geom)
            .map(|(a, g)| (a.clone(), g.out_t, g.out_f))
            .collect();
        let c2 = self.conv_layer(1, &inputs2, mode);

        let mut rnn_in = Vec::with_capacity(batch.len());
        for (u, (a, g)) in batch.iter().zip(c2.act.iter().zip(&c2.geom)) {
            let flat = a
                .to_owned()
                .into_shape_with_order((g.out_t, g.out_f * g.c_out))
                .expect("contiguous");
            let x = match u.lfv {
                Some(lfv) => {
                    let centers: Vec<usize> = (0..g.out_t)
                        .map(|t| self.cfg.center_frame(t, u.feat.nrows()))
                        .collect();
                    let picked = lfv.select(Axis(0), &centers);
                    concatenate(Axis(1), &[flat.view(), picked.view()]).expect("same rows")
                }
                None => flat,
            };
            rnn_in.push(x);
        }

        let mut lstm_caches = Vec::with_capacity(batch.len());
        let mut tops = Vec::with_capacity(batch.len());
        let mut logits = Vec::with_capacity(batch.len());
        let ow = self.params.view2(self.h.out_w);
        let ob = self.params.view1(self.h.out_b);
        for x in &rnn_in {
            let mut layer_in = x.clone();
            let mut per_layer = Vec::with_capacity(self.h.lstm.len());
            for dirs in &self.h.lstm {
                let f = dirs[0].forward(&self.params, layer_in.view(), false);
                let b = dirs[1].forward(&self.params, layer_in.view(), true);
                layer_in = concatenate(Axis(1), &[f.h.view(), b.h.view()]).expect("same rows");
                per_layer.push([f, b]);
            }
            logits.push(layer_in.dot(&ow) + ob);
            tops.push(layer_in);
            lstm_caches.push(per_layer);
        }
        let cache = (mode == Mode::Train).then(|| Cache {
            conv: [c1, c2],
            rnn_in,
            lstm: lstm_caches,
            top: tops,
        });
        Ok(Forward { logits, cache })
    }

    /// Inference-mode logits, `T' × output_dim`.
    pub fn forward(&self, feat: &FeatureMatrix, lfv: Option<&FeatureMatrix>) -> Result<Array2<f64>> {
        let f = feat.to_f64();
        let l = lfv.map(FeatureMatrix::to_f64);
        let utt = Utterance {
            feat: f.view(),
            lfv: l.as_ref().map(|a| a.view()),
        };
        Ok(self.forward_batch(&[utt], Mode::Infer)?.logits.remove(0))
    }

    /// Gradients of `Σ_u ⟨dlogits_u, logits_u⟩` with respect to every
    /// trainable parameter.
    pub fn backward(&self, fwd: &Forward, dlogits: &[Array2<f64>]) -> Result<ParamStore> {
        let cache = fwd.cache.as_ref().ok_or(Error::MissingForwardCache)?;
        if dlogits.len() != fwd.logits.len() {
            return Err(Error::LengthMismatch {
                refs: fwd.logits.len(),
                hyps: dlogits.len(),
            });
        }
        for (d, l) in dlogits.iter().zip(&fwd.logits) {
            if d.dim() != l.dim() {
                return Err(Error::ShapeMismatch {
                    name: "dlogits".into(),
                    expected: vec![l.nrows(), l.ncols()],
                    found: vec![d.nrows(), d.ncols()],
                });
            }
        }
        let mut g = self.params.zeros_like();
        let ow = self.params.view2(self.h.out_w);
        let conv_dim = cache.conv_dim();
        let mut d_act = Vec::with_capacity(dlogits.len());
        for (u, d) in dlogits.iter().enumerate() {
            let mut gw = g.view2_mut(self.h.out_w);
            gw += &cache.top[u].t().dot(d);
            let mut gb = g.view1_mut(self.h.out_b);
            gb += &d.sum_axis(Axis(0));
            let mut dx = d.dot(&ow.t());
            let hidden = self.cfg.recurrent_width;
            for (dirs, caches) in self.h.lstm.iter().zip(&cache.lstm[u]).rev() {
                let df = dirs[0].backward(&self.params, &caches[0], dx.slice(s![.., ..hidden]), &mut g);
                let db = dirs[1].backward(&self.params, &caches[1], dx.slice(s![.., hidden..]), &mut g);
                dx = df + db;
            }
            let geo = &cache.conv[1].geom[u];
            let flat = dx.slice(s![.., ..conv_dim]).to_owned();
            d_act.push(flat.into_shape_with_order((geo.out_t * geo.out_f, geo.c_out)).expect("contiguous"));
        }
        for layer in [1, 0] {
            let d_in = self.conv_backward(layer, &cache.conv[layer], d_act, &mut g, layer > 0);
            d_act = d_in;
        }
        Ok(g)
    }

    /// Back through tanh, batch norm and the convolution of one layer.
    fn conv_backward(
        &self,
        layer: usize,
        c: &ConvLayerCache,
        d_act: Vec<Array2<f64>>,
        g: &mut ParamStore,
        need_input: bool,
    ) -> Vec<Array2<f64>> {
        let gamma = self.params.view1(self.h.gamma[layer]).to_owned();
        let channels = gamma.len();
        let mut dy = Vec::with_capacity(d_act.len());
        let mut dgamma = Array1::<f64>::zeros(channels);
        let mut dbeta = Array1::<f64>::zeros(channels);
        for (d, (act, xh)) in d_act.into_iter().zip(c.act.iter().zip(&c.xhat)) {
            let d = d * tanh_grad(act);
            dgamma += &(&d * xh).sum_axis(Axis(0));
            dbeta += &d.sum_axis(Axis(0));
            dy.push(d);
        }
        let mut gg = g.view1_mut(self.h.gamma[layer]);
        gg += &dgamma;
        let mut gb = g.view1_mut(self.h.beta[layer]);
        gb += &dbeta;

        // dx̂ = dy·γ; Σdx̂ = γ·Σdy and Σdx̂·x̂ = γ·Σdy·x̂
        let n = c.rows as f64;
        let sum_dxhat = &dbeta * &gamma;
        let sum_dxhat_xhat = &dgamma * &gamma;
        let w = self.params.view2(self.h.conv_w[layer]);
        let mut out = Vec::new();
        let mut dw = Array2::<f64>::zeros(w.raw_dim());
        for ((d, xh), (cols, geo)) in dy.iter().zip(&c.xhat).zip(c.cols.iter().zip(&c.geom)) {
            let dxhat = d * &gamma;
            let dz = (dxhat * n - &sum_dxhat - xh * &sum_dxhat_xhat) * &(&c.inv_std / n);
            dw += &cols.t().dot(&dz);
            if need_input {
                out.push(col2im(dz.dot(&w.t()).view(), geo));
            }
        }
        let mut gw = g.view2_mut(self.h.conv_w[layer]);
        gw += &dw;
        out
    }

    /// Fold the batch statistics of a training forward pass into the
    /// running estimates used at inference.
    pub fn update_running_stats(&mut self, fwd: &Forward) {
        let Some(cache) = fwd.cache.as_ref() else { return };
        for layer in 0..2 {
            let c = &cache.conv[layer];
            let unbiased = if c.rows > 1 { c.rows as f64 / (c.rows - 1) as f64 } else { 1.0 };
            let mut rm = self.params.view1_mut(self.h.running_mean[layer]);
            rm.zip_mut_with(&c.mean, |r, &m| *r = (1.0 - BN_MOMENTUM) * *r + BN_MOMENTUM * m);
            let mut rv = self.params.view1_mut(self.h.running_var[layer]);
            rv.zip_mut_with(&c.var, |r, &v| *r = (1.0 - BN_MOMENTUM) * *r + BN_MOMENTUM * v * unbiased);
        }
    }

    /// Summed CTC loss of a training-mode pass and its parameter gradient.
    pub fn ctc_objective(&self, batch: &[Utterance<'_>], targets: &[Vec<u32>]) -> Result<(f64, ParamStore)> {
        let fwd = self.forward_batch(batch, Mode::Train)?;
        let mut loss = 0.0;
        let mut dlogits = Vec::with_capacity(batch.len());
        for (logits, t) in fwd.logits.iter().zip(targets) {
            let (l, d) = ctc_loss_and_grad(logits.view(), t)?;
            loss += l;
            dlogits.push(d);
        }
        Ok((loss, self.backward(&fwd, &dlogits)?))
    }

    /// Largest relative difference between the analytic gradient and central
    /// differences with step `h`, over every trainable parameter.
    pub fn gradient_check(&self, batch: &[Utterance<'_>], targets: &[Vec<u32>], h: f64) -> Result<f64> {
        let (_, grads) = self.ctc_objective(batch, targets)?;
        let mut probe = self.clone();
        let mut worst: f64 = 0.0;
        for (ti, t) in self.params.tensors().iter().enumerate() {
            if !t.trainable {
                continue;
            }
            for j in 0..t.data.len() {
                let orig = t.data[j];
                probe.params.data_mut(ti)[j] = orig + h;
                let up = probe.ctc_objective_value(batch, targets)?;
                probe.params.data_mut(ti)[j] = orig - h;
                let down = probe.ctc_objective_value(batch, targets)?;
                probe.params.data_mut(ti)[j] = orig;
                let fd = (up - down) / (2.0 * h);
                let an = grads.data(ti)[j];
                let rel = (fd - an).abs() / fd.abs().max(an.abs()).max(1e-6);
                worst = worst.max(rel);
            }
        }
        Ok(worst)
    }

    fn ctc_objective_value(&self, batch: &[Utterance<'_>], targets: &[Vec<u32>]) -> Result<f64> {
        let fwd = self.forward_batch(batch, Mode::Train)?;
        let mut loss = 0.0;
        for (logits, t) in fwd.logits.iter().zip(targets) {
            loss += ctc_loss(logits.view(), t)?.0;
        }
        Ok(loss)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let header = serde_json::to_string(&CheckpointHeader {
            net: "acoustic".into(),
            config: self.cfg.clone(),
        })?;
        checkpoint::write(path.as_ref(), &header, &self.params)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let (header, params) = checkpoint::read(path)?;
        let h: CheckpointHeader = serde_json::from_str(&header)?;
        if h.net != "acoustic" {
            return Err(Error::format(path, format!("expected an acoustic model, found {}", h.net)));
        }
        let mut model = Self::new(h.config, 0)?;
        checkpoint::restore_into(&mut model.params, params)?;
        Ok(model)
    }

    /// Load a checkpoint that must match `expected`; tensors are checked
    /// against the shapes `expected` implies.
    pub fn load_for(path: impl AsRef<Path>, expected: &ModelConfig) -> Result<Self> {
        let path = path.as_ref();
        let (_, params) = checkpoint::read(path)?;
        let mut model = Self::new(expected.clone(), 0)?;
        checkpoint::restore_into(&mut model.params, params)?;
        Ok(model)
    }
}

#[derive(Serialize, Deserialize)]
struct CheckpointHeader {
    net: String,
    config: ModelConfig,
}

#[cfg(test)]
mod tests;
