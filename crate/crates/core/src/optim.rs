use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ParamStore;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// Visit utterances shortest-first during the first epoch.
    pub sort_first_epoch: bool,
    pub seed: u64,
    /// Optional global gradient-norm clip.
    pub max_grad_norm: Option<f64>,
}

impl Default for TrainConfig {
    /// SGD with Nesterov momentum 0.9, learning rate 0.0003, batches of 20,
    /// length-sorted first epoch.
    fn default() -> Self {
        Self {
            learning_rate: 0.0003,
            momentum: 0.9,
            batch_size: 20,
            epochs: 20,
            sort_first_epoch: true,
            seed: 0,
            max_grad_norm: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig("learning_rate must be > 0".into()));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::InvalidConfig("momentum must be in [0, 1)".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch_size must be ≥ 1".into()));
        }
        Ok(())
    }
}

/// Velocity buffers for Nesterov-momentum SGD.
#[derive(Debug, Clone)]
pub struct Nesterov {
    velocity: ParamStore,
}

impl Nesterov {
    pub fn new(params: &ParamStore) -> Self {
        Self {
            velocity: params.zeros_like(),
        }
    }

    pub fn velocity(&self) -> &ParamStore {
        &self.velocity
    }

    pub fn step(&mut self, params: &mut ParamStore, grads: &ParamStore, cfg: &TrainConfig) -> Result<()> {
        sgd_nesterov_step(params, grads, &mut self.velocity, cfg)
    }
}

/// One Nesterov update over every trainable tensor:
/// `v ← μv − lr·g`, `p ← p + μv − lr·g`.
///
/// Nothing is modified unless every gradient and every updated value is
/// finite.
pub fn sgd_nesterov_step(
    params: &mut ParamStore,
    grads: &ParamStore,
    velocity: &mut ParamStore,
    cfg: &TrainConfig,
) -> Result<()> {
    debug_assert!(params.same_layout(grads) && params.same_layout(velocity));
    let (lr, mu) = (cfg.learning_rate, cfg.momentum);
    let mut staged = Vec::new();
    for ((p, g), v) in params
        .tensors()
        .iter()
        .zip(grads.tensors())
        .zip(velocity.tensors())
    {
        if !p.trainable {
            staged.push(None);
            continue;
        }
        if g.data.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFiniteGradient(g.name.clone()));
        }
        let new_v: Vec<f64> = v.data.iter().zip(&g.data).map(|(v, g)| mu * v - lr * g).collect();
        let new_p: Vec<f64> = p
            .data
            .iter()
            .zip(&new_v)
            .zip(&g.data)
            .map(|((p, v), g)| p + mu * v - lr * g)
            .collect();
        if new_p.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFiniteGradient(p.name.clone()));
        }
        staged.push(Some((new_p, new_v)));
    }
    for ((p, v), s) in params
        .tensors_mut()
        .iter_mut()
        .zip(velocity.tensors_mut())
        .zip(staged)
    {
        if let Some((new_p, new_v)) = s {
            p.data = new_p;
            v.data = new_v;
        }
    }
    params.step += 1;
    Ok(())
}
