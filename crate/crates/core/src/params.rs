//! Named, flat parameter tensors shared by every trainable network.
//!
//! Layers hold integer handles into a [`ParamStore`]; a gradient store is a
//! zero-filled clone of the same layout, so optimizers, checkpoints and
//! finite-difference checks can walk parameters without knowing the model.

use ndarray::{ArrayView1, ArrayView2, ArrayViewMut1, ArrayViewMut2};
use rand::RngExt;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct NamedTensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
    /// Running statistics and similar buffers are stored but not trained.
    pub trainable: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamStore {
    tensors: Vec<NamedTensor>,
    /// Number of optimizer updates applied.
    pub step: u64,
}

pub type Handle = usize;

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: impl Into<String>, shape: &[usize], data: Vec<f64>, trainable: bool) -> Handle {
        assert_eq!(data.len(), shape.iter().product::<usize>(), "tensor data/shape mismatch");
        self.tensors.push(NamedTensor {
            name: name.into(),
            shape: shape.to_vec(),
            data,
            trainable,
        });
        self.tensors.len() - 1
    }

    /// Uniform Glorot-style initialization, `±sqrt(6 / (fan_in + fan_out))`.
    pub fn add_glorot(
        &mut self,
        name: impl Into<String>,
        shape: &[usize],
        fan_in: usize,
        fan_out: usize,
        rng: &mut ChaCha8Rng,
    ) -> Handle {
        let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let n = shape.iter().product();
        let data = (0..n).map(|_| rng.random_range(-limit..limit)).collect();
        self.add(name, shape, data, true)
    }

    pub fn add_const(&mut self, name: impl Into<String>, shape: &[usize], value: f64, trainable: bool) -> Handle {
        let n = shape.iter().product();
        self.add(name, shape, vec![value; n], trainable)
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            tensors: self
                .tensors
                .iter()
                .map(|t| NamedTensor {
                    data: vec![0.0; t.data.len()],
                    ..t.clone()
                })
                .collect(),
            step: 0,
        }
    }

    pub fn tensors(&self) -> &[NamedTensor] {
        &self.tensors
    }

    pub fn tensors_mut(&mut self) -> &mut [NamedTensor] {
        &mut self.tensors
    }

    pub fn get(&self, h: Handle) -> &NamedTensor {
        &self.tensors[h]
    }

    pub fn data(&self, h: Handle) -> &[f64] {
        &self.tensors[h].data
    }

    pub fn data_mut(&mut self, h: Handle) -> &mut [f64] {
        &mut self.tensors[h].data
    }

    pub fn view1(&self, h: Handle) -> ArrayView1<'_, f64> {
        ArrayView1::from(&self.tensors[h].data[..])
    }

    pub fn view1_mut(&mut self, h: Handle) -> ArrayViewMut1<'_, f64> {
        ArrayViewMut1::from(&mut self.tensors[h].data[..])
    }

    /// 2-D view; tensors of higher rank are viewed as `(shape[0], rest)`.
    pub fn view2(&self, h: Handle) -> ArrayView2<'_, f64> {
        let t = &self.tensors[h];
        let rows = t.shape[0];
        ArrayView2::from_shape((rows, t.data.len() / rows), &t.data).expect("tensor layout")
    }

    pub fn view2_mut(&mut self, h: Handle) -> ArrayViewMut2<'_, f64> {
        let t = &mut self.tensors[h];
        let rows = t.shape[0];
        let cols = t.data.len() / rows;
        ArrayViewMut2::from_shape((rows, cols), &mut t.data).expect("tensor layout")
    }

    pub fn num_trainable(&self) -> usize {
        self.tensors
            .iter()
            .filter(|t| t.trainable)
            .map(|t| t.data.len())
            .sum()
    }

    pub fn all_finite(&self) -> bool {
        self.tensors.iter().all(|t| t.data.iter().all(|x| x.is_finite()))
    }

    /// Euclidean norm over trainable tensors.
    pub fn norm(&self) -> f64 {
        self.tensors
            .iter()
            .filter(|t| t.trainable)
            .flat_map(|t| t.data.iter())
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt()
    }

    pub fn scale(&mut self, factor: f64) {
        for t in &mut self.tensors {
            t.data.iter_mut().for_each(|x| *x *= factor);
        }
    }

    /// `self += other`, tensor by tensor.
    pub fn accumulate(&mut self, other: &ParamStore) {
        for (a, b) in self.tensors.iter_mut().zip(&other.tensors) {
            a.data.iter_mut().zip(&b.data).for_each(|(x, y)| *x += y);
        }
    }

    pub fn same_layout(&self, other: &ParamStore) -> bool {
        self.tensors.len() == other.tensors.len()
            && self
                .tensors
                .iter()
                .zip(&other.tensors)
                .all(|(a, b)| a.name == b.name && a.shape == b.shape)
    }
}
