use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand_chacha::ChaCha8Rng;

use crate::math::sigmoid;
use crate::params::{Handle, ParamStore};

const FORGET_BIAS: f64 = 1.0;

/// One LSTM direction. Gate blocks are ordered input, forget, cell, output.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct LstmHandles {
    pub wx: Handle,
    pub wh: Handle,
    pub b: Handle,
    hidden: usize,
}

#[derive(Debug)]
pub(crate) struct LstmCache {
    pub x: Array2<f64>,
    /// Gate activations per frame.
    gates: Array2<f64>,
    c: Array2<f64>,
    pub h: Array2<f64>,
    reverse: bool,
}

impl LstmHandles {
    pub fn new(p: &mut ParamStore, name: &str, d_in: usize, hidden: usize, rng: &mut ChaCha8Rng) -> Self {
        let wx = p.add_glorot(format!("{name}.wx"), &[d_in, 4 * hidden], d_in, 4 * hidden, rng);
        let wh = p.add_glorot(format!("{name}.wh"), &[hidden, 4 * hidden], hidden, 4 * hidden, rng);
        let mut bias = vec![0.0; 4 * hidden];
        bias[hidden..2 * hidden].fill(FORGET_BIAS);
        let b = p.add(format!("{name}.b"), &[4 * hidden], bias, true);
        Self { wx, wh, b, hidden }
    }

    fn order(frames: usize, reverse: bool) -> Box<dyn DoubleEndedIterator<Item = usize>> {
        if reverse {
            Box::new((0..frames).rev())
        } else {
            Box::new(0..frames)
        }
    }

    pub fn forward(&self, p: &ParamStore, x: ArrayView2<'_, f64>, reverse: bool) -> LstmCache {
        let hd = self.hidden;
        let frames = x.nrows();
        let pre = x.dot(&p.view2(self.wx)) + p.view1(self.b);
        let wh = p.view2(self.wh);
        let mut gates = Array2::zeros((frames, 4 * hd));
        let mut c = Array2::zeros((frames, hd));
        let mut h = Array2::zeros((frames, hd));
        let mut h_prev = Array1::<f64>::zeros(hd);
        let mut c_prev = Array1::<f64>::zeros(hd);
        for t in Self::order(frames, reverse) {
            let z = &pre.row(t) + &h_prev.dot(&wh);
            let mut gr = gates.row_mut(t);
            for k in 0..hd {
                let i = sigmoid(z[k]);
                let f = sigmoid(z[hd + k]);
                let g = z[2 * hd + k].tanh();
                let o = sigmoid(z[3 * hd + k]);
                let ct = f * c_prev[k] + i * g;
                gr[k] = i;
                gr[hd + k] = f;
                gr[2 * hd + k] = g;
                gr[3 * hd + k] = o;
                c_prev[k] = ct;
                h_prev[k] = o * ct.tanh();
            }
            c.row_mut(t).assign(&c_prev);
            h.row_mut(t).assign(&h_prev);
        }
        LstmCache {
            x: x.to_owned(),
            gates,
            c,
            h,
            reverse,
        }
    }

    /// Accumulate parameter gradients into `g`; returns the input gradient.
    pub fn backward(&self, p: &ParamStore, cache: &LstmCache, dh: ArrayView2<'_, f64>, g: &mut ParamStore) -> Array2<f64> {
        let hd = self.hidden;
        let frames = cache.x.nrows();
        let wh = p.view2(self.wh);
        let mut dpre = Array2::zeros((frames, 4 * hd));
        let mut h_prev_rows = Array2::zeros((frames, hd));
        let mut dh_next = Array1::<f64>::zeros(hd);
        let mut dc_next = Array1::<f64>::zeros(hd);
        let order: Vec<usize> = Self::order(frames, cache.reverse).collect();
        for (step, &t) in order.iter().enumerate().rev() {
            let prev = step.checked_sub(1).map(|s| order[s]);
            if let Some(pt) = prev {
                h_prev_rows.row_mut(t).assign(&cache.h.row(pt));
            }
            let gr = cache.gates.row(t);
            let mut dz = dpre.row_mut(t);
            for k in 0..hd {
                let (i, f, gg, o) = (gr[k], gr[hd + k], gr[2 * hd + k], gr[3 * hd + k]);
                let tc = cache.c[[t, k]].tanh();
                let c_prev = prev.map_or(0.0, |pt| cache.c[[pt, k]]);
                let dht = dh[[t, k]] + dh_next[k];
                let dc = dht * o * (1.0 - tc * tc) + dc_next[k];
                dz[k] = dc * gg * i * (1.0 - i);
                dz[hd + k] = dc * c_prev * f * (1.0 - f);
                dz[2 * hd + k] = dc * i * (1.0 - gg * gg);
                dz[3 * hd + k] = dht * tc * o * (1.0 - o);
                dc_next[k] = dc * f;
            }
            dh_next = dpre.row(t).dot(&wh.t());
        }
        let mut gwx = g.view2_mut(self.wx);
        gwx += &cache.x.t().dot(&dpre);
        let mut gwh = g.view2_mut(self.wh);
        gwh += &h_prev_rows.t().dot(&dpre);
        let mut gb = g.view1_mut(self.b);
        gb += &dpre.sum_axis(Axis(0));
        dpre.dot(&p.view2(self.wx).t())
    }
}
