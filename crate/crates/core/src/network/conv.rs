use ndarray::{Array2, ArrayView2};

use super::ConvSpec;

/// Shapes of one convolution applied to one utterance. Activations are laid
/// out as `(t·freq + f, channel)` matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct ConvGeometry {
    pub in_t: usize,
    pub in_f: usize,
    pub c_in: usize,
    pub out_t: usize,
    pub out_f: usize,
    pub c_out: usize,
    kt: usize,
    kf: usize,
    st: usize,
    sf: usize,
    pt: usize,
    pf: usize,
}

impl ConvGeometry {
    /// "Same"-style padding: output position `o` is centred on input `o·stride`.
    pub fn new(in_t: usize, in_f: usize, c_in: usize, spec: &ConvSpec) -> Self {
        Self {
            in_t,
            in_f,
            c_in,
            out_t: in_t.div_ceil(spec.stride.0),
            out_f: in_f.div_ceil(spec.stride.1),
            c_out: spec.channels,
            kt: spec.kernel.0,
            kf: spec.kernel.1,
            st: spec.stride.0,
            sf: spec.stride.1,
            pt: (spec.kernel.0 - 1) / 2,
            pf: (spec.kernel.1 - 1) / 2,
        }
    }

    fn patch(&self) -> usize {
        self.kt * self.kf * self.c_in
    }

    /// Input (t, f) read by output (ot, of) at kernel offset (dt, df).
    #[inline]
    fn source(&self, ot: usize, of: usize, dt: usize, df: usize) -> Option<usize> {
        let t = (ot * self.st + dt).checked_sub(self.pt)?;
        let f = (of * self.sf + df).checked_sub(self.pf)?;
        (t < self.in_t && f < self.in_f).then_some(t * self.in_f + f)
    }
}

pub(crate) fn im2col(x: ArrayView2<'_, f64>, g: &ConvGeometry) -> Array2<f64> {
    let x = x.as_standard_layout();
    let src = x.as_slice().expect("standard layout");
    let patch = g.patch();
    let mut out = vec![0.0; g.out_t * g.out_f * patch];
    for ot in 0..g.out_t {
        for of in 0..g.out_f {
            let row = &mut out[(ot * g.out_f + of) * patch..][..patch];
            for dt in 0..g.kt {
                for df in 0..g.kf {
                    if let Some(s) = g.source(ot, of, dt, df) {
                        let k = (dt * g.kf + df) * g.c_in;
                        row[k..k + g.c_in].copy_from_slice(&src[s * g.c_in..(s + 1) * g.c_in]);
                    }
                }
            }
        }
    }
    Array2::from_shape_vec((g.out_t * g.out_f, patch), out).expect("patch layout")
}

/// Adjoint of [`im2col`]: scatter-add patch gradients back onto the input.
pub(crate) fn col2im(dcols: ArrayView2<'_, f64>, g: &ConvGeometry) -> Array2<f64> {
    let dcols = dcols.as_standard_layout();
    let src = dcols.as_slice().expect("standard layout");
    let patch = g.patch();
    let mut out = vec![0.0; g.in_t * g.in_f * g.c_in];
    for ot in 0..g.out_t {
        for of in 0..g.out_f {
            let row = &src[(ot * g.out_f + of) * patch..][..patch];
            for dt in 0..g.kt {
                for df in 0..g.kf {
                    if let Some(s) = g.source(ot, of, dt, df) {
                        let k = (dt * g.kf + df) * g.c_in;
                        for c in 0..g.c_in {
                            out[s * g.c_in + c] += row[k + c];
                        }
                    }
                }
            }
        }
    }
    Array2::from_shape_vec((g.in_t * g.in_f, g.c_in), out).expect("input layout")
}
