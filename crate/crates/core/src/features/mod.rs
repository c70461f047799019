//! Frame-level features: log-Mel extraction, context stacking, and the two
//! bottleneck extractor networks (multilingual BNFs and language feature
//! vectors).

mod extractor;
mod mel;

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use ndarray::{s, Array2, ArrayView2};
use serde::{Deserialize, Serialize};

pub use extractor::{
    frame_accuracy, lfv_separability, train_bottleneck_net, train_lfv_net, BottleneckNet,
    BottleneckNetConfig, FeedForwardNet, LabeledFrames, LanguageVector, LfvNet, Separability,
    TrainedNet,
};
pub use mel::{hz_to_mel, log_mel, log_mel_energies, log_mel_with, mel_filterbank, mel_to_hz, read_wav, LogMelConfig};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    Logmel,
    Bnf,
    Lfv,
    Stacked,
}

impl FeatureKind {
    fn tag(self) -> u32 {
        match self {
            FeatureKind::Logmel => 0,
            FeatureKind::Bnf => 1,
            FeatureKind::Lfv => 2,
            FeatureKind::Stacked => 3,
        }
    }

    fn from_tag(tag: u32) -> Option<Self> {
        Some(match tag {
            0 => FeatureKind::Logmel,
            1 => FeatureKind::Bnf,
            2 => FeatureKind::Lfv,
            3 => FeatureKind::Stacked,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            FeatureKind::Logmel => "logmel",
            FeatureKind::Bnf => "bnf",
            FeatureKind::Lfv => "lfv",
            FeatureKind::Stacked => "stacked",
        }
    }
}

/// `T × D` frames with frame-shift metadata. Values are always finite and
/// both dimensions are at least one.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    data: Array2<f32>,
    frame_shift_ms: f32,
    kind: FeatureKind,
}

pub const FEATURE_MAGIC: &[u8; 4] = b"FEAT";
pub const FEATURE_VERSION: u32 = 1;

impl FeatureMatrix {
    pub fn new(data: Array2<f32>, frame_shift_ms: f32, kind: FeatureKind) -> Result<Self> {
        if data.nrows() == 0 || data.ncols() == 0 {
            return Err(Error::InvalidConfig(format!(
                "feature matrix must be at least 1×1, got {:?}",
                data.dim()
            )));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidConfig("feature matrix contains non-finite values".into()));
        }
        Ok(Self {
            data,
            frame_shift_ms,
            kind,
        })
    }

    /// Build from `f64` values (rounded to `f32` storage).
    pub fn from_f64(data: ArrayView2<'_, f64>, frame_shift_ms: f32, kind: FeatureKind) -> Result<Self> {
        Self::new(data.mapv(|x| x as f32), frame_shift_ms, kind)
    }

    pub fn frames(&self) -> usize {
        self.data.nrows()
    }

    pub fn dim(&self) -> usize {
        self.data.ncols()
    }

    pub fn kind(&self) -> FeatureKind {
        self.kind
    }

    pub fn frame_shift_ms(&self) -> f32 {
        self.frame_shift_ms
    }

    pub fn data(&self) -> ArrayView2<'_, f32> {
        self.data.view()
    }

    pub fn to_f64(&self) -> Array2<f64> {
        self.data.mapv(f64::from)
    }

    pub fn with_kind(mut self, kind: FeatureKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(24 + 4 * self.data.len());
        out.extend_from_slice(FEATURE_MAGIC);
        out.extend_from_slice(&FEATURE_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.frames() as u32).to_le_bytes());
        out.extend_from_slice(&(self.dim() as u32).to_le_bytes());
        out.extend_from_slice(&self.kind.tag().to_le_bytes());
        out.extend_from_slice(&self.frame_shift_ms.to_le_bytes());
        for x in self.data.iter() {
            out.extend_from_slice(&x.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8], origin: &Path) -> Result<Self> {
        let bad = |reason: &str| Error::format(origin, reason);
        if bytes.len() < 24 {
            return Err(bad("truncated header"));
        }
        if &bytes[..4] != FEATURE_MAGIC {
            return Err(bad("bad magic"));
        }
        let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().expect("4 bytes"));
        if word(4) != FEATURE_VERSION {
            return Err(bad("unsupported version"));
        }
        let (frames, dim) = (word(8) as usize, word(12) as usize);
        let kind = FeatureKind::from_tag(word(16)).ok_or_else(|| bad("unknown kind tag"))?;
        let frame_shift_ms = f32::from_le_bytes(bytes[20..24].try_into().expect("4 bytes"));
        let body = &bytes[24..];
        if body.len() != 4 * frames * dim {
            return Err(bad("body length does not match header"));
        }
        let values: Vec<f32> = body
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
            .collect();
        let data = Array2::from_shape_vec((frames, dim), values).map_err(|_| bad("bad shape"))?;
        Self::new(data, frame_shift_ms, kind)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = fs::File::create(path)?;
        f.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut bytes = Vec::new();
        fs::File::open(path)?.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes, path)
    }
}

/// Splice neighbouring frames onto each frame.
///
/// Offsets run from `-left` to `+right` in steps of `stride`; frames beyond
/// the utterance edges repeat the first or last frame. Output dimension is
/// `D × (left/stride + right/stride + 1)` and the frame count is unchanged.
pub fn stack_context(feat: &FeatureMatrix, left: usize, right: usize, stride: usize) -> Result<FeatureMatrix> {
    if stride == 0 {
        return Err(Error::InvalidConfig("context stride must be ≥ 1".into()));
    }
    if !left.is_multiple_of(stride) || !right.is_multiple_of(stride) {
        return Err(Error::InvalidConfig(format!(
            "context ±({left},{right}) must be a multiple of stride {stride}"
        )));
    }
    if left == 0 && right == 0 {
        return Ok(feat.clone());
    }
    let (frames, dim) = (feat.frames(), feat.dim());
    let offsets: Vec<isize> = (-(left as isize)..=right as isize)
        .step_by(stride)
        .collect();
    let mut out = Array2::zeros((frames, dim * offsets.len()));
    for t in 0..frames {
        for (j, off) in offsets.iter().enumerate() {
            let src = (t as isize + off).clamp(0, frames as isize - 1) as usize;
            out.slice_mut(s![t, j * dim..(j + 1) * dim])
                .assign(&feat.data.row(src));
        }
    }
    FeatureMatrix::new(out, feat.frame_shift_ms, FeatureKind::Stacked)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(frames: usize, dim: usize) -> FeatureMatrix {
        let data = Array2::from_shape_fn((frames, dim), |(t, d)| (t * 10 + d) as f32);
        FeatureMatrix::new(data, 10.0, FeatureKind::Logmel).unwrap()
    }

    #[test]
    fn rejects_empty_and_non_finite() {
        assert!(FeatureMatrix::new(Array2::zeros((0, 3)), 10.0, FeatureKind::Logmel).is_err());
        let mut d = Array2::zeros((2, 2));
        d[[1, 1]] = f32::NAN;
        assert!(FeatureMatrix::new(d, 10.0, FeatureKind::Logmel).is_err());
    }

    #[test]
    fn stacking_dimensions() {
        let lfv_in = ramp(50, 42);
        assert_eq!(stack_context(&lfv_in, 33, 33, 3).unwrap().dim(), 42 * 23);
        let bnf_in = ramp(50, 40);
        let stacked = stack_context(&bnf_in, 6, 6, 1).unwrap();
        assert_eq!((stacked.frames(), stacked.dim()), (50, 40 * 13));
        assert_eq!(stack_context(&bnf_in, 0, 0, 1).unwrap(), bnf_in);
        assert!(stack_context(&bnf_in, 1, 1, 0).is_err());
        assert!(stack_context(&bnf_in, 4, 3, 3).is_err());
    }

    #[test]
    fn stacking_repeats_edge_frames() {
        let f = ramp(4, 1);
        let st = stack_context(&f, 2, 2, 1).unwrap();
        let row0: Vec<f32> = st.data().row(0).to_vec();
        assert_eq!(row0, [0.0, 0.0, 0.0, 10.0, 20.0]);
        let row3: Vec<f32> = st.data().row(3).to_vec();
        assert_eq!(row3, [10.0, 20.0, 30.0, 30.0, 30.0]);
        let strided = stack_context(&f, 2, 2, 2).unwrap();
        assert_eq!(strided.data().row(1).to_vec(), [0.0, 10.0, 30.0]);
    }

    #[test]
    fn file_round_trip_and_truncation() {
        let f = ramp(7, 3).with_kind(FeatureKind::Bnf);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("u.feat");
        f.save(&path).unwrap();
        assert_eq!(FeatureMatrix::load(&path).unwrap(), f);
        let bytes = fs::read(&path).unwrap();
        assert_eq!(&bytes[..4], b"FEAT");
        assert_eq!(bytes.len(), 24 + 7 * 3 * 4);
        fs::write(&path, &bytes[..bytes.len() - 2]).unwrap();
        assert!(matches!(FeatureMatrix::load(&path), Err(Error::Format { .. })));
    }
}
