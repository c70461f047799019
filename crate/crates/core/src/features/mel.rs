use std::f64::consts::PI;

use ndarray::Array2;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::{FeatureKind, FeatureMatrix};
use crate::error::{Error, Result};

const ENERGY_FLOOR: f64 = 1e-10;
const WINDOW_MS: usize = 32;
const SHIFT_MS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogMelConfig {
    pub sample_rate: u32,
    pub n_mels: usize,
    /// Per-utterance mean/variance normalization.
    pub normalize: bool,
}

impl Default for LogMelConfig {
    fn default() -> Self {
        Self {
            sample_rate: 16000,
            n_mels: 40,
            normalize: true,
        }
    }
}

/// HTK mel scale.
pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Triangular filters equally spaced on the mel scale from 0 Hz to Nyquist,
/// `n_mels × (n_fft/2 + 1)`.
pub fn mel_filterbank(n_mels: usize, n_fft: usize, sample_rate: u32) -> Array2<f64> {
    let nyquist = sample_rate as f64 / 2.0;
    let max_mel = hz_to_mel(nyquist);
    let edges: Vec<f64> = (0..n_mels + 2)
        .map(|i| mel_to_hz(max_mel * i as f64 / (n_mels + 1) as f64))
        .collect();
    let bins = n_fft / 2 + 1;
    let bin_hz = sample_rate as f64 / n_fft as f64;
    Array2::from_shape_fn((n_mels, bins), |(m, k)| {
        let f = k as f64 * bin_hz;
        let (lo, mid, hi) = (edges[m], edges[m + 1], edges[m + 2]);
        let up = (f - lo) / (mid - lo);
        let down = (hi - f) / (hi - mid);
        up.min(down).max(0.0)
    })
}

fn frame_geometry(sample_rate: u32) -> Result<(usize, usize)> {
    match sample_rate {
        8000 | 16000 => {
            let per_ms = sample_rate as usize / 1000;
            Ok((WINDOW_MS * per_ms, SHIFT_MS * per_ms))
        }
        other => Err(Error::UnsupportedSampleRate(other)),
    }
}

/// Log Mel filterbank energies without normalization: 32 ms Hamming window,
/// 10 ms shift, energies floored before the log.
pub fn log_mel_energies(samples: &[f32], sample_rate: u32, n_mels: usize) -> Result<Array2<f64>> {
    let (win, shift) = frame_geometry(sample_rate)?;
    if samples.len() < win {
        return Err(Error::BelowOneWindow {
            samples: samples.len(),
            window: win,
        });
    }
    let frames = (samples.len() - win) / shift + 1;
    let window: Vec<f64> = (0..win)
        .map(|n| 0.54 - 0.46 * (2.0 * PI * n as f64 / (win - 1) as f64).cos())
        .collect();
    let bank = mel_filterbank(n_mels, win, sample_rate);
    let fft = FftPlanner::<f64>::new().plan_fft_forward(win);
    let mut buf = vec![Complex::new(0.0, 0.0); win];
    let mut out = Array2::zeros((frames, n_mels));
    for t in 0..frames {
        let start = t * shift;
        for (n, c) in buf.iter_mut().enumerate() {
            *c = Complex::new(f64::from(samples[start + n]) * window[n], 0.0);
        }
        fft.process(&mut buf);
        let power: Vec<f64> = buf[..win / 2 + 1].iter().map(|c| c.norm_sqr()).collect();
        for m in 0..n_mels {
            let e: f64 = bank.row(m).iter().zip(&power).map(|(w, p)| w * p).sum();
            out[[t, m]] = e.max(ENERGY_FLOOR).ln();
        }
    }
    Ok(out)
}

/// Log-Mel features with per-utterance mean/variance normalization.
pub fn log_mel(samples: &[f32], sample_rate: u32, n_mels: usize) -> Result<FeatureMatrix> {
    log_mel_with(
        samples,
        &LogMelConfig {
            sample_rate,
            n_mels,
            normalize: true,
        },
    )
}

pub fn log_mel_with(samples: &[f32], cfg: &LogMelConfig) -> Result<FeatureMatrix> {
    let mut e = log_mel_energies(samples, cfg.sample_rate, cfg.n_mels)?;
    if cfg.normalize {
        let frames = e.nrows() as f64;
        for mut col in e.columns_mut() {
            let mean = col.sum() / frames;
            let var = col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / frames;
            let std = var.sqrt().max(1e-5);
            col.mapv_inplace(|x| (x - mean) / std);
        }
    }
    FeatureMatrix::from_f64(e.view(), SHIFT_MS as f32, FeatureKind::Logmel)
}

/// Samples of a 16-bit PCM mono wav file, scaled to [-1, 1), and its rate.
pub fn read_wav(path: impl AsRef<std::path::Path>) -> Result<(Vec<f32>, u32)> {
    let path = path.as_ref();
    let mut reader = hound::WavReader::open(path)?;
    let spec = reader.spec();
    if spec.channels != 1 || spec.bits_per_sample != 16 || spec.sample_format != hound::SampleFormat::Int {
        return Err(Error::format(path, "expected 16-bit PCM mono"));
    }
    let samples = reader
        .samples::<i16>()
        .map(|s| s.map(|v| f32::from(v) / 32768.0))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    Ok((samples, spec.sample_rate))
}
