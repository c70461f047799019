//! Log-Mel features from a 16 kHz wav, stored in the binary feature format.

use std::f32::consts::PI;

use ctcpoly::features::{log_mel, read_wav, FeatureMatrix};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let wav = dir.path().join("chirp.wav");
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: 16_000,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut writer = hound::WavWriter::create(&wav, spec)?;
    for n in 0..16_000 {
        let t = n as f32 / 16_000.0;
        let sample = 0.4 * (2.0 * PI * (200.0 + 1500.0 * t) * t).sin();
        writer.write_sample((sample * 32767.0) as i16)?;
    }
    writer.finalize()?;

    let (samples, rate) = read_wav(&wav)?;
    let feats = log_mel(&samples, rate, 40)?;
    println!("{} frames × {} bands, {} ms shift", feats.frames(), feats.dim(), feats.frame_shift_ms());
    let peak = |t: usize| {
        let row = feats.data().row(t).to_vec();
        (0..row.len()).max_by(|&a, &b| row[a].total_cmp(&row[b])).unwrap()
    };
    println!("loudest band at 0.1 s: {}, at 0.9 s: {}", peak(10), peak(feats.frames() - 10));

    let path = dir.path().join("chirp.feat");
    feats.save(&path)?;
    assert_eq!(FeatureMatrix::load(&path)?, feats);
    Ok(())
}
