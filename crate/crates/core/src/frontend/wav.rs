use std::path::Path;

use super::AudioClip;
use crate::error::{Error, Result};

/// Reads a PCM (16/24/32-bit) or 32-bit float WAV file, scaling integers to [-1, 1).
pub fn read_wav(path: &Path) -> Result<AudioClip> {
    let wrap = |source| Error::Wav {
        path: path.to_path_buf(),
        source,
    };
    let reader = hound::WavReader::open(path).map_err(wrap)?;
    let spec = reader.spec();
    let samples: Vec<f32> = match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .collect::<std::result::Result<_, _>>()
            .map_err(wrap)?,
        (hound::SampleFormat::Int, bits @ (16 | 24 | 32)) => {
            let scale = 1.0 / (1u64 << (bits - 1)) as f64;
            reader
                .into_samples::<i32>()
                .map(|s| s.map(|v| (v as f64 * scale) as f32))
                .collect::<std::result::Result<_, _>>()
                .map_err(wrap)?
        }
        (fmt, bits) => {
            return Err(Error::ConfigInvalid(format!(
                "{}: unsupported WAV encoding {fmt:?} {bits}-bit",
                path.display()
            )))
        }
    };
    if samples.iter().any(|s| !s.is_finite()) {
        return Err(Error::ConfigInvalid(format!(
            "{}: non-finite samples",
            path.display()
        )));
    }
    Ok(AudioClip {
        samples,
        sample_rate: spec.sample_rate,
        channels: spec.channels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_int16_and_float() {
        let dir = tempfile::tempdir().unwrap();
        let p16 = dir.path().join("a.wav");
        let spec = hound::WavSpec {
            channels: 2,
            sample_rate: 8000,
            bits_per_sample: 16,
            sample_format: hound::SampleFormat::Int,
        };
        let mut w = hound::WavWriter::create(&p16, spec).unwrap();
        for v in [0i16, 16384, -32768, 0] {
            w.write_sample(v).unwrap();
        }
        w.finalize().unwrap();
        let clip = read_wav(&p16).unwrap();
        assert_eq!(clip.channels, 2);
        assert_eq!(clip.samples, vec![0.0, 0.5, -1.0, 0.0]);
        assert_eq!(clip.to_mono().samples, vec![0.25, -0.5]);

        let pf = dir.path().join("b.wav");
        let spec = hound::WavSpec {
            channels: 1,
            sample_rate: 16000,
            bits_per_sample: 32,
            sample_format: hound::SampleFormat::Float,
        };
        let mut w = hound::WavWriter::create(&pf, spec).unwrap();
        w.write_sample(0.25f32).unwrap();
        w.finalize().unwrap();
        assert_eq!(read_wav(&pf).unwrap().samples, vec![0.25]);
    }

    #[test]
    fn rejects_unsupported_depth() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.wav");
        let spec = hound::WavSpec {
            channels: 1,
            sample_rate: 16000,
            bits_per_sample: 8,
            sample_format: hound::SampleFormat::Int,
        };
        let mut w = hound::WavWriter::create(&p, spec).unwrap();
        w.write_sample(3i8).unwrap();
        w.finalize().unwrap();
        assert!(read_wav(&p).is_err());
    }
}
