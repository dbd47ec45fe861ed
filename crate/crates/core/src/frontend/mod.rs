//! Audio front end: WAV ingestion, resampling to 16 kHz mono and log-mel
//! feature extraction.

mod mel;
mod resample;
mod wav;

pub use mel::{log_mel, mel_center_frequencies, MelConfig, MelFilterbank};
pub use resample::{resample, resample_to_mono_16k, TARGET_RATE};
pub use wav::read_wav;

/// Audio samples, channel-interleaved when `channels > 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    pub samples: Vec<f32>,
    pub sample_rate: u32,
    pub channels: u16,
}

impl AudioClip {
    pub fn mono(samples: Vec<f32>, sample_rate: u32) -> Self {
        AudioClip {
            samples,
            sample_rate,
            channels: 1,
        }
    }

    pub fn frames(&self) -> usize {
        self.samples.len() / self.channels.max(1) as usize
    }

    pub fn duration_seconds(&self) -> f64 {
        self.frames() as f64 / self.sample_rate as f64
    }

    /// Averages interleaved channels into one.
    pub fn to_mono(&self) -> AudioClip {
        let ch = self.channels.max(1) as usize;
        if ch == 1 {
            return self.clone();
        }
        let samples = self
            .samples
            .chunks_exact(ch)
            .map(|frame| (frame.iter().map(|&s| s as f64).sum::<f64>() / ch as f64) as f32)
            .collect();
        AudioClip::mono(samples, self.sample_rate)
    }
}
