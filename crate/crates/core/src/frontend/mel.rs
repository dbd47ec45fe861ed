//! STFT power spectrogram, Slaney mel filterbank and log compression.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::AudioClip;
use crate::error::{Error, Result};
use crate::tensor::FeatureMap;

#[derive(Debug, Clone, PartialEq)]
pub struct MelConfig {
    pub sample_rate: u32,
    pub win_length: usize,
    pub hop_length: usize,
    pub n_fft: usize,
    pub n_mels: usize,
    pub fmin: f64,
    pub fmax: f64,
    pub log_floor: f64,
    /// Clips shorter than this are right-padded with zeros. 0 disables padding.
    pub pad_to_seconds: f64,
}

impl Default for MelConfig {
    fn default() -> Self {
        MelConfig {
            sample_rate: 16_000,
            win_length: 2048,
            hop_length: 256,
            n_fft: 2048,
            n_mels: 128,
            fmin: 0.0,
            fmax: 8000.0,
            log_floor: 1e-10,
            pad_to_seconds: 10.0,
        }
    }
}

impl MelConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::ConfigInvalid(m));
        if self.sample_rate == 0 {
            return bad("sample_rate must be positive".into());
        }
        if self.n_mels == 0 {
            return bad("n_mels must be >= 1".into());
        }
        if self.hop_length == 0 || self.hop_length > self.win_length {
            return bad(format!(
                "hop_length {} must be in 1..=win_length ({})",
                self.hop_length, self.win_length
            ));
        }
        if self.win_length > self.n_fft || self.n_fft < 2 {
            return bad(format!(
                "win_length {} must not exceed n_fft {}",
                self.win_length, self.n_fft
            ));
        }
        if !(self.fmin >= 0.0 && self.fmin < self.fmax) {
            return bad(format!("need 0 <= fmin < fmax, got {}..{}", self.fmin, self.fmax));
        }
        if self.fmax > self.sample_rate as f64 / 2.0 {
            return bad(format!(
                "fmax {} exceeds Nyquist {}",
                self.fmax,
                self.sample_rate as f64 / 2.0
            ));
        }
        if !(self.log_floor > 0.0) {
            return bad("log_floor must be positive".into());
        }
        if !(self.pad_to_seconds >= 0.0 && self.pad_to_seconds.is_finite()) {
            return bad("pad_to_seconds must be >= 0".into());
        }
        Ok(())
    }

    /// Sample count after silence padding.
    pub fn padded_len(&self, len: usize) -> usize {
        let target = (self.pad_to_seconds * self.sample_rate as f64).round() as usize;
        len.max(target)
    }

    /// Frame count for a signal of `len` samples (before padding), with centered frames.
    pub fn num_frames(&self, len: usize) -> usize {
        self.padded_len(len) / self.hop_length + 1
    }
}

// Slaney mel scale: linear below 1 kHz, logarithmic above.
const F_SP: f64 = 200.0 / 3.0;
const MIN_LOG_HZ: f64 = 1000.0;
const MIN_LOG_MEL: f64 = MIN_LOG_HZ / F_SP;

fn logstep() -> f64 {
    6.4f64.ln() / 27.0
}

pub fn hz_to_mel(hz: f64) -> f64 {
    if hz < MIN_LOG_HZ {
        hz / F_SP
    } else {
        MIN_LOG_MEL + (hz / MIN_LOG_HZ).ln() / logstep()
    }
}

pub fn mel_to_hz(mel: f64) -> f64 {
    if mel < MIN_LOG_MEL {
        mel * F_SP
    } else {
        MIN_LOG_HZ * ((mel - MIN_LOG_MEL) * logstep()).exp()
    }
}

/// The `n_mels + 2` band edges, evenly spaced on the mel scale.
fn band_edges(cfg: &MelConfig) -> Vec<f64> {
    let lo = hz_to_mel(cfg.fmin);
    let hi = hz_to_mel(cfg.fmax);
    let n = cfg.n_mels + 1;
    (0..=n)
        .map(|i| mel_to_hz(lo + (hi - lo) * i as f64 / n as f64))
        .collect()
}

/// Center frequency in Hz of each mel band.
pub fn mel_center_frequencies(cfg: &MelConfig) -> Vec<f64> {
    let edges = band_edges(cfg);
    edges[1..=cfg.n_mels].to_vec()
}

struct Band {
    first_bin: usize,
    weights: Vec<f64>,
}

/// Precomputed analysis window, FFT plan and filterbank for one [`MelConfig`].
pub struct MelFilterbank {
    cfg: MelConfig,
    window: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
    bands: Vec<Band>,
}

impl MelFilterbank {
    pub fn new(cfg: &MelConfig) -> Result<Self> {
        cfg.validate()?;
        let n_bins = cfg.n_fft / 2 + 1;
        let bin_hz: Vec<f64> = (0..n_bins)
            .map(|k| k as f64 * cfg.sample_rate as f64 / cfg.n_fft as f64)
            .collect();
        let edges = band_edges(cfg);

        let mut bands = Vec::with_capacity(cfg.n_mels);
        for m in 0..cfg.n_mels {
            let (lo, center, hi) = (edges[m], edges[m + 1], edges[m + 2]);
            let norm = 2.0 / (hi - lo);
            let weights: Vec<(usize, f64)> = bin_hz
                .iter()
                .enumerate()
                .filter_map(|(k, &f)| {
                    let rise = (f - lo) / (center - lo);
                    let fall = (hi - f) / (hi - center);
                    let w = rise.min(fall).max(0.0) * norm;
                    (w > 0.0).then_some((k, w))
                })
                .collect();
            let band = match (weights.first(), weights.last()) {
                (Some(&(first, _)), Some(&(last, _))) => {
                    let mut dense = vec![0.0; last - first + 1];
                    for (k, w) in weights {
                        dense[k - first] = w;
                    }
                    Band {
                        first_bin: first,
                        weights: dense,
                    }
                }
                // band narrower than one FFT bin: contributes nothing
                _ => Band {
                    first_bin: 0,
                    weights: Vec::new(),
                },
            };
            bands.push(band);
        }

        // periodic Hann, centered inside n_fft when win_length < n_fft
        let offset = (cfg.n_fft - cfg.win_length) / 2;
        let mut window = vec![0.0; cfg.n_fft];
        for i in 0..cfg.win_length {
            window[offset + i] = 0.5 - 0.5 * (std::f64::consts::TAU * i as f64 / cfg.win_length as f64).cos();
        }

        let fft = FftPlanner::new().plan_fft_forward(cfg.n_fft);
        Ok(MelFilterbank {
            cfg: cfg.clone(),
            window,
            fft,
            bands,
        })
    }

    pub fn config(&self) -> &MelConfig {
        &self.cfg
    }

    /// Log-mel features of a clip already at `cfg.sample_rate`, shape `(1, n_mels, T)`.
    pub fn log_mel(&self, clip: &AudioClip) -> Result<FeatureMap> {
        let cfg = &self.cfg;
        if clip.sample_rate != cfg.sample_rate {
            return Err(Error::ConfigInvalid(format!(
                "clip is at {} Hz, features expect {} Hz",
                clip.sample_rate, cfg.sample_rate
            )));
        }
        let mono = clip.to_mono();
        let mut signal: Vec<f64> = mono.samples.iter().map(|&s| s as f64).collect();
        signal.resize(cfg.padded_len(signal.len()), 0.0);
        if signal.is_empty() {
            return Err(Error::EmptyAudio);
        }

        let half = (cfg.n_fft / 2) as i64;
        let len = signal.len() as i64;
        let frames = signal.len() / cfg.hop_length + 1;
        let n_bins = cfg.n_fft / 2 + 1;
        let mut out = vec![0f32; cfg.n_mels * frames];
        let mut buf = vec![Complex::new(0.0, 0.0); cfg.n_fft];
        let mut scratch = vec![Complex::new(0.0, 0.0); self.fft.get_inplace_scratch_len()];
        let mut power = vec![0.0f64; n_bins];

        for t in 0..frames {
            let start = (t * cfg.hop_length) as i64 - half;
            for (i, b) in buf.iter_mut().enumerate() {
                let x = signal[reflect(start + i as i64, len)];
                *b = Complex::new(x * self.window[i], 0.0);
            }
            self.fft.process_with_scratch(&mut buf, &mut scratch);
            for (p, b) in power.iter_mut().zip(&buf) {
                *p = b.norm_sqr();
            }
            for (m, band) in self.bands.iter().enumerate() {
                let energy: f64 = band
                    .weights
                    .iter()
                    .zip(&power[band.first_bin..])
                    .map(|(w, p)| w * p)
                    .sum();
                out[m * frames + t] = energy.max(cfg.log_floor).ln() as f32;
            }
        }
        FeatureMap::new(1, cfg.n_mels, frames, out)
    }
}

/// Reflect-without-edge-repeat index into `0..len`.
fn reflect(i: i64, len: i64) -> usize {
    if len == 1 {
        return 0;
    }
    let period = 2 * (len - 1);
    let m = i.rem_euclid(period);
    (if m < len { m } else { period - m }) as usize
}

pub fn log_mel(clip: &AudioClip, cfg: &MelConfig) -> Result<FeatureMap> {
    MelFilterbank::new(cfg)?.log_mel(clip)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mel_scale_round_trip() {
        for hz in [0.0, 100.0, 999.0, 1000.0, 4321.0, 8000.0] {
            assert!((mel_to_hz(hz_to_mel(hz)) - hz).abs() < 1e-9);
        }
        assert!((hz_to_mel(1000.0) - 15.0).abs() < 1e-12);
    }

    #[test]
    fn reflect_indices() {
        let got: Vec<usize> = (-3..7).map(|i| reflect(i, 4)).collect();
        assert_eq!(got, vec![3, 2, 1, 0, 1, 2, 3, 2, 1, 0]);
    }

    #[test]
    fn config_validation() {
        let ok = MelConfig::default();
        assert!(ok.validate().is_ok());
        for bad in [
            MelConfig {
                n_mels: 0,
                ..ok.clone()
            },
            MelConfig {
                fmax: 9000.0,
                ..ok.clone()
            },
            MelConfig {
                hop_length: 4096,
                ..ok.clone()
            },
            MelConfig {
                log_floor: 0.0,
                ..ok.clone()
            },
        ] {
            assert!(matches!(bad.validate(), Err(Error::ConfigInvalid(_))));
        }
    }

    #[test]
    fn wrong_rate_rejected() {
        let clip = AudioClip::mono(vec![0.0; 100], 8000);
        assert!(log_mel(&clip, &MelConfig::default()).is_err());
    }

    #[test]
    fn filters_have_unit_area_in_hz() {
        // Slaney normalization: each triangle integrates to ~1 over Hz.
        let cfg = MelConfig::default();
        let fb = MelFilterbank::new(&cfg).unwrap();
        let bin_hz = cfg.sample_rate as f64 / cfg.n_fft as f64;
        for band in &fb.bands[40..] {
            let area: f64 = band.weights.iter().sum::<f64>() * bin_hz;
            assert!((area - 1.0).abs() < 0.05, "area {area}");
        }
    }
}
