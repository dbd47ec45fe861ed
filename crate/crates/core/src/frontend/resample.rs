//! Band-limited rational resampling with a Kaiser-windowed sinc kernel.

use super::AudioClip;
use crate::error::{Error, Result};

pub const TARGET_RATE: u32 = 16_000;

// kernel half-width, in zero crossings of the low-pass sinc
const ZERO_CROSSINGS: f64 = 32.0;
const KAISER_BETA: f64 = 8.6;
const ROLLOFF: f64 = 0.945;
const MAX_TABLE_PHASES: usize = 2048;

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Modified Bessel function of the first kind, order zero (power series).
fn bessel_i0(x: f64) -> f64 {
    let q = x * x / 4.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..200 {
        term *= q / (k * k) as f64;
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

struct Kernel {
    cutoff: f64,
    half_width: f64,
    i0_beta: f64,
}

impl Kernel {
    fn new(cutoff: f64) -> Self {
        Kernel {
            cutoff,
            half_width: ZERO_CROSSINGS / cutoff,
            i0_beta: bessel_i0(KAISER_BETA),
        }
    }

    /// Impulse response at offset `u` input samples from the output instant.
    fn eval(&self, u: f64) -> f64 {
        let r = u / self.half_width;
        if r.abs() >= 1.0 {
            return 0.0;
        }
        let x = self.cutoff * u;
        let sinc = if x.abs() < 1e-12 {
            1.0
        } else {
            (std::f64::consts::PI * x).sin() / (std::f64::consts::PI * x)
        };
        let window = bessel_i0(KAISER_BETA * (1.0 - r * r).sqrt()) / self.i0_beta;
        self.cutoff * sinc * window
    }
}

/// Resamples mono `samples` from `from_hz` to `to_hz`.
pub fn resample(samples: &[f32], from_hz: u32, to_hz: u32) -> Vec<f32> {
    if from_hz == to_hz || samples.is_empty() {
        return samples.to_vec();
    }
    let g = gcd(from_hz as u64, to_hz as u64);
    let up = (to_hz as u64 / g) as usize;
    let down = (from_hz as u64 / g) as usize;
    let cutoff = (to_hz as f64 / from_hz as f64).min(1.0) * ROLLOFF;
    let kernel = Kernel::new(cutoff);
    let reach = kernel.half_width.ceil() as i64;
    let taps = (2 * reach + 1) as usize;

    // tap j of phase p sits at input index base - reach + j
    let table: Option<Vec<f64>> = (up <= MAX_TABLE_PHASES).then(|| {
        let mut t = Vec::with_capacity(up * taps);
        for p in 0..up {
            let frac = p as f64 / up as f64;
            for j in 0..taps {
                t.push(kernel.eval(frac + reach as f64 - j as f64));
            }
        }
        t
    });

    let out_len = ((samples.len() as u128 * up as u128).div_ceil(down as u128)) as usize;
    let n_in = samples.len() as i64;
    let mut out = Vec::with_capacity(out_len);
    let mut scratch = vec![0.0; taps];
    for n in 0..out_len {
        let pos = n as u128 * down as u128;
        let base = (pos / up as u128) as i64;
        let phase = (pos % up as u128) as usize;
        let coeffs: &[f64] = match &table {
            Some(t) => &t[phase * taps..(phase + 1) * taps],
            None => {
                let frac = phase as f64 / up as f64;
                for (j, c) in scratch.iter_mut().enumerate() {
                    *c = kernel.eval(frac + reach as f64 - j as f64);
                }
                &scratch
            }
        };
        let first = base - reach;
        let mut acc = 0.0f64;
        for (j, &c) in coeffs.iter().enumerate() {
            let k = first + j as i64;
            if (0..n_in).contains(&k) {
                acc += c * samples[k as usize] as f64;
            }
        }
        out.push(acc as f32);
    }
    out
}

/// Downmixes to mono, then resamples to 16 kHz. 16 kHz mono input is returned as is.
pub fn resample_to_mono_16k(clip: &AudioClip) -> Result<AudioClip> {
    if clip.samples.is_empty() {
        return Err(Error::EmptyAudio);
    }
    if clip.sample_rate == 0 {
        return Err(Error::ConfigInvalid("sample rate must be positive".into()));
    }
    if clip.channels == 1 && clip.sample_rate == TARGET_RATE {
        return Ok(clip.clone());
    }
    let mono = clip.to_mono();
    Ok(AudioClip::mono(
        resample(&mono.samples, mono.sample_rate, TARGET_RATE),
        TARGET_RATE,
    ))
}
