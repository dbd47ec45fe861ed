//! Frequency-wise instance normalization (FreqIN) and adaptive residual
//! normalization (AdaResNorm).
//!
//! `FreqIN(x) = (x - mu_f) / sqrt(var_f + eps)` with per-bin moments taken
//! over (channel, time). AdaResNorm blends the identity path and FreqIN with
//! a trainable weight `a`, then scales by `b` and shifts by `c`:
//!
//! ```text
//! AdaResNorm(x) = (a * x + (1 - a) * FreqIN(x)) * b + c
//! ```
//!
//! Gradients are written out by hand; there is no autodiff here.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::stats::freq_moments;
use crate::tensor::FeatureMap;

pub const DEFAULT_EPS: f64 = 1e-5;

/// Scalar parameters of one AdaResNorm layer. `a` is not clamped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaResNormParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub eps: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitMode {
    /// a=1, b=1, c=0: the layer starts as the identity.
    Identity,
    /// a=0.5, b=1, c=0: equal blend of identity and FreqIN.
    Neutral,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormGradients {
    pub d_a: f64,
    pub d_b: f64,
    pub d_c: f64,
    /// Same `(c, f, t)` layout as the input map.
    pub d_input: Vec<f64>,
}

pub fn init_params(mode: InitMode) -> AdaResNormParams {
    let a = match mode {
        InitMode::Identity => 1.0,
        InitMode::Neutral => 0.5,
    };
    AdaResNormParams {
        a,
        b: 1.0,
        c: 0.0,
        eps: DEFAULT_EPS,
    }
}

impl AdaResNormParams {
    pub fn validate(&self) -> Result<()> {
        if ![self.a, self.b, self.c, self.eps].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite parameter in {self}")));
        }
        if self.eps <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "eps must be positive, got {}",
                self.eps
            )));
        }
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        text.parse().map_err(|e: Error| match e {
            Error::Parse { line, msg, .. } => Error::parse(path, line, msg),
            other => other,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, format!("{self}\n"))?;
        Ok(())
    }
}

impl fmt::Display for AdaResNormParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "a={} b={} c={} eps={}", self.a, self.b, self.c, self.eps)
    }
}

/// Parses `a=<v> b=<v> c=<v> eps=<v>`. `eps` may be omitted.
impl FromStr for AdaResNormParams {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let here = Path::new("<params>");
        let mut vals: [Option<f64>; 4] = [None; 4];
        for (lineno, line) in s.lines().enumerate() {
            let line = line.split('#').next().unwrap_or_default();
            for tok in line.split_whitespace() {
                let (key, value) = tok.split_once('=').ok_or_else(|| {
                    Error::parse(here, lineno + 1, format!("expected key=value, got '{tok}'"))
                })?;
                let slot = match key {
                    "a" => 0,
                    "b" => 1,
                    "c" => 2,
                    "eps" => 3,
                    _ => return Err(Error::parse(here, lineno + 1, format!("unknown key '{key}'"))),
                };
                let v = value
                    .parse::<f64>()
                    .map_err(|e| Error::parse(here, lineno + 1, format!("bad value for {key}: {e}")))?;
                if vals[slot].replace(v).is_some() {
                    return Err(Error::parse(here, lineno + 1, format!("duplicate key '{key}'")));
                }
            }
        }
        let need =
            |i: usize, k: &str| vals[i].ok_or_else(|| Error::parse(here, 0, format!("missing key '{k}'")));
        let p = AdaResNormParams {
            a: need(0, "a")?,
            b: need(1, "b")?,
            c: need(2, "c")?,
            eps: vals[3].unwrap_or(DEFAULT_EPS),
        };
        p.validate()?;
        Ok(p)
    }
}

/// Per-bin normalized values in f64, plus the per-bin `sqrt(var + eps)`.
fn normalized(map: &FeatureMap, eps: f64) -> (Vec<f64>, Vec<f64>) {
    let d = map.dims();
    let (mean, var) = freq_moments(map);
    let scale: Vec<f64> = var.iter().map(|v| (v + eps).sqrt()).collect();
    let mut out = Vec::with_capacity(d.len());
    for c in 0..d.channels {
        for f in 0..d.freqs {
            out.extend(map.row(c, f).iter().map(|&x| (x as f64 - mean[f]) / scale[f]));
        }
    }
    (out, scale)
}

pub fn freq_in(map: &FeatureMap, eps: f64) -> Result<FeatureMap> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "eps must be positive, got {eps}"
        )));
    }
    let d = map.dims();
    let (n, _) = normalized(map, eps);
    FeatureMap::new(
        d.channels,
        d.freqs,
        d.frames,
        n.into_iter().map(|v| v as f32).collect(),
    )
}

pub fn ada_res_norm(map: &FeatureMap, params: &AdaResNormParams) -> Result<FeatureMap> {
    params.validate()?;
    let d = map.dims();
    let (n, _) = normalized(map, params.eps);
    let AdaResNormParams { a, b, c, .. } = *params;
    let out = map
        .data()
        .iter()
        .zip(&n)
        .map(|(&x, &nv)| ((a * x as f64 + (1.0 - a) * nv) * b + c) as f32)
        .collect();
    FeatureMap::new(d.channels, d.freqs, d.frames, out)
}

/// Gradients of `sum(upstream * AdaResNorm(x))` w.r.t. `a`, `b`, `c` and `x`.
///
/// The input gradient includes the dependence of the per-bin mean and
/// variance on `x`.
pub fn ada_res_norm_grad(
    map: &FeatureMap,
    params: &AdaResNormParams,
    upstream: &[f64],
) -> Result<NormGradients> {
    params.validate()?;
    let d = map.dims();
    if upstream.len() != d.len() {
        return Err(Error::shape(
            format!("{} upstream values for {d}", d.len()),
            format!("{}", upstream.len()),
        ));
    }
    let AdaResNormParams { a, b, .. } = *params;
    let (n, scale) = normalized(map, params.eps);
    let x: Vec<f64> = map.data().iter().map(|&v| v as f64).collect();

    let mut d_a = 0.0;
    let mut d_b = 0.0;
    let mut d_c = 0.0;
    for i in 0..x.len() {
        let g = upstream[i];
        d_c += g;
        d_b += g * (a * x[i] + (1.0 - a) * n[i]);
        d_a += g * b * (x[i] - n[i]);
    }

    // FreqIN backward per bin: (g - mean(g) - n * mean(g * n)) / scale
    let count = (d.channels * d.frames) as f64;
    let mut g_mean = vec![0.0; d.freqs];
    let mut gn_mean = vec![0.0; d.freqs];
    for c in 0..d.channels {
        for f in 0..d.freqs {
            let start = map.index(c, f, 0);
            for i in start..start + d.frames {
                g_mean[f] += upstream[i];
                gn_mean[f] += upstream[i] * n[i];
            }
        }
    }
    g_mean.iter_mut().for_each(|v| *v /= count);
    gn_mean.iter_mut().for_each(|v| *v /= count);

    let mut d_input = vec![0.0; x.len()];
    for c in 0..d.channels {
        for f in 0..d.freqs {
            let start = map.index(c, f, 0);
            for i in start..start + d.frames {
                let g = upstream[i];
                let through_in = (g - g_mean[f] - n[i] * gn_mean[f]) / scale[f];
                d_input[i] = b * (a * g + (1.0 - a) * through_in);
            }
        }
    }

    Ok(NormGradients {
        d_a,
        d_b,
        d_c,
        d_input,
    })
}
