//! Per-instance frequency-wise and channel-wise statistics.
//!
//! Frequency-wise statistics hold one mean and one population standard
//! deviation per frequency bin, reduced over channels and frames. The
//! channel-wise variant reduces over frequency bins and frames instead.
//! The concatenation `[mu, sigma]` is the vector exported for embedding tools.

use std::io::{BufRead, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::{Batch, DomainTag, FeatureMap};

#[derive(Debug, Clone, PartialEq)]
pub struct FreqStats {
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChanStats {
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
}

/// Which statistic vector [`export_stats`] writes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StatsAxis {
    Frequency,
    Channel,
}

impl std::str::FromStr for StatsAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "frequency" | "freq" => Ok(StatsAxis::Frequency),
            "channel" | "chan" => Ok(StatsAxis::Channel),
            other => Err(Error::InvalidParameter(format!(
                "unknown statistics axis '{other}' (expected frequency|channel)"
            ))),
        }
    }
}

impl FreqStats {
    pub fn concat(&self) -> Vec<f64> {
        self.mu.iter().chain(&self.sigma).copied().collect()
    }
}

impl ChanStats {
    pub fn concat(&self) -> Vec<f64> {
        self.mu.iter().chain(&self.sigma).copied().collect()
    }
}

/// Per-bin mean and population variance over (channel, time), in f64.
pub(crate) fn freq_moments(map: &FeatureMap) -> (Vec<f64>, Vec<f64>) {
    let d = map.dims();
    let count = (d.channels * d.frames) as f64;
    let mut mean = vec![0.0f64; d.freqs];
    for c in 0..d.channels {
        for (f, m) in mean.iter_mut().enumerate() {
            *m += map.row(c, f).iter().map(|&v| v as f64).sum::<f64>();
        }
    }
    mean.iter_mut().for_each(|m| *m /= count);

    // two-pass variance
    let mut var = vec![0.0f64; d.freqs];
    for c in 0..d.channels {
        for (f, v) in var.iter_mut().enumerate() {
            let mu = mean[f];
            *v += map
                .row(c, f)
                .iter()
                .map(|&x| {
                    let dx = x as f64 - mu;
                    dx * dx
                })
                .sum::<f64>();
        }
    }
    var.iter_mut().for_each(|v| *v /= count);
    (mean, var)
}

pub fn freq_stats(map: &FeatureMap) -> FreqStats {
    let (mu, var) = freq_moments(map);
    FreqStats {
        mu,
        sigma: var.into_iter().map(f64::sqrt).collect(),
    }
}

pub fn chan_stats(map: &FeatureMap) -> ChanStats {
    let d = map.dims();
    let count = (d.freqs * d.frames) as f64;
    let mut mu = Vec::with_capacity(d.channels);
    let mut sigma = Vec::with_capacity(d.channels);
    for c in 0..d.channels {
        let start = map.index(c, 0, 0);
        let block = &map.data()[start..start + d.freqs * d.frames];
        let mean = block.iter().map(|&v| v as f64).sum::<f64>() / count;
        let var = block.iter().map(|&v| (v as f64 - mean).powi(2)).sum::<f64>() / count;
        mu.push(mean);
        sigma.push(var.sqrt());
    }
    ChanStats { mu, sigma }
}

/// Writes one row per batch item: `TAG,v1,...,v2K`. Returns the row count.
pub fn export_stats(batch: &Batch, which: StatsAxis, out: &Path) -> Result<usize> {
    let file = std::fs::File::create(out)?;
    let mut w = BufWriter::new(file);
    for (map, tag) in batch.items() {
        let values = match which {
            StatsAxis::Frequency => freq_stats(map).concat(),
            StatsAxis::Channel => chan_stats(map).concat(),
        };
        write!(w, "{}", tag.name())?;
        for v in values {
            write!(w, ",{v}")?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(batch.len())
}

/// Reads back a file written by [`export_stats`].
pub fn read_stats(path: &Path) -> Result<Vec<(DomainTag, Vec<f64>)>> {
    let file = std::fs::File::open(path)?;
    let mut rows = Vec::new();
    for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let tag_field = fields.next().unwrap_or_default();
        let tag = DomainTag::parse(tag_field)
            .ok_or_else(|| Error::parse(path, lineno, format!("unknown domain '{tag_field}'")))?;
        let values = fields
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::parse(path, lineno, format!("bad value '{s}': {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push((tag, values));
    }
    Ok(rows)
}
