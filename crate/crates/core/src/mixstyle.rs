//! Freq-MixStyle: per-frequency style mixing between two domains.
//!
//! Each instance is normalized with its own per-bin mean and standard
//! deviation, then re-styled with a convex mixture (weight `lambda ~ Beta`)
//! of its own statistics and those of a reference instance. The reference
//! batch swaps the DESED and MAESTRO blocks and shuffles the result.

use crate::error::{Error, Result};
use crate::rng::{beta_sample, RandomSource};
use crate::stats::{freq_stats, FreqStats};
use crate::tensor::{Batch, DomainTag, FeatureMap};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixStyleConfig {
    /// Probability that a batch is augmented at all.
    pub p: f64,
    /// Beta(alpha, alpha) coefficient for the mixing weight.
    pub alpha: f64,
    /// Added to sigma in the normalization denominator.
    pub eps: f64,
}

impl Default for MixStyleConfig {
    fn default() -> Self {
        MixStyleConfig {
            p: 0.5,
            alpha: 0.6,
            eps: 1e-5,
        }
    }
}

impl MixStyleConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p) {
            return Err(Error::InvalidParameter(format!(
                "p must be in [0,1], got {}",
                self.p
            )));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "alpha must be positive, got {}",
                self.alpha
            )));
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "eps must be positive, got {}",
                self.eps
            )));
        }
        Ok(())
    }
}

/// Mixed per-bin statistics for one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedStats {
    /// Mixed mean, one per frequency bin.
    pub alpha_mix: Vec<f64>,
    /// Mixed standard deviation, one per frequency bin.
    pub beta_mix: Vec<f64>,
    pub lambda: f64,
}

/// What a [`freq_mixstyle_with`] call did when the gate fired.
#[derive(Debug, Clone)]
pub struct MixTrace {
    /// `reference[i]` is the index in the input batch that instance `i` was mixed with.
    pub reference: Vec<usize>,
    pub lambdas: Vec<f64>,
}

/// Source indices of the reference batch for a given shuffle.
///
/// The swapped order is `[MAESTRO block, DESED block]`, each block keeping its
/// relative order; `perm[i]` picks which swapped position lands at `i`.
pub fn reference_indices_with(batch: &Batch, perm: &[usize]) -> Result<Vec<usize>> {
    if perm.len() != batch.len() {
        return Err(Error::shape(
            format!("permutation of length {}", batch.len()),
            format!("length {}", perm.len()),
        ));
    }
    let swapped: Vec<usize> = batch
        .tags()
        .enumerate()
        .filter(|(_, t)| *t == DomainTag::Maestro)
        .chain(batch.tags().enumerate().filter(|(_, t)| *t == DomainTag::Desed))
        .map(|(i, _)| i)
        .collect();
    let mut seen = vec![false; perm.len()];
    for &p in perm {
        if p >= perm.len() || std::mem::replace(&mut seen[p], true) {
            return Err(Error::InvalidParameter(format!("{perm:?} is not a permutation")));
        }
    }
    Ok(perm.iter().map(|&p| swapped[p]).collect())
}

fn gather(batch: &Batch, indices: &[usize]) -> Batch {
    let items = indices.iter().map(|&i| batch.items()[i].clone()).collect();
    Batch::from_items(items).expect("gathered batch keeps shape and size")
}

/// Builds the reference batch: swap the domain blocks, then shuffle.
pub fn make_reference_batch(batch: &Batch, rng: &mut RandomSource) -> Batch {
    let perm = rng.permutation(batch.len());
    let idx = reference_indices_with(batch, &perm).expect("fresh permutation is valid");
    gather(batch, &idx)
}

pub fn mix_statistics(x: &FreqStats, reference: &FreqStats, lambda: f64) -> Result<MixedStats> {
    if x.mu.len() != reference.mu.len() || x.sigma.len() != reference.sigma.len() {
        return Err(Error::shape(
            format!("{} frequency bins", x.mu.len()),
            format!("{} frequency bins", reference.mu.len()),
        ));
    }
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::InvalidParameter(format!(
            "lambda must be in [0,1], got {lambda}"
        )));
    }
    let mix = |a: &[f64], b: &[f64]| -> Vec<f64> {
        a.iter()
            .zip(b)
            .map(|(&u, &v)| lambda * u + (1.0 - lambda) * v)
            .collect()
    };
    Ok(MixedStats {
        alpha_mix: mix(&x.mu, &reference.mu),
        beta_mix: mix(&x.sigma, &reference.sigma),
        lambda,
    })
}

/// Re-styles one instance: `beta_mix * (x - mu) / (sigma + eps) + alpha_mix`.
pub fn restyle(map: &FeatureMap, own: &FreqStats, mixed: &MixedStats, eps: f64) -> FeatureMap {
    map.map(|_, f, _, v| {
        let z = (v as f64 - own.mu[f]) / (own.sigma[f] + eps);
        (mixed.beta_mix[f] * z + mixed.alpha_mix[f]) as f32
    })
    .expect("restyle of finite input with eps > 0 stays finite")
}

/// Freq-MixStyle with the default Beta(alpha, alpha) mixing weights.
pub fn freq_mixstyle(batch: &Batch, cfg: &MixStyleConfig, rng: &mut RandomSource) -> Result<Batch> {
    let alpha = cfg.alpha;
    freq_mixstyle_with(batch, cfg, rng, |r| beta_sample(r, alpha)).map(|(b, _)| b)
}

/// Freq-MixStyle with a caller-supplied weight sampler.
///
/// Draw order is fixed: gate, shuffle, then one weight per instance. Returns
/// the trace when the gate fired, `None` when the input was passed through.
pub fn freq_mixstyle_with(
    batch: &Batch,
    cfg: &MixStyleConfig,
    rng: &mut RandomSource,
    mut draw_lambda: impl FnMut(&mut RandomSource) -> Result<f64>,
) -> Result<(Batch, Option<MixTrace>)> {
    cfg.validate()?;
    if !rng.bernoulli(cfg.p) {
        return Ok((batch.clone(), None));
    }

    let perm = rng.permutation(batch.len());
    let reference = reference_indices_with(batch, &perm)?;
    let lambdas = (0..batch.len())
        .map(|_| draw_lambda(rng))
        .collect::<Result<Vec<f64>>>()?;

    let stats: Vec<FreqStats> = batch.maps().map(freq_stats).collect();
    let mut items = Vec::with_capacity(batch.len());
    for (i, (map, tag)) in batch.items().iter().enumerate() {
        let mixed = mix_statistics(&stats[i], &stats[reference[i]], lambdas[i])?;
        items.push((restyle(map, &stats[i], &mixed, cfg.eps), *tag));
    }
    Ok((Batch::from_items(items)?, Some(MixTrace { reference, lambdas })))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::make_batch;

    fn tagged(tags: &[DomainTag]) -> Batch {
        let maps = (0..tags.len())
            .map(|i| FeatureMap::filled(1, 2, 3, i as f32).unwrap())
            .collect();
        make_batch(maps, tags.to_vec()).unwrap()
    }

    #[test]
    fn identity_shuffle_swaps_blocks() {
        use DomainTag::*;
        let b = tagged(&[Desed, Desed, Maestro, Maestro]);
        let idx = reference_indices_with(&b, &[0, 1, 2, 3]).unwrap();
        assert_eq!(idx, vec![2, 3, 0, 1]);
    }

    #[test]
    fn single_domain_reference_is_permutation() {
        let b = tagged(&[DomainTag::Desed; 5]);
        let mut rng = RandomSource::new(4);
        let r = make_reference_batch(&b, &mut rng);
        let mut got: Vec<f32> = r.maps().map(|m| m.get(0, 0, 0)).collect();
        got.sort_by(f32::total_cmp);
        assert_eq!(got, vec![0.0, 1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn rejects_non_permutation() {
        let b = tagged(&[DomainTag::Desed; 3]);
        assert!(reference_indices_with(&b, &[0, 0, 1]).is_err());
        assert!(reference_indices_with(&b, &[0, 1]).is_err());
    }

    #[test]
    fn mix_statistics_endpoints_and_arithmetic() {
        let x = FreqStats {
            mu: vec![0.0, 4.0],
            sigma: vec![1.0, 2.0],
        };
        let r = FreqStats {
            mu: vec![4.0, 0.0],
            sigma: vec![3.0, 1.0],
        };
        let one = mix_statistics(&x, &r, 1.0).unwrap();
        assert_eq!((one.alpha_mix, one.beta_mix), (x.mu.clone(), x.sigma.clone()));
        let zero = mix_statistics(&x, &r, 0.0).unwrap();
        assert_eq!((zero.alpha_mix, zero.beta_mix), (r.mu.clone(), r.sigma.clone()));
        let q = mix_statistics(&x, &r, 0.25).unwrap();
        assert_eq!(q.alpha_mix, vec![3.0, 1.0]);
    }

    #[test]
    fn mix_statistics_errors() {
        let x = FreqStats {
            mu: vec![0.0],
            sigma: vec![1.0],
        };
        let r = FreqStats {
            mu: vec![0.0, 1.0],
            sigma: vec![1.0, 1.0],
        };
        assert!(matches!(
            mix_statistics(&x, &r, 0.5),
            Err(Error::ShapeMismatch { .. })
        ));
        assert!(mix_statistics(&x, &x, 1.5).is_err());
    }

    #[test]
    fn p_zero_passes_through() {
        let b = tagged(&[DomainTag::Desed, DomainTag::Maestro]);
        let cfg = MixStyleConfig {
            p: 0.0,
            ..Default::default()
        };
        let out = freq_mixstyle(&b, &cfg, &mut RandomSource::new(1)).unwrap();
        assert_eq!(out, b);
    }

    #[test]
    fn invalid_config_rejected() {
        let b = tagged(&[DomainTag::Desed]);
        for cfg in [
            MixStyleConfig {
                p: 1.5,
                ..Default::default()
            },
            MixStyleConfig {
                alpha: 0.0,
                ..Default::default()
            },
            MixStyleConfig {
                eps: 0.0,
                ..Default::default()
            },
        ] {
            assert!(freq_mixstyle(&b, &cfg, &mut RandomSource::new(0)).is_err());
        }
    }
}
