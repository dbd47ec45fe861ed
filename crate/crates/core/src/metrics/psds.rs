//! Intersection-based polyphonic sound detection score.
//!
//! A detection is DTC-valid when enough of it overlaps same-class ground
//! truth; a ground-truth event is a true positive when enough of it is
//! covered by DTC-valid detections. Every detection failing DTC is a false
//! positive. Each operating point yields one (eFPR, effective TPR) pair and
//! the ROC is the upper staircase through them.

use std::collections::{BTreeMap, BTreeSet};

use super::{AnnotationSet, Event};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct PsdsConfig {
    pub rho_dtc: f64,
    pub rho_gtc: f64,
    pub alpha_st: f64,
    /// Upper eFPR bound of the integrated area, in false positives per hour.
    pub e_max: f64,
    pub thresholds: Vec<f64>,
}

impl Default for PsdsConfig {
    fn default() -> Self {
        // 50 points from 0.01 to 0.99
        let thresholds = (0..50).map(|i| 0.01 + 0.98 * i as f64 / 49.0).collect();
        PsdsConfig {
            rho_dtc: 0.7,
            rho_gtc: 0.7,
            alpha_st: 1.0,
            e_max: 100.0,
            thresholds,
        }
    }
}

impl PsdsConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, rho) in [("rho_dtc", self.rho_dtc), ("rho_gtc", self.rho_gtc)] {
            if !(rho > 0.0 && rho <= 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be in (0,1], got {rho}"
                )));
            }
        }
        if !(self.e_max > 0.0 && self.e_max.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "e_max must be positive, got {}",
                self.e_max
            )));
        }
        if !(self.alpha_st >= 0.0) {
            return Err(Error::InvalidParameter("alpha_st must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MatchCounts {
    pub tp: usize,
    pub fp: usize,
    pub n_truth: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatingPoint {
    pub threshold: f64,
    pub efpr: f64,
    pub etpr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PsdRoc {
    /// Staircase corners sorted by eFPR; eTPR is non-decreasing.
    pub curve: Vec<(f64, f64)>,
    pub operating_points: Vec<OperatingPoint>,
    /// Classes without ground truth, excluded from the TPR statistics.
    pub excluded_classes: Vec<String>,
}

/// Sorted, merged copy of `intervals`.
fn union(mut intervals: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    intervals.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(intervals.len());
    for (on, off) in intervals {
        match out.last_mut() {
            Some(last) if on <= last.1 => last.1 = last.1.max(off),
            _ => out.push((on, off)),
        }
    }
    out
}

fn overlap_with(union: &[(f64, f64)], on: f64, off: f64) -> f64 {
    union
        .iter()
        .map(|&(a, b)| (off.min(b) - on.max(a)).max(0.0))
        .sum()
}

type Key<'a> = (&'a str, &'a str);

fn group<'a>(events: &'a [Event]) -> BTreeMap<Key<'a>, Vec<&'a Event>> {
    let mut map: BTreeMap<Key<'a>, Vec<&'a Event>> = BTreeMap::new();
    for e in events {
        map.entry((e.clip_id.as_str(), e.class_name.as_str()))
            .or_default()
            .push(e);
    }
    map
}

/// TP/FP/truth counts per class under the DTC/GTC intersection criteria.
pub fn intersection_match(
    dets: &[Event],
    truth: &[Event],
    rho_dtc: f64,
    rho_gtc: f64,
) -> BTreeMap<String, MatchCounts> {
    let det_groups = group(dets);
    let truth_groups = group(truth);
    let mut counts: BTreeMap<String, MatchCounts> = BTreeMap::new();

    let keys: BTreeSet<Key> = det_groups.keys().chain(truth_groups.keys()).copied().collect();
    for key in keys {
        let ds = det_groups.get(&key).map(Vec::as_slice).unwrap_or_default();
        let ts = truth_groups.get(&key).map(Vec::as_slice).unwrap_or_default();
        let truth_union = union(ts.iter().map(|e| (e.onset_s, e.offset_s)).collect());

        let mut valid = Vec::new();
        let entry = counts.entry(key.1.to_string()).or_default();
        for d in ds {
            let covered = overlap_with(&truth_union, d.onset_s, d.offset_s);
            if d.duration() > 0.0 && covered / d.duration() >= rho_dtc {
                valid.push((d.onset_s, d.offset_s));
            } else {
                entry.fp += 1;
            }
        }
        let det_union = union(valid);
        for t in ts {
            entry.n_truth += 1;
            let covered = overlap_with(&det_union, t.onset_s, t.offset_s);
            if covered / t.duration() >= rho_gtc {
                entry.tp += 1;
            }
        }
    }
    counts
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Builds the PSD-ROC from one detection list per operating point.
///
/// `detections[i]` is the system output at `thresholds[i]`. eFPR counts every
/// false positive per hour of total audio; the effective TPR is
/// `mean(TPR) - alpha_st * std(TPR)` over classes with ground truth, floored at 0.
pub fn psd_roc(
    detections: &[Vec<Event>],
    thresholds: &[f64],
    truth: &AnnotationSet,
    cfg: &PsdsConfig,
) -> Result<PsdRoc> {
    cfg.validate()?;
    if detections.len() != thresholds.len() {
        return Err(Error::shape(
            format!("{} detection lists", thresholds.len()),
            format!("{}", detections.len()),
        ));
    }
    let hours = truth.total_duration() / 3600.0;
    if !(hours > 0.0) {
        return Err(Error::InvalidParameter(
            "total audio duration must be positive".into(),
        ));
    }
    let truth_classes = truth.classes();
    if truth_classes.is_empty() {
        return Err(Error::NoTruthEvents("every class".into()));
    }
    let det_classes: BTreeSet<&str> = detections
        .iter()
        .flatten()
        .map(|e| e.class_name.as_str())
        .collect();
    let excluded_classes: Vec<String> = det_classes
        .into_iter()
        .filter(|c| !truth_classes.iter().any(|t| t == c))
        .map(str::to_string)
        .collect();

    let mut ops = Vec::with_capacity(thresholds.len());
    for (dets, &threshold) in detections.iter().zip(thresholds) {
        let counts = intersection_match(dets, &truth.events, cfg.rho_dtc, cfg.rho_gtc);
        let fp: usize = counts.values().map(|c| c.fp).sum();
        let tprs: Vec<f64> = truth_classes
            .iter()
            .map(|c| {
                let m = counts.get(c).copied().unwrap_or_default();
                m.tp as f64 / m.n_truth as f64
            })
            .collect();
        let (mean, std) = mean_std(&tprs);
        ops.push(OperatingPoint {
            threshold,
            efpr: fp as f64 / hours,
            etpr: (mean - cfg.alpha_st * std).max(0.0),
        });
    }

    Ok(PsdRoc {
        curve: staircase(ops.iter().map(|o| (o.efpr, o.etpr))),
        operating_points: ops,
        excluded_classes,
    })
}

/// PSD-ROC for scored detections: the list at threshold `t` keeps every
/// detection with confidence `>= t`.
pub fn psd_roc_from_scored(
    scored: &[(Event, f64)],
    truth: &AnnotationSet,
    cfg: &PsdsConfig,
) -> Result<PsdRoc> {
    let lists: Vec<Vec<Event>> = cfg
        .thresholds
        .iter()
        .map(|&t| {
            scored
                .iter()
                .filter(|(_, conf)| *conf >= t)
                .map(|(e, _)| e.clone())
                .collect()
        })
        .collect();
    psd_roc(&lists, &cfg.thresholds, truth, cfg)
}

/// Upper staircase: for every eFPR, the best eTPR reachable at or below it.
fn staircase(points: impl Iterator<Item = (f64, f64)>) -> Vec<(f64, f64)> {
    let mut pts: Vec<(f64, f64)> = points.collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.total_cmp(&a.1)));
    let mut curve: Vec<(f64, f64)> = Vec::new();
    for (x, y) in pts {
        match curve.last() {
            Some(&(_, best)) if y <= best => {}
            Some(&(lx, _)) if lx == x => curve.last_mut().unwrap().1 = y,
            _ => curve.push((x, y)),
        }
    }
    curve
}

/// Area under the staircase over eFPR in `[0, e_max]`, divided by `e_max`.
pub fn psds(curve: &[(f64, f64)], cfg: &PsdsConfig) -> f64 {
    let mut area = 0.0;
    for (i, &(x, y)) in curve.iter().enumerate() {
        if x >= cfg.e_max {
            break;
        }
        let next = curve.get(i + 1).map_or(cfg.e_max, |p| p.0.min(cfg.e_max));
        area += y * (next - x);
    }
    area / cfg.e_max
}
