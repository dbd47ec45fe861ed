//! Change-detection sound event bounding boxes (cSEBBs).
//!
//! Per class, frame posteriors are turned into "delta" scores by a two-sided
//! moving-average difference. Peaks of the delta above `+boundary_threshold`
//! are tentative onsets, troughs below `-boundary_threshold` tentative
//! offsets. Paired boundaries become candidate boxes whose confidence is the
//! mean frame score inside them; small dips between neighbouring boxes are
//! merged away. Sensitivity is then controlled by thresholding box
//! confidences, which never moves a surviving box's boundaries.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{psd_roc_from_scored, psds, AnnotationSet, Event, PsdsConfig};

/// Frame-level class posteriors for one clip.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTrack {
    pub clip_id: String,
    pub class_names: Vec<String>,
    pub hop_seconds: f64,
    /// `scores[k][t]`: posterior of class `k` at frame `t`.
    pub scores: Vec<Vec<f64>>,
}

impl ScoreTrack {
    pub fn new(
        clip_id: impl Into<String>,
        class_names: Vec<String>,
        hop_seconds: f64,
        scores: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if !(hop_seconds > 0.0 && hop_seconds.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "hop_seconds must be positive, got {hop_seconds}"
            )));
        }
        if scores.len() != class_names.len() {
            return Err(Error::shape(
                format!("{} class rows", class_names.len()),
                format!("{}", scores.len()),
            ));
        }
        let frames = scores.first().map_or(0, Vec::len);
        for row in &scores {
            if row.len() != frames {
                return Err(Error::shape(format!("{frames} frames"), format!("{}", row.len())));
            }
            if let Some(v) = row.iter().find(|v| !(0.0..=1.0).contains(*v)) {
                return Err(Error::InvalidParameter(format!("score {v} outside [0,1]")));
            }
        }
        Ok(ScoreTrack {
            clip_id: clip_id.into(),
            class_names,
            hop_seconds,
            scores,
        })
    }

    pub fn frames(&self) -> usize {
        self.scores.first().map_or(0, Vec::len)
    }

    pub fn duration(&self) -> f64 {
        self.frames() as f64 * self.hop_seconds
    }
}

/// A scored event candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct Sebb {
    pub clip_id: String,
    pub class_name: String,
    pub onset_s: f64,
    pub offset_s: f64,
    pub confidence: f64,
}

impl Sebb {
    pub fn to_event(&self) -> Event {
        Event::new(&self.clip_id, &self.class_name, self.onset_s, self.offset_s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CsebbConfig {
    pub filter_len: usize,
    pub merge_threshold_abs: f64,
    pub merge_threshold_rel: f64,
    pub boundary_threshold: f64,
}

impl Default for CsebbConfig {
    fn default() -> Self {
        CsebbConfig {
            filter_len: 21,
            merge_threshold_abs: 0.15,
            merge_threshold_rel: 1.5,
            boundary_threshold: 0.1,
        }
    }
}

impl CsebbConfig {
    pub fn validate(&self) -> Result<()> {
        check_filter_len(self.filter_len)?;
        for (name, v) in [
            ("merge_threshold_abs", self.merge_threshold_abs),
            ("merge_threshold_rel", self.merge_threshold_rel),
            ("boundary_threshold", self.boundary_threshold),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: CsebbConfig = toml::from_str(text).map_err(|e| Error::ConfigInvalid(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("plain struct serializes")
    }
}

fn check_filter_len(filter_len: usize) -> Result<()> {
    if filter_len < 3 || filter_len.is_multiple_of(2) {
        return Err(Error::InvalidFilterLen(filter_len));
    }
    Ok(())
}

/// `delta[t] = mean(s[t..=t+h]) - mean(s[t-h..=t-1])`, `h = (filter_len - 1) / 2`.
///
/// Indices outside the track are clamped to the first or last frame.
pub fn delta_scores(row: &[f64], filter_len: usize) -> Result<Vec<f64>> {
    check_filter_len(filter_len)?;
    let n = row.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let h = (filter_len - 1) / 2;
    // prefix sums over the edge-extended signal: index i maps to frame i - h
    let ext = |i: usize| row[(i as isize - h as isize).clamp(0, n as isize - 1) as usize];
    let mut prefix = Vec::with_capacity(n + 2 * h + 1);
    prefix.push(0.0);
    for i in 0..n + 2 * h {
        prefix.push(prefix[i] + ext(i));
    }
    // frame t sits at extended index t + h
    let sum = |lo: usize, hi: usize| prefix[hi] - prefix[lo];
    Ok((0..n)
        .map(|t| {
            let right = sum(t + h, t + 2 * h + 1) / (h + 1) as f64;
            let left = sum(t, t + h) / h as f64;
            right - left
        })
        .collect())
}

/// Centers of strict local extrema runs where `keep(value)` holds.
fn extrema(delta: &[f64], peaks: bool, keep: impl Fn(f64) -> bool) -> Vec<usize> {
    let above = |a: f64, b: f64| if peaks { a > b } else { a < b };
    let mut out = Vec::new();
    let mut i = 0;
    while i < delta.len() {
        let v = delta[i];
        let mut j = i;
        while j + 1 < delta.len() && delta[j + 1] == v {
            j += 1;
        }
        let left_ok = i == 0 || above(v, delta[i - 1]);
        let right_ok = j + 1 == delta.len() || above(v, delta[j + 1]);
        if left_ok && right_ok && keep(v) {
            out.push((i + j) / 2);
        }
        i = j + 1;
    }
    out
}

/// Frame intervals `[on, off)` from onset/offset frames, paired in time order.
fn pair_boundaries(onsets: &[usize], offsets: &[usize], frames: usize) -> Vec<(usize, usize)> {
    let mut marks: Vec<(usize, bool)> = onsets
        .iter()
        .map(|&f| (f, true))
        .chain(offsets.iter().map(|&f| (f, false)))
        .collect();
    marks.sort_unstable();

    let mut out = Vec::new();
    let mut open: Option<usize> = None;
    let mut last_offset = 0;
    for (frame, is_onset) in marks {
        match (is_onset, open) {
            (true, Some(start)) => {
                out.push((start, frame));
                open = Some(frame);
            }
            (true, None) => open = Some(frame),
            (false, Some(start)) => {
                out.push((start, frame));
                open = None;
                last_offset = frame;
            }
            // offset with nothing open: the box starts at the previous offset (or clip start)
            (false, None) => {
                out.push((last_offset, frame));
                last_offset = frame;
            }
        }
    }
    if let Some(start) = open {
        out.push((start, frames));
    }
    out.retain(|(a, b)| a < b);
    out
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn to_frame(seconds: f64, hop: f64) -> usize {
    (seconds / hop).round().max(0.0) as usize
}

/// Candidate boxes for every class of `track`, one list per class in track order.
pub fn detect_candidates(track: &ScoreTrack, cfg: &CsebbConfig) -> Result<Vec<Vec<Sebb>>> {
    cfg.validate()?;
    let frames = track.frames();
    let mut all = Vec::with_capacity(track.class_names.len());
    for (k, row) in track.scores.iter().enumerate() {
        let delta = delta_scores(row, cfg.filter_len)?;
        let thr = cfg.boundary_threshold;
        let onsets = extrema(&delta, true, |v| v > thr);
        let offsets = extrema(&delta, false, |v| v < -thr);
        let boxes = pair_boundaries(&onsets, &offsets, frames)
            .into_iter()
            .map(|(on, off)| Sebb {
                clip_id: track.clip_id.clone(),
                class_name: track.class_names[k].clone(),
                onset_s: on as f64 * track.hop_seconds,
                offset_s: off as f64 * track.hop_seconds,
                confidence: mean(&row[on..off]).clamp(0.0, 1.0),
            })
            .collect();
        all.push(boxes);
    }
    Ok(all)
}

/// Merges neighbouring candidates of one class separated by a shallow gap.
///
/// `A` and `B` merge when the mean score in the gap is at least
/// `merge_threshold_abs` and `min(conf_A, conf_B) / gap_mean` is at most
/// `merge_threshold_rel`. Boxes that touch (empty gap) are left alone. The
/// merged confidence is the mean frame score over the merged span.
pub fn merge_gaps(cands: &[Sebb], row: &[f64], hop_seconds: f64, cfg: &CsebbConfig) -> Result<Vec<Sebb>> {
    for i in 1..cands.len() {
        if cands[i].onset_s < cands[i - 1].offset_s {
            return Err(Error::UnsortedInput(i));
        }
    }
    let mut boxes = cands.to_vec();
    loop {
        let mut merged_any = false;
        let mut out: Vec<Sebb> = Vec::with_capacity(boxes.len());
        for b in boxes {
            if let Some(a) = out.last_mut() {
                let gap = to_frame(a.offset_s, hop_seconds)..to_frame(b.onset_s, hop_seconds).min(row.len());
                if !gap.is_empty() {
                    let gap_mean = mean(&row[gap]);
                    if gap_mean >= cfg.merge_threshold_abs
                        && a.confidence.min(b.confidence) / gap_mean <= cfg.merge_threshold_rel
                    {
                        let span = to_frame(a.onset_s, hop_seconds)
                            ..to_frame(b.offset_s, hop_seconds).min(row.len());
                        a.offset_s = b.offset_s;
                        a.confidence = mean(&row[span]).clamp(0.0, 1.0);
                        merged_any = true;
                        continue;
                    }
                }
            }
            out.push(b);
        }
        boxes = out;
        if !merged_any {
            return Ok(boxes);
        }
    }
}

/// Full candidate generation for one clip: detection, then gap merging per class.
pub fn csebb(track: &ScoreTrack, cfg: &CsebbConfig) -> Result<Vec<Sebb>> {
    let per_class = detect_candidates(track, cfg)?;
    let mut out = Vec::new();
    for (k, cands) in per_class.iter().enumerate() {
        out.extend(merge_gaps(cands, &track.scores[k], track.hop_seconds, cfg)?);
    }
    Ok(out)
}

/// Class-wise confidence thresholds with an optional fallback.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Thresholds {
    pub per_class: BTreeMap<String, f64>,
    pub default: Option<f64>,
}

impl Thresholds {
    pub fn uniform(t: f64) -> Self {
        Thresholds {
            per_class: BTreeMap::new(),
            default: Some(t),
        }
    }

    pub fn for_class(&self, class: &str) -> Option<f64> {
        self.per_class.get(class).copied().or(self.default)
    }
}

/// Keeps boxes whose confidence reaches their class threshold, sorted by
/// (clip, onset, class).
pub fn threshold_events(sebbs: &[Sebb], thresholds: &Thresholds) -> Result<Vec<Sebb>> {
    let mut out = Vec::new();
    for s in sebbs {
        let t = thresholds
            .for_class(&s.class_name)
            .ok_or_else(|| Error::UnknownClass(s.class_name.clone()))?;
        if s.confidence >= t {
            out.push(s.clone());
        }
    }
    sort_sebbs(&mut out);
    Ok(out)
}

pub fn sort_sebbs(sebbs: &mut [Sebb]) {
    sebbs.sort_by(|a, b| {
        a.clip_id
            .cmp(&b.clip_id)
            .then(a.onset_s.total_cmp(&b.onset_s))
            .then(a.class_name.cmp(&b.class_name))
            .then(a.offset_s.total_cmp(&b.offset_s))
    });
}

/// Candidate values for [`tune_csebb`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CsebbGrid {
    pub filter_len: Vec<usize>,
    pub merge_threshold_abs: Vec<f64>,
    pub merge_threshold_rel: Vec<f64>,
    pub boundary_threshold: Vec<f64>,
}

impl CsebbGrid {
    pub fn single(cfg: CsebbConfig) -> Self {
        CsebbGrid {
            filter_len: vec![cfg.filter_len],
            merge_threshold_abs: vec![cfg.merge_threshold_abs],
            merge_threshold_rel: vec![cfg.merge_threshold_rel],
            boundary_threshold: vec![cfg.boundary_threshold],
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::ConfigInvalid(e.to_string()))
    }

    /// Configurations in tie-break order: filter length, then boundary,
    /// absolute and relative merge thresholds, all ascending.
    pub fn configs(&self) -> Vec<CsebbConfig> {
        fn sorted_f(v: &[f64]) -> Vec<f64> {
            let mut v = v.to_vec();
            v.sort_by(f64::total_cmp);
            v.dedup();
            v
        }
        let mut lens = self.filter_len.clone();
        lens.sort_unstable();
        lens.dedup();
        let (bs, abs, rels) = (
            sorted_f(&self.boundary_threshold),
            sorted_f(&self.merge_threshold_abs),
            sorted_f(&self.merge_threshold_rel),
        );
        let mut out = Vec::new();
        for &filter_len in &lens {
            for &boundary_threshold in &bs {
                for &merge_threshold_abs in &abs {
                    for &merge_threshold_rel in &rels {
                        out.push(CsebbConfig {
                            filter_len,
                            merge_threshold_abs,
                            merge_threshold_rel,
                            boundary_threshold,
                        });
                    }
                }
            }
        }
        out
    }
}

/// PSDS of cSEBB output over `tracks`, sweeping the confidence threshold.
pub fn csebb_psds(
    tracks: &[ScoreTrack],
    truth: &AnnotationSet,
    cfg: &CsebbConfig,
    psds_cfg: &PsdsConfig,
) -> Result<f64> {
    let mut scored = Vec::new();
    for track in tracks {
        for s in csebb(track, cfg)? {
            let conf = s.confidence;
            scored.push((s.to_event(), conf));
        }
    }
    let roc = psd_roc_from_scored(&scored, truth, psds_cfg)?;
    Ok(psds(&roc.curve, psds_cfg))
}

/// Exhaustive grid search for the configuration with the highest PSDS.
///
/// Returns the winner and its PSDS; ties keep the earliest configuration in
/// [`CsebbGrid::configs`] order.
pub fn tune_csebb(
    tracks: &[ScoreTrack],
    truth: &AnnotationSet,
    grid: &CsebbGrid,
    psds_cfg: &PsdsConfig,
) -> Result<(CsebbConfig, f64)> {
    let configs = grid.configs();
    if configs.is_empty() {
        return Err(Error::EmptyGrid);
    }
    for track in tracks {
        if !truth.clip_durations.contains_key(&track.clip_id) {
            return Err(Error::InvalidParameter(format!(
                "validation truth has no duration for clip '{}'",
                track.clip_id
            )));
        }
    }
    let mut best: Option<(CsebbConfig, f64)> = None;
    for cfg in configs {
        let score = csebb_psds(tracks, truth, &cfg, psds_cfg)?;
        if best.as_ref().is_none_or(|(_, b)| score > *b) {
            best = Some((cfg, score));
        }
    }
    Ok(best.expect("non-empty grid"))
}
