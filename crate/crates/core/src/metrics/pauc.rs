//! Segment-based partial ROC AUC, macro-averaged over classes.

use super::SegmentTable;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PaucStandardization {
    /// McClish: chance maps to 0.5, a perfect ranking to 1.0.
    #[default]
    McClish,
    /// Raw partial area divided by `max_fpr`.
    Raw,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MpaucReport {
    pub value: f64,
    pub per_class: Vec<(String, f64)>,
    /// Classes without both positive and negative segments; not averaged.
    pub degenerate: Vec<String>,
}

/// ROC corners `(fpr, tpr)` from `(0, 0)` to `(1, 1)`; tied scores form one step.
pub fn roc_curve(scores: &[f64], labels: &[bool]) -> Vec<(f64, f64)> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let n_pos = labels.iter().filter(|&&l| l).count() as f64;
    let n_neg = labels.len() as f64 - n_pos;

    let mut curve = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if labels[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        curve.push((fp as f64 / n_neg, tp as f64 / n_pos));
    }
    curve
}

/// Standardized partial AUC over FPR in `[0, max_fpr]` for one class.
pub fn class_partial_auc(
    scores: &[f64],
    labels: &[bool],
    max_fpr: f64,
    mode: PaucStandardization,
) -> Option<f64> {
    let n_pos = labels.iter().filter(|&&l| l).count();
    if n_pos == 0 || n_pos == labels.len() {
        return None;
    }
    let curve = roc_curve(scores, labels);
    let mut area = 0.0;
    for w in curve.windows(2) {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        if x0 >= max_fpr {
            break;
        }
        if x1 <= max_fpr {
            area += (x1 - x0) * (y0 + y1) / 2.0;
        } else {
            // interpolate tpr at the cut
            let y_cut = y0 + (y1 - y0) * (max_fpr - x0) / (x1 - x0);
            area += (max_fpr - x0) * (y0 + y_cut) / 2.0;
        }
    }
    Some(match mode {
        PaucStandardization::Raw => area / max_fpr,
        PaucStandardization::McClish => {
            let min_area = 0.5 * max_fpr * max_fpr;
            0.5 * (1.0 + (area - min_area) / (max_fpr - min_area))
        }
    })
}

/// Macro partial AUC of segment `scores` against binary segment `labels`.
///
/// Every scored segment must have a label row. Degenerate classes are
/// excluded from the mean and listed in the report.
pub fn mpauc(
    scores: &SegmentTable,
    labels: &SegmentTable,
    classes: &[String],
    max_fpr: f64,
    mode: PaucStandardization,
) -> Result<MpaucReport> {
    if !(max_fpr > 0.0 && max_fpr <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "max_fpr must be in (0,1], got {max_fpr}"
        )));
    }
    let mut per_class = Vec::new();
    let mut degenerate = Vec::new();
    for class in classes {
        let (Some(ks), Some(kl)) = (scores.class_index(class), labels.class_index(class)) else {
            return Err(Error::InvalidParameter(format!(
                "class '{class}' missing from scores or labels"
            )));
        };
        let mut s = Vec::with_capacity(scores.rows.len());
        let mut l = Vec::with_capacity(scores.rows.len());
        for (key, row) in &scores.rows {
            let label_row = labels.rows.get(key).ok_or_else(|| {
                Error::InvalidParameter(format!("no label for clip '{}' segment {}", key.0, key.1))
            })?;
            s.push(row[ks]);
            l.push(label_row[kl] >= 0.5);
        }
        match class_partial_auc(&s, &l, max_fpr, mode) {
            Some(v) => per_class.push((class.clone(), v)),
            None => degenerate.push(class.clone()),
        }
    }
    if per_class.is_empty() {
        return Err(Error::DegenerateClass(degenerate.join(",")));
    }
    let value = per_class.iter().map(|(_, v)| v).sum::<f64>() / per_class.len() as f64;
    Ok(MpaucReport {
        value,
        per_class,
        degenerate,
    })
}
