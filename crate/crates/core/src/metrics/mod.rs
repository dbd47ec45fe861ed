//! Event-based PSDS and segment-based macro partial AUC.

mod pauc;
mod psds;
mod segments;

use std::collections::BTreeMap;

pub use pauc::{class_partial_auc, mpauc, roc_curve, MpaucReport, PaucStandardization};
pub use psds::{
    intersection_match, psd_roc, psd_roc_from_scored, psds, MatchCounts, OperatingPoint, PsdRoc, PsdsConfig,
};
pub use segments::{binarize_soft, num_segments, segmentize_events, SegmentTable};

/// A hard detection or ground-truth event, times in seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub clip_id: String,
    pub class_name: String,
    pub onset_s: f64,
    pub offset_s: f64,
}

impl Event {
    pub fn new(clip_id: &str, class_name: &str, onset_s: f64, offset_s: f64) -> Self {
        Event {
            clip_id: clip_id.to_string(),
            class_name: class_name.to_string(),
            onset_s,
            offset_s,
        }
    }

    pub fn duration(&self) -> f64 {
        self.offset_s - self.onset_s
    }
}

/// Ground truth: hard events, clip durations and optional 1-s soft labels.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AnnotationSet {
    pub events: Vec<Event>,
    pub clip_durations: BTreeMap<String, f64>,
    pub soft_labels: Option<SegmentTable>,
}

impl AnnotationSet {
    pub fn new(events: Vec<Event>, clip_durations: BTreeMap<String, f64>) -> Self {
        AnnotationSet {
            events,
            clip_durations,
            soft_labels: None,
        }
    }

    pub fn total_duration(&self) -> f64 {
        self.clip_durations.values().sum()
    }

    /// Classes present in the hard events, sorted.
    pub fn classes(&self) -> Vec<String> {
        let mut c: Vec<String> = self.events.iter().map(|e| e.class_name.clone()).collect();
        c.sort();
        c.dedup();
        c
    }
}

/// Sum of the two challenge metrics.
pub fn joint_score(psds_value: f64, mpauc_value: f64) -> f64 {
    psds_value + mpauc_value
}
