use std::collections::BTreeMap;

use super::Event;
use crate::error::{Error, Result};

/// Per-(clip, segment) rows of per-class values: scores, soft labels or 0/1 labels.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SegmentTable {
    pub classes: Vec<String>,
    pub rows: BTreeMap<(String, usize), Vec<f64>>,
}

impl SegmentTable {
    pub fn new(classes: Vec<String>) -> Self {
        SegmentTable {
            classes,
            rows: BTreeMap::new(),
        }
    }

    pub fn class_index(&self, class: &str) -> Option<usize> {
        self.classes.iter().position(|c| c == class)
    }

    pub fn get(&self, clip: &str, segment: usize, class: &str) -> Option<f64> {
        let k = self.class_index(class)?;
        self.rows.get(&(clip.to_string(), segment)).map(|r| r[k])
    }
}

/// Number of segments covering `duration`, the last one possibly partial.
pub fn num_segments(duration: f64, segment_s: f64) -> usize {
    let n = (duration / segment_s).ceil();
    // tolerate float noise such as 10.000000001 / 1.0
    let n = if (n - 1.0) * segment_s >= duration - 1e-9 {
        n - 1.0
    } else {
        n
    };
    n.max(1.0) as usize
}

/// Binary segment labels from hard events: 1 where the class overlaps the segment.
pub fn segmentize_events(
    events: &[Event],
    clip_durations: &BTreeMap<String, f64>,
    classes: &[String],
    segment_s: f64,
) -> Result<SegmentTable> {
    if !(segment_s > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "segment length must be positive, got {segment_s}"
        )));
    }
    let mut table = SegmentTable::new(classes.to_vec());
    for (clip, &dur) in clip_durations {
        for s in 0..num_segments(dur, segment_s) {
            table.rows.insert((clip.clone(), s), vec![0.0; classes.len()]);
        }
    }
    for e in events {
        let Some(k) = table.class_index(&e.class_name) else {
            continue;
        };
        let Some(&dur) = clip_durations.get(&e.clip_id) else {
            return Err(Error::InvalidParameter(format!(
                "no duration for clip '{}'",
                e.clip_id
            )));
        };
        let n = num_segments(dur, segment_s);
        for s in 0..n {
            let (lo, hi) = (s as f64 * segment_s, (s + 1) as f64 * segment_s);
            if e.onset_s < hi && e.offset_s > lo {
                table.rows.get_mut(&(e.clip_id.clone(), s)).expect("grid row")[k] = 1.0;
            }
        }
    }
    Ok(table)
}

/// Hard labels from soft ones: 1 iff value >= `threshold`.
pub fn binarize_soft(soft: &SegmentTable, threshold: f64) -> SegmentTable {
    SegmentTable {
        classes: soft.classes.clone(),
        rows: soft
            .rows
            .iter()
            .map(|(k, v)| {
                (
                    k.clone(),
                    v.iter()
                        .map(|&x| if x >= threshold { 1.0 } else { 0.0 })
                        .collect(),
                )
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn event_overlap_marks_segments() {
        let durs: BTreeMap<String, f64> = [("a".to_string(), 5.0)].into();
        let classes = vec!["dog".to_string(), "cat".to_string()];
        let t = segmentize_events(&[Event::new("a", "dog", 0.2, 2.5)], &durs, &classes, 1.0).unwrap();
        let dog: Vec<f64> = (0..5).map(|s| t.get("a", s, "dog").unwrap()).collect();
        assert_eq!(dog, vec![1.0, 1.0, 1.0, 0.0, 0.0]);
        assert!((0..5).all(|s| t.get("a", s, "cat") == Some(0.0)));
    }

    #[test]
    fn partial_final_segment_included() {
        assert_eq!(num_segments(10.0, 1.0), 10);
        assert_eq!(num_segments(10.5, 1.0), 11);
        assert_eq!(num_segments(0.3, 1.0), 1);
        assert_eq!(num_segments(3.0000000001, 1.0), 3);
    }

    #[test]
    fn soft_threshold_is_inclusive() {
        let mut soft = SegmentTable::new(vec!["car".into()]);
        soft.rows.insert(("a".into(), 0), vec![0.5]);
        soft.rows.insert(("a".into(), 1), vec![0.49]);
        let hard = binarize_soft(&soft, 0.5);
        assert_eq!(hard.get("a", 0, "car"), Some(1.0));
        assert_eq!(hard.get("a", 1, "car"), Some(0.0));
        assert_eq!(binarize_soft(&hard, 0.5), hard);
    }

    #[test]
    fn event_for_unknown_clip_is_error() {
        let durs: BTreeMap<String, f64> = BTreeMap::new();
        let r = segmentize_events(&[Event::new("zz", "dog", 0.0, 1.0)], &durs, &["dog".into()], 1.0);
        assert!(r.is_err());
    }
}
