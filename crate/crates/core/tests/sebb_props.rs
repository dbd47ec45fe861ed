use std::collections::BTreeMap;

use freqdg::metrics::{AnnotationSet, Event, PsdsConfig};
use freqdg::sebb::{
    csebb, delta_scores, detect_candidates, merge_gaps, threshold_events, tune_csebb, CsebbConfig, CsebbGrid,
    ScoreTrack, Thresholds,
};
use freqdg::RandomSource;

const HOP: f64 = 0.064;

fn track(rows: Vec<Vec<f64>>) -> ScoreTrack {
    let names = (0..rows.len()).map(|k| format!("c{k}")).collect();
    ScoreTrack::new("clip", names, HOP, rows).unwrap()
}

fn plateau(len: usize, on: usize, off: usize, level: f64) -> Vec<f64> {
    (0..len)
        .map(|t| if (on..off).contains(&t) { level } else { 0.0 })
        .collect()
}

fn frame(s: f64) -> i64 {
    (s / HOP).round() as i64
}

#[test]
fn single_plateau_recovered() {
    let out = csebb(&track(vec![plateau(200, 60, 120, 0.9)]), &CsebbConfig::default()).unwrap();
    assert_eq!(out.len(), 1);
    assert!((frame(out[0].onset_s) - 60).abs() <= 1);
    assert!((frame(out[0].offset_s) - 120).abs() <= 1);
    assert!((out[0].confidence - 0.9).abs() < 1e-6);
}

#[test]
fn plateau_at_clip_edges() {
    let cfg = CsebbConfig::default();
    let out = csebb(&track(vec![plateau(150, 0, 40, 0.8)]), &cfg).unwrap();
    assert_eq!(out.len(), 1);
    assert_eq!(frame(out[0].onset_s), 0);
    assert!((frame(out[0].offset_s) - 40).abs() <= 1);

    let out = csebb(&track(vec![plateau(150, 100, 150, 0.8)]), &cfg).unwrap();
    assert_eq!(out.len(), 1);
    assert!((frame(out[0].onset_s) - 100).abs() <= 1);
    assert_eq!(frame(out[0].offset_s), 150);
}

#[test]
fn reversed_plateau_gives_mirrored_boundaries() {
    let cfg = CsebbConfig::default();
    let mut rng = RandomSource::new(41);
    for _ in 0..30 {
        let len = 300;
        let on = 30 + rng.below(100);
        let off = on + 20 + rng.below(100);
        let row = plateau(len, on, off, 0.3 + 0.6 * rng.uniform());
        let rev: Vec<f64> = row.iter().rev().copied().collect();
        let a = csebb(&track(vec![row]), &cfg).unwrap();
        let b = csebb(&track(vec![rev]), &cfg).unwrap();
        assert_eq!((a.len(), b.len()), (1, 1));
        assert!((frame(a[0].onset_s) - (len as i64 - frame(b[0].offset_s))).abs() <= 1);
        assert!((frame(a[0].offset_s) - (len as i64 - frame(b[0].onset_s))).abs() <= 1);
    }
}

#[test]
fn two_separated_plateaus_stay_separate() {
    let mut row = plateau(300, 40, 90, 0.9);
    for v in &mut row[180..240] {
        *v = 0.7;
    }
    let out = csebb(&track(vec![row]), &CsebbConfig::default()).unwrap();
    assert_eq!(out.len(), 2);
    assert!((out[0].confidence - 0.9).abs() < 1e-6);
    assert!((out[1].confidence - 0.7).abs() < 1e-6);
}

#[test]
fn delta_of_constant_is_zero() {
    for len in [1usize, 5, 50] {
        let d = delta_scores(&vec![0.42; len], 7).unwrap();
        assert_eq!(d.len(), len);
        assert!(d.iter().all(|v| v.abs() < 1e-12));
    }
    assert!(delta_scores(&[0.0; 4], 4).is_err());
}

fn random_track(rng: &mut RandomSource, classes: usize, frames: usize) -> ScoreTrack {
    let rows = (0..classes)
        .map(|_| {
            let mut row = Vec::with_capacity(frames);
            let mut level: f64 = 0.0;
            for _ in 0..frames {
                if rng.bernoulli(0.03) {
                    level = rng.uniform();
                }
                row.push((level + 0.05 * (rng.uniform() - 0.5)).clamp(0.0, 1.0));
            }
            row
        })
        .collect();
    track(rows)
}

#[test]
fn threshold_monotonicity_over_random_tracks() {
    let mut rng = RandomSource::new(42);
    let cfg = CsebbConfig {
        filter_len: 5,
        ..Default::default()
    };
    for _ in 0..100 {
        let t = random_track(&mut rng, 2, 250);
        let sebbs = csebb(&t, &cfg).unwrap();
        let (lo, hi) = {
            let a = rng.uniform();
            let b = rng.uniform();
            (a.min(b), a.max(b))
        };
        let low = threshold_events(&sebbs, &Thresholds::uniform(lo)).unwrap();
        let high = threshold_events(&sebbs, &Thresholds::uniform(hi)).unwrap();
        assert!(high.len() <= low.len());
        for e in &high {
            // same box, untouched boundaries
            assert!(low.contains(e));
            assert!(sebbs.contains(e));
        }
    }
}

#[test]
fn merge_invariants_on_random_tracks() {
    let mut rng = RandomSource::new(43);
    for _ in 0..100 {
        let t = random_track(&mut rng, 1, 300);
        let cfg = CsebbConfig {
            filter_len: 3 + 2 * rng.below(4),
            merge_threshold_abs: 0.05 + 0.3 * rng.uniform(),
            merge_threshold_rel: 1.0 + 2.0 * rng.uniform(),
            boundary_threshold: 0.05 + 0.2 * rng.uniform(),
        };
        let cands = detect_candidates(&t, &cfg).unwrap().remove(0);
        let merged = merge_gaps(&cands, &t.scores[0], HOP, &cfg).unwrap();
        assert!(merged.len() <= cands.len());
        for w in merged.windows(2) {
            assert!(w[0].offset_s <= w[1].onset_s);
        }
        for c in &cands {
            assert!(merged
                .iter()
                .any(|m| m.onset_s <= c.onset_s && c.offset_s <= m.offset_s));
        }
        for m in &merged {
            assert!((0.0..=1.0).contains(&m.confidence));
            assert!(m.onset_s < m.offset_s);
        }
        // a second pass finds nothing left to merge
        assert_eq!(merge_gaps(&merged, &t.scores[0], HOP, &cfg).unwrap(), merged);
    }
}

#[test]
fn shallow_dip_is_merged_deep_gap_is_not() {
    let cfg = CsebbConfig {
        filter_len: 3,
        ..Default::default()
    };
    let mut row = plateau(200, 20, 60, 0.9);
    for v in &mut row[60..64] {
        *v = 0.7;
    }
    for v in &mut row[64..110] {
        *v = 0.9;
    }
    let out = csebb(&track(vec![row.clone()]), &cfg).unwrap();
    assert_eq!(out.len(), 1, "{out:?}");

    for v in &mut row[60..64] {
        *v = 0.0;
    }
    let out = csebb(&track(vec![row]), &cfg).unwrap();
    assert_eq!(out.len(), 2, "{out:?}");
}

fn ideal_fixture(rng: &mut RandomSource, clips: usize) -> (Vec<ScoreTrack>, AnnotationSet) {
    let frames = 160;
    let mut tracks = Vec::new();
    let mut events = Vec::new();
    let mut durations = BTreeMap::new();
    for i in 0..clips {
        let id = format!("clip{i}");
        let on = 20 + rng.below(40);
        let off = on + 20 + rng.below(60);
        let row = plateau(frames, on, off, 0.95);
        events.push(Event::new(&id, "speech", on as f64 * HOP, off as f64 * HOP));
        durations.insert(id.clone(), frames as f64 * HOP);
        tracks.push(ScoreTrack::new(id, vec!["speech".into()], HOP, vec![row]).unwrap());
    }
    (tracks, AnnotationSet::new(events, durations))
}

#[test]
fn tuning_on_ideal_tracks_reaches_perfect_score() {
    let (tracks, truth) = ideal_fixture(&mut RandomSource::new(44), 6);
    let grid = CsebbGrid {
        filter_len: vec![3, 11, 21],
        merge_threshold_abs: vec![0.15],
        merge_threshold_rel: vec![1.5, 2.0],
        boundary_threshold: vec![0.1, 0.3],
    };
    let (best, score) = tune_csebb(&tracks, &truth, &grid, &PsdsConfig::default()).unwrap();
    assert_eq!(score, 1.0);
    // earliest configuration wins ties
    assert_eq!(best, grid.configs()[0]);
    let again = tune_csebb(&tracks, &truth, &grid, &PsdsConfig::default()).unwrap();
    assert_eq!(again, (best, score));
}

#[test]
fn tuning_singleton_grid_returns_it() {
    let (tracks, truth) = ideal_fixture(&mut RandomSource::new(45), 3);
    let cfg = CsebbConfig {
        filter_len: 9,
        merge_threshold_abs: 0.2,
        merge_threshold_rel: 1.1,
        boundary_threshold: 0.2,
    };
    let (best, _) = tune_csebb(&tracks, &truth, &CsebbGrid::single(cfg), &PsdsConfig::default()).unwrap();
    assert_eq!(best, cfg);
    let empty = CsebbGrid {
        filter_len: vec![],
        ..CsebbGrid::single(cfg)
    };
    assert!(tune_csebb(&tracks, &truth, &empty, &PsdsConfig::default()).is_err());
}
