use std::collections::BTreeMap;

use freqdg::dataio::{
    read_durations, read_events, read_scores, read_segment_table, write_durations, write_events,
    write_scores, write_sebbs, write_segment_table,
};
use freqdg::metrics::{Event, SegmentTable};
use freqdg::sebb::{ScoreTrack, Sebb};
use freqdg::{make_batch, Batch, DomainTag, Error, FeatureMap};
use proptest::prelude::*;

fn arb_event() -> impl Strategy<Value = Event> {
    (
        "[a-z]{1,6}",
        prop::sample::select(vec!["dog", "speech", "dishes"]),
        0.0f64..100.0,
        0.001f64..20.0,
    )
        .prop_map(|(clip, class, on, len)| Event::new(&clip, class, on, on + len))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn events_round_trip(events in prop::collection::vec(arb_event(), 0..20)) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.tsv");
        write_events(&events, &path).unwrap();
        let back: Vec<Event> = read_events(&path).unwrap().into_iter().map(|r| r.event).collect();
        prop_assert_eq!(back.len(), events.len());
        for e in &events {
            prop_assert!(back.iter().any(|b| b.clip_id == e.clip_id
                && b.class_name == e.class_name
                && (b.onset_s - e.onset_s).abs() <= 5e-7
                && (b.offset_s - e.offset_s).abs() <= 5e-7));
        }
        // writing what was read is a fixed point
        let again = dir.path().join("f.tsv");
        write_events(&back, &again).unwrap();
        prop_assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&again).unwrap());
    }

    #[test]
    fn scores_round_trip(
        frames in 1usize..12,
        clips in 1usize..4,
        seed in prop::collection::vec(0.0f64..=1.0, 3 * 12 * 4),
    ) {
        let classes = vec!["a".to_string(), "b".to_string(), "c".to_string()];
        let tracks: Vec<ScoreTrack> = (0..clips)
            .map(|c| {
                let rows = (0..3).map(|k| (0..frames).map(|t| seed[(c * 3 + k) * 12 + t]).collect()).collect();
                ScoreTrack::new(format!("clip{c}"), classes.clone(), 0.064, rows).unwrap()
            })
            .collect();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        write_scores(&tracks, &path).unwrap();
        let back = read_scores(&path).unwrap();
        prop_assert_eq!(back.len(), tracks.len());
        for (a, b) in tracks.iter().zip(&back) {
            prop_assert_eq!(&a.clip_id, &b.clip_id);
            prop_assert_eq!(a.hop_seconds, b.hop_seconds);
            for (ra, rb) in a.scores.iter().zip(&b.scores) {
                for (x, y) in ra.iter().zip(rb) {
                    prop_assert!((x - y).abs() <= 1e-6);
                }
            }
        }
    }
}

#[test]
fn durations_and_segment_tables_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = BTreeMap::from([("x".to_string(), 10.0), ("y".to_string(), 3.25)]);
    let p = dir.path().join("d.tsv");
    write_durations(&d, &p).unwrap();
    assert_eq!(read_durations(&p).unwrap(), d);

    let mut t = SegmentTable::new(vec!["dog".into(), "speech".into()]);
    t.rows.insert(("x".into(), 0), vec![0.25, 1.0]);
    t.rows.insert(("x".into(), 1), vec![0.0, 0.125]);
    t.rows.insert(("y".into(), 0), vec![0.5, 0.75]);
    let p = dir.path().join("seg.csv");
    write_segment_table(&t, &p).unwrap();
    assert_eq!(read_segment_table(&p).unwrap(), t);
}

#[test]
fn sebbs_keep_confidence_column() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("sebbs.tsv");
    let s = vec![
        Sebb {
            clip_id: "b".into(),
            class_name: "dog".into(),
            onset_s: 1.0,
            offset_s: 2.5,
            confidence: 0.75,
        },
        Sebb {
            clip_id: "a".into(),
            class_name: "dog".into(),
            onset_s: 0.5,
            offset_s: 1.0,
            confidence: 0.125,
        },
    ];
    write_sebbs(&s, &p).unwrap();
    let text = std::fs::read_to_string(&p).unwrap();
    assert_eq!(
        text,
        "filename\tonset\toffset\tevent_label\tconfidence\na\t0.5\t1\tdog\t0.125\nb\t1\t2.5\tdog\t0.75\n"
    );
    let back = read_events(&p).unwrap();
    assert_eq!(back[1].confidence, Some(0.75));
}

#[test]
fn readers_report_line_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.tsv");
    std::fs::write(
        &p,
        "filename\tonset\toffset\tevent_label\na\t0\t1\tdog\na\tzero\t1\tdog\n",
    )
    .unwrap();
    match read_events(&p) {
        Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
        other => panic!("{other:?}"),
    }
    let p = dir.path().join("gap.csv");
    std::fs::write(&p, "# hop_seconds=0.1\nclip_id,frame,dog\na,0,0.5\na,2,0.5\n").unwrap();
    match read_scores(&p) {
        Err(Error::NonContiguousFrames { line, .. }) => assert_eq!(line, 4),
        other => panic!("{other:?}"),
    }
}

#[test]
fn feature_batch_round_trip() {
    let maps = vec![
        FeatureMap::from_fn(1, 3, 4, |_, f, t| (f * 10 + t) as f32 - 7.5).unwrap(),
        FeatureMap::from_fn(1, 3, 4, |_, f, t| (f as f32).sin() * t as f32).unwrap(),
    ];
    let batch = make_batch(maps, vec![DomainTag::Maestro, DomainTag::Desed]).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("b.fmt");
    batch.write_fmt(&p).unwrap();
    assert_eq!(Batch::read_fmt(&p).unwrap(), batch);
}
