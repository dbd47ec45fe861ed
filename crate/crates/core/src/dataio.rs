//! Text file formats shared by the pipelines.
//!
//! | file            | layout                                                        |
//! |-----------------|---------------------------------------------------------------|
//! | events (TSV)    | `filename onset offset event_label [confidence]`, header row  |
//! | durations (TSV) | `filename duration`, header row                               |
//! | scores (CSV)    | `# hop_seconds=<h>` line, then `clip_id,frame,<classes...>`   |
//! | segments (CSV)  | `clip_id,segment,<classes...>`                                |
//! | class map       | `source<TAB>target` lines, `#` comments                       |
//!
//! Everything is UTF-8 with LF line endings. Readers reject malformed input
//! with the offending line number.

use std::collections::{BTreeMap, HashMap};
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::metrics::{AnnotationSet, Event, SegmentTable};
use crate::sebb::{ScoreTrack, Sebb};

const EVENTS_HEADER: &str = "filename\tonset\toffset\tevent_label";
const DURATIONS_HEADER: &str = "filename\tduration";

/// Fixed 6-decimal rendering with trailing zeros trimmed.
pub fn fmt_num(v: f64) -> String {
    let s = format!("{v:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path)?;
    Ok(text
        .lines()
        .map(|l| l.trim_end_matches('\r').to_string())
        .collect())
}

fn parse_f64(path: &Path, line: usize, field: &str, what: &str) -> Result<f64> {
    let v: f64 = field
        .trim()
        .parse()
        .map_err(|_| Error::parse(path, line, format!("bad {what} '{field}'")))?;
    if !v.is_finite() {
        return Err(Error::parse(path, line, format!("non-finite {what}")));
    }
    Ok(v)
}

/// One row of an events file; `confidence` is present when the file has a fifth column.
#[derive(Debug, Clone, PartialEq)]
pub struct EventRecord {
    pub event: Event,
    pub confidence: Option<f64>,
}

pub fn read_events(path: &Path) -> Result<Vec<EventRecord>> {
    let lines = read_lines(path)?;
    let header = lines
        .first()
        .ok_or_else(|| Error::parse(path, 1, "missing header"))?;
    let cols: Vec<&str> = header.split('\t').collect();
    let with_conf = match cols.as_slice() {
        ["filename", "onset", "offset", "event_label"] => false,
        ["filename", "onset", "offset", "event_label", "confidence"] => true,
        _ => {
            return Err(Error::parse(
                path,
                1,
                format!("expected header '{EVENTS_HEADER}[\\tconfidence]'"),
            ))
        }
    };
    let mut out = Vec::new();
    for (i, line) in lines.iter().enumerate().skip(1) {
        let lineno = i + 1;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != cols.len() {
            return Err(Error::parse(
                path,
                lineno,
                format!("expected {} fields, got {}", cols.len(), fields.len()),
            ));
        }
        let onset = parse_f64(path, lineno, fields[1], "onset")?;
        let offset = parse_f64(path, lineno, fields[2], "offset")?;
        if offset <= onset || onset < 0.0 {
            return Err(Error::InvalidInterval {
                path: path.to_path_buf(),
                line: lineno,
                onset,
                offset,
            });
        }
        if fields[0].is_empty() || fields[3].is_empty() {
            return Err(Error::parse(path, lineno, "empty filename or label"));
        }
        let confidence = if with_conf {
            let c = parse_f64(path, lineno, fields[4], "confidence")?;
            if !(0.0..=1.0).contains(&c) {
                return Err(Error::ScoreOutOfRange {
                    path: path.to_path_buf(),
                    line: lineno,
                    value: c,
                });
            }
            Some(c)
        } else {
            None
        };
        out.push(EventRecord {
            event: Event::new(fields[0], fields[3], onset, offset),
            confidence,
        });
    }
    Ok(out)
}

/// Hard ground-truth events. Durations are read separately with [`read_durations`].
pub fn read_annotations(path: &Path) -> Result<AnnotationSet> {
    let events = read_events(path)?.into_iter().map(|r| r.event).collect();
    Ok(AnnotationSet::new(events, BTreeMap::new()))
}

fn sorted_events(events: &[Event]) -> Vec<&Event> {
    let mut v: Vec<&Event> = events.iter().collect();
    v.sort_by(|a, b| {
        a.clip_id
            .cmp(&b.clip_id)
            .then(a.onset_s.total_cmp(&b.onset_s))
            .then(a.class_name.cmp(&b.class_name))
            .then(a.offset_s.total_cmp(&b.offset_s))
    });
    v
}

/// Writes events sorted by (clip, onset, class).
pub fn write_events(events: &[Event], path: &Path) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "{EVENTS_HEADER}")?;
    for e in sorted_events(events) {
        writeln!(
            w,
            "{}\t{}\t{}\t{}",
            e.clip_id,
            fmt_num(e.onset_s),
            fmt_num(e.offset_s),
            e.class_name
        )?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_annotations(set: &AnnotationSet, path: &Path) -> Result<()> {
    write_events(&set.events, path)
}

/// Writes boxes with a trailing `confidence` column.
pub fn write_sebbs(sebbs: &[Sebb], path: &Path) -> Result<()> {
    let mut sorted = sebbs.to_vec();
    crate::sebb::sort_sebbs(&mut sorted);
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "{EVENTS_HEADER}\tconfidence")?;
    for s in &sorted {
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}",
            s.clip_id,
            fmt_num(s.onset_s),
            fmt_num(s.offset_s),
            s.class_name,
            fmt_num(s.confidence)
        )?;
    }
    w.flush()?;
    Ok(())
}

/// Reads `filename<TAB>duration` rows; the header row is optional.
pub fn read_durations(path: &Path) -> Result<BTreeMap<String, f64>> {
    let mut out = BTreeMap::new();
    for (i, line) in read_lines(path)?.iter().enumerate() {
        let lineno = i + 1;
        if line.is_empty() || (i == 0 && line == DURATIONS_HEADER) {
            continue;
        }
        let Some((clip, dur)) = line.split_once('\t') else {
            return Err(Error::parse(path, lineno, "expected 'filename<TAB>duration'"));
        };
        let d = parse_f64(path, lineno, dur, "duration")?;
        if d <= 0.0 {
            return Err(Error::parse(
                path,
                lineno,
                format!("duration must be positive, got {d}"),
            ));
        }
        if out.insert(clip.to_string(), d).is_some() {
            return Err(Error::parse(path, lineno, format!("duplicate clip '{clip}'")));
        }
    }
    Ok(out)
}

pub fn write_durations(durations: &BTreeMap<String, f64>, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "{DURATIONS_HEADER}")?;
    for (clip, d) in durations {
        writeln!(w, "{clip}\t{}", fmt_num(*d))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads frame-level scores; one track per clip, in order of first appearance.
pub fn read_scores(path: &Path) -> Result<Vec<ScoreTrack>> {
    let lines = read_lines(path)?;
    let mut hop: Option<f64> = None;
    let mut classes: Option<Vec<String>> = None;
    let mut order: Vec<String> = Vec::new();
    let mut rows: HashMap<String, Vec<Vec<f64>>> = HashMap::new();

    for (i, line) in lines.iter().enumerate() {
        let lineno = i + 1;
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some((k, v)) = comment.trim().split_once('=') {
                if k.trim() == "hop_seconds" {
                    let h = parse_f64(path, lineno, v, "hop_seconds")?;
                    if h <= 0.0 {
                        return Err(Error::parse(path, lineno, "hop_seconds must be positive"));
                    }
                    hop = Some(h);
                }
            }
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let Some(cls) = &classes else {
            if fields.len() < 3 || fields[0] != "clip_id" || fields[1] != "frame" {
                return Err(Error::parse(
                    path,
                    lineno,
                    "expected header 'clip_id,frame,<classes...>'",
                ));
            }
            classes = Some(fields[2..].iter().map(|s| s.to_string()).collect());
            continue;
        };
        if fields.len() != cls.len() + 2 {
            return Err(Error::parse(
                path,
                lineno,
                format!("expected {} fields, got {}", cls.len() + 2, fields.len()),
            ));
        }
        let clip = fields[0].to_string();
        let frame: usize = fields[1]
            .trim()
            .parse()
            .map_err(|_| Error::parse(path, lineno, format!("bad frame index '{}'", fields[1])))?;
        let values = fields[2..]
            .iter()
            .map(|f| parse_f64(path, lineno, f, "score"))
            .collect::<Result<Vec<_>>>()?;
        if let Some(&v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::ScoreOutOfRange {
                path: path.to_path_buf(),
                line: lineno,
                value: v,
            });
        }
        let frames = rows.entry(clip.clone()).or_insert_with(|| {
            order.push(clip.clone());
            Vec::new()
        });
        if frame != frames.len() {
            return Err(Error::NonContiguousFrames {
                path: path.to_path_buf(),
                line: lineno,
                clip,
                expected: frames.len(),
                got: frame,
            });
        }
        frames.push(values);
    }

    let classes = classes.ok_or_else(|| Error::parse(path, lines.len().max(1), "missing header"))?;
    let hop = hop.ok_or_else(|| Error::parse(path, 1, "missing '# hop_seconds=<value>' line"))?;
    order
        .into_iter()
        .map(|clip| {
            let frames = rows.remove(&clip).unwrap_or_default();
            let scores = (0..classes.len())
                .map(|k| frames.iter().map(|f| f[k]).collect())
                .collect();
            ScoreTrack::new(clip, classes.clone(), hop, scores)
        })
        .collect()
}

/// Writes tracks that share class names and hop size.
pub fn write_scores(tracks: &[ScoreTrack], path: &Path) -> Result<()> {
    let Some(first) = tracks.first() else {
        return Err(Error::InvalidParameter("no score tracks to write".into()));
    };
    for t in tracks {
        if t.class_names != first.class_names || t.hop_seconds != first.hop_seconds {
            return Err(Error::InvalidParameter(format!(
                "track '{}' differs in classes or hop size",
                t.clip_id
            )));
        }
    }
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "# hop_seconds={}", first.hop_seconds)?;
    writeln!(w, "clip_id,frame,{}", first.class_names.join(","))?;
    for t in tracks {
        for f in 0..t.frames() {
            write!(w, "{},{f}", t.clip_id)?;
            for row in &t.scores {
                write!(w, ",{}", fmt_num(row[f]))?;
            }
            writeln!(w)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a `clip_id,segment,<classes...>` table (segment scores or soft labels).
pub fn read_segment_table(path: &Path) -> Result<SegmentTable> {
    let lines = read_lines(path)?;
    let mut table: Option<SegmentTable> = None;
    for (i, line) in lines.iter().enumerate() {
        let lineno = i + 1;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let Some(t) = table.as_mut() else {
            if fields.len() < 3 || fields[0] != "clip_id" || fields[1] != "segment" {
                return Err(Error::parse(
                    path,
                    lineno,
                    "expected header 'clip_id,segment,<classes...>'",
                ));
            }
            table = Some(SegmentTable::new(
                fields[2..].iter().map(|s| s.to_string()).collect(),
            ));
            continue;
        };
        if fields.len() != t.classes.len() + 2 {
            return Err(Error::parse(
                path,
                lineno,
                format!("expected {} fields, got {}", t.classes.len() + 2, fields.len()),
            ));
        }
        let seg: usize = fields[1]
            .trim()
            .parse()
            .map_err(|_| Error::parse(path, lineno, format!("bad segment index '{}'", fields[1])))?;
        let values = fields[2..]
            .iter()
            .map(|f| parse_f64(path, lineno, f, "value"))
            .collect::<Result<Vec<_>>>()?;
        if let Some(&v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::ScoreOutOfRange {
                path: path.to_path_buf(),
                line: lineno,
                value: v,
            });
        }
        if t.rows.insert((fields[0].to_string(), seg), values).is_some() {
            return Err(Error::parse(
                path,
                lineno,
                format!("duplicate segment {} of '{}'", seg, fields[0]),
            ));
        }
    }
    table.ok_or_else(|| Error::parse(path, 1, "missing header"))
}

pub fn write_segment_table(table: &SegmentTable, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "clip_id,segment,{}", table.classes.join(","))?;
    for ((clip, seg), row) in &table.rows {
        write!(w, "{clip},{seg}")?;
        for v in row {
            write!(w, ",{}", fmt_num(*v))?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

/// Source class to target super-class, e.g. MAESTRO labels onto DESED ones.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ClassMap {
    pairs: BTreeMap<String, String>,
}

impl ClassMap {
    pub fn new(pairs: impl IntoIterator<Item = (String, String)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (src, dst) in pairs {
            if let Some(prev) = map.insert(src.clone(), dst.clone()) {
                if prev != dst {
                    return Err(Error::InvalidParameter(format!(
                        "class '{src}' mapped to both '{prev}' and '{dst}'"
                    )));
                }
            }
        }
        let cm = ClassMap { pairs: map };
        cm.check_acyclic()?;
        Ok(cm)
    }

    /// The mapped pairs known for DESED/MAESTRO: speech, dishes and dog.
    pub fn desed_maestro() -> Self {
        let pairs = [
            ("people_talking", "speech"),
            ("children_voices", "speech"),
            ("announcement", "speech"),
            ("cutlery_and_dishes", "dishes"),
            ("dog_bark", "dog"),
        ];
        ClassMap::new(pairs.iter().map(|(a, b)| (a.to_string(), b.to_string())))
            .expect("default map is acyclic")
    }

    fn check_acyclic(&self) -> Result<()> {
        for start in self.pairs.keys() {
            let mut cur = start;
            for _ in 0..=self.pairs.len() {
                match self.pairs.get(cur) {
                    Some(next) if next == start => {
                        return Err(Error::InvalidParameter(format!(
                            "class map cycle through '{start}'"
                        )))
                    }
                    Some(next) => cur = next,
                    None => break,
                }
            }
        }
        Ok(())
    }

    pub fn map<'a>(&'a self, class: &'a str) -> &'a str {
        self.pairs.get(class).map_or(class, String::as_str)
    }

    pub fn pairs(&self) -> &BTreeMap<String, String> {
        &self.pairs
    }

    pub fn read(path: &Path) -> Result<Self> {
        let mut pairs = Vec::new();
        for (i, line) in read_lines(path)?.iter().enumerate() {
            let content = line.split('#').next().unwrap_or_default().trim();
            if content.is_empty() {
                continue;
            }
            let Some((src, dst)) = content.split_once('\t') else {
                return Err(Error::parse(path, i + 1, "expected 'source<TAB>target'"));
            };
            let (src, dst) = (src.trim(), dst.trim());
            if src.is_empty() || dst.is_empty() {
                return Err(Error::parse(path, i + 1, "empty class name"));
            }
            pairs.push((src.to_string(), dst.to_string()));
        }
        ClassMap::new(pairs).map_err(|e| Error::parse(path, 0, e.to_string()))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(std::fs::File::create(path)?);
        for (a, b) in &self.pairs {
            writeln!(w, "{a}\t{b}")?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Relabels events; unmapped classes pass through.
pub fn apply_class_map(events: &[Event], map: &ClassMap) -> Vec<Event> {
    events
        .iter()
        .map(|e| Event {
            class_name: map.map(&e.class_name).to_string(),
            ..e.clone()
        })
        .collect()
}

/// Relabels segment-table columns. Columns landing on the same target are
/// combined by their maximum.
pub fn apply_class_map_table(table: &SegmentTable, map: &ClassMap) -> SegmentTable {
    let mut classes: Vec<String> = Vec::new();
    let mut target_of = Vec::with_capacity(table.classes.len());
    for c in &table.classes {
        let t = map.map(c).to_string();
        let idx = classes.iter().position(|x| *x == t).unwrap_or_else(|| {
            classes.push(t);
            classes.len() - 1
        });
        target_of.push(idx);
    }
    let rows = table
        .rows
        .iter()
        .map(|(k, row)| {
            let mut out = vec![f64::NEG_INFINITY; classes.len()];
            for (j, &v) in row.iter().enumerate() {
                out[target_of[j]] = out[target_of[j]].max(v);
            }
            (k.clone(), out)
        })
        .collect();
    SegmentTable { classes, rows }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
        let p = dir.join(name);
        std::fs::write(&p, text).unwrap();
        p
    }

    #[test]
    fn parses_event_row() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            "t.tsv",
            "filename\tonset\toffset\tevent_label\na.wav\t1.0\t2.5\tdog\n",
        );
        let set = read_annotations(&p).unwrap();
        assert_eq!(set.events, vec![Event::new("a.wav", "dog", 1.0, 2.5)]);
    }

    #[test]
    fn invalid_interval_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            "t.tsv",
            "filename\tonset\toffset\tevent_label\na.wav\t1.0\t2.5\tdog\na.wav\t3.0\t3.0\tdog\n",
        );
        match read_annotations(&p).unwrap_err() {
            Error::InvalidInterval { line, .. } => assert_eq!(line, 3),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn malformed_event_rows() {
        let dir = tempfile::tempdir().unwrap();
        for (body, line) in [
            ("filename\tonset\n", 1),
            ("filename\tonset\toffset\tevent_label\na.wav\tx\t2\tdog\n", 2),
            ("filename\tonset\toffset\tevent_label\na.wav\t1\t2\n", 2),
        ] {
            let p = write(dir.path(), "t.tsv", body);
            match read_events(&p).unwrap_err() {
                Error::Parse { line: l, .. } => assert_eq!(l, line, "{body:?}"),
                e => panic!("unexpected {e}"),
            }
        }
    }

    #[test]
    fn write_events_sorted_with_header() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.tsv");
        write_events(&[], &p).unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), format!("{EVENTS_HEADER}\n"));

        let evs = vec![
            Event::new("b", "dog", 0.0, 1.0),
            Event::new("a", "dog", 2.0, 3.0),
            Event::new("a", "cat", 2.0, 2.5),
        ];
        write_events(&evs, &p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[1], "a\t2\t2.5\tcat");
        assert_eq!(lines[3], "b\t0\t1\tdog");
    }

    #[test]
    fn scores_shape_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let mut text = String::from("# hop_seconds=0.064\nclip_id,frame,a,b,c\n");
        for clip in ["x", "y"] {
            for f in 0..5 {
                text.push_str(&format!("{clip},{f},0.1,0.2,0.3\n"));
            }
        }
        let p = write(dir.path(), "s.csv", &text);
        let tracks = read_scores(&p).unwrap();
        assert_eq!(tracks.len(), 2);
        assert_eq!((tracks[0].scores.len(), tracks[0].frames()), (3, 5));
        assert_eq!(tracks[1].clip_id, "y");

        let p = write(
            dir.path(),
            "bad.csv",
            "# hop_seconds=0.1\nclip_id,frame,a\nx,0,1.2\n",
        );
        assert!(matches!(
            read_scores(&p).unwrap_err(),
            Error::ScoreOutOfRange { line: 3, .. }
        ));

        let p = write(
            dir.path(),
            "gap.csv",
            "# hop_seconds=0.1\nclip_id,frame,a\nx,0,0.1\nx,2,0.1\n",
        );
        assert!(matches!(
            read_scores(&p).unwrap_err(),
            Error::NonContiguousFrames {
                line: 4,
                expected: 1,
                got: 2,
                ..
            }
        ));

        let p = write(dir.path(), "nohop.csv", "clip_id,frame,a\nx,0,0.1\n");
        assert!(matches!(read_scores(&p).unwrap_err(), Error::Parse { .. }));
    }

    #[test]
    fn durations_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.tsv");
        let d: BTreeMap<String, f64> = [("a.wav".to_string(), 10.0), ("b.wav".to_string(), 7.25)].into();
        write_durations(&d, &p).unwrap();
        assert_eq!(read_durations(&p).unwrap(), d);
        let bad = write(dir.path(), "bad.tsv", "a.wav\t-1\n");
        assert!(read_durations(&bad).is_err());
    }

    #[test]
    fn class_map_examples() {
        let m = ClassMap::desed_maestro();
        assert_eq!(m.map("dog_bark"), "dog");
        assert_eq!(m.map("cutlery_and_dishes"), "dishes");
        assert_eq!(m.map("people_talking"), "speech");
        assert_eq!(m.map("car"), "car");
        let evs = apply_class_map(&[Event::new("a", "dog_bark", 0.0, 1.0)], &m);
        assert_eq!(evs[0].class_name, "dog");
    }

    #[test]
    fn class_map_file_and_cycles() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(
            dir.path(),
            "m.tsv",
            "# comment\ndog_bark\tdog\n\ncutlery_and_dishes\tdishes # trailing\n",
        );
        let m = ClassMap::read(&p).unwrap();
        assert_eq!(m.pairs().len(), 2);
        let p = write(dir.path(), "cyc.tsv", "a\tb\nb\ta\n");
        assert!(ClassMap::read(&p).is_err());
        assert!(ClassMap::new([("a".into(), "b".into()), ("a".into(), "c".into())]).is_err());
        let p = write(dir.path(), "bad.tsv", "a b\n");
        assert!(matches!(
            ClassMap::read(&p).unwrap_err(),
            Error::Parse { line: 1, .. }
        ));
    }

    #[test]
    fn class_map_on_tables_merges_columns() {
        let mut t = SegmentTable::new(vec![
            "people_talking".into(),
            "children_voices".into(),
            "car".into(),
        ]);
        t.rows.insert(("c".into(), 0), vec![0.2, 0.7, 0.1]);
        let m = apply_class_map_table(&t, &ClassMap::desed_maestro());
        assert_eq!(m.classes, vec!["speech".to_string(), "car".to_string()]);
        assert_eq!(m.rows[&("c".to_string(), 0)], vec![0.7, 0.1]);
    }

    #[test]
    fn fmt_num_trims() {
        assert_eq!(fmt_num(1.0), "1");
        assert_eq!(fmt_num(2.5), "2.5");
        assert_eq!(fmt_num(0.1234567), "0.123457");
        assert_eq!(fmt_num(-0.0000001), "0");
    }
}
