use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};

use freqdg::dataio::{
    apply_class_map, apply_class_map_table, read_durations, read_events, read_scores, read_segment_table,
    write_events, write_sebbs, ClassMap,
};
use freqdg::frontend::{read_wav, resample_to_mono_16k, MelConfig, MelFilterbank};
use freqdg::metrics::{mpauc, psd_roc_from_scored, psds, AnnotationSet, PaucStandardization, PsdsConfig};
use freqdg::mixstyle::{freq_mixstyle_with, MixStyleConfig};
use freqdg::sebb::{csebb, sort_sebbs, threshold_events, tune_csebb, CsebbConfig, CsebbGrid, Thresholds};
use freqdg::stats::{export_stats, StatsAxis};
use freqdg::{beta_sample, make_batch, Batch, DomainTag, RandomSource};

use crate::{
    AugmentArgs, Axis, Cli, Command, Domain, EvaluateArgs, FeaturesArgs, PostprocessArgs, PsdsArgs,
    Standardization, StatsArgs, TuneArgs,
};

#[derive(Debug)]
pub enum Failure {
    /// Bad flags or configuration files: exit status 1.
    Usage(String),
    /// Unreadable or inconsistent data: exit status 2.
    Data(freqdg::Error),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "{m}"),
            Failure::Data(e) => write!(f, "{e}"),
        }
    }
}

impl From<freqdg::Error> for Failure {
    fn from(e: freqdg::Error) -> Self {
        Failure::Data(e)
    }
}

type Outcome = std::result::Result<String, Failure>;

fn usage(e: impl fmt::Display) -> Failure {
    Failure::Usage(e.to_string())
}

fn data_err(msg: String) -> Failure {
    Failure::Data(freqdg::Error::InvalidParameter(msg))
}

fn read_config_file(path: &Path) -> std::result::Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))
}

pub fn run(cli: &Cli) -> Outcome {
    match &cli.command {
        Command::Features(a) => features(a),
        Command::Stats(a) => stats(a),
        Command::Augment(a) => augment(a, cli.seed),
        Command::Postprocess(a) => postprocess(a),
        Command::TuneSebb(a) => tune(a),
        Command::Evaluate(a) => evaluate(a),
    }
}

fn wav_files(input: &Path) -> std::result::Result<Vec<PathBuf>, Failure> {
    if input.is_file() {
        return Ok(vec![input.to_path_buf()]);
    }
    let mut files: Vec<PathBuf> = std::fs::read_dir(input)
        .map_err(freqdg::Error::from)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x.eq_ignore_ascii_case("wav")))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(data_err(format!("no .wav files in {}", input.display())));
    }
    Ok(files)
}

fn features(a: &FeaturesArgs) -> Outcome {
    let cfg = MelConfig {
        n_mels: a.n_mels,
        pad_to_seconds: a.pad_seconds,
        ..MelConfig::default()
    };
    cfg.validate().map_err(usage)?;
    let fb = MelFilterbank::new(&cfg).map_err(usage)?;
    let tag = match a.domain {
        Domain::Desed => DomainTag::Desed,
        Domain::Maestro => DomainTag::Maestro,
    };

    let files = wav_files(&a.input)?;
    let mut maps = Vec::with_capacity(files.len());
    for path in &files {
        let clip = resample_to_mono_16k(&read_wav(path)?)?;
        maps.push(fb.log_mel(&clip)?);
        eprintln!("features: {}", path.display());
    }
    let batch = make_batch(maps, vec![tag; files.len()])?;
    batch.write_fmt(&a.out)?;
    let d = batch.dims();
    Ok(format!(
        "clips={}\nshape={}x{}x{}\n",
        batch.len(),
        d.channels,
        d.freqs,
        d.frames
    ))
}

fn stats(a: &StatsArgs) -> Outcome {
    let batch = Batch::read_fmt(&a.input)?;
    let axis = match a.axis {
        Axis::Freq => StatsAxis::Frequency,
        Axis::Channel => StatsAxis::Channel,
    };
    let rows = export_stats(&batch, axis, &a.out)?;
    Ok(format!("rows={rows}\n"))
}

fn augment(a: &AugmentArgs, seed: u64) -> Outcome {
    let cfg = MixStyleConfig {
        p: a.p,
        alpha: a.alpha,
        eps: a.eps,
    };
    cfg.validate().map_err(usage)?;
    let batch = Batch::read_fmt(&a.input)?;
    let size = if a.batch_size == 0 {
        batch.len()
    } else {
        a.batch_size
    };

    // each mini-batch draws from its own substream of the seed
    let root = RandomSource::new(seed);
    let mut items = Vec::with_capacity(batch.len());
    let (mut batches, mut restyled) = (0, 0);
    for (k, chunk) in batch.items().chunks(size).enumerate() {
        let mut rng = root.split(k as u64);
        let mini = Batch::from_items(chunk.to_vec())?;
        let (out, trace) = freq_mixstyle_with(&mini, &cfg, &mut rng, |r| beta_sample(r, cfg.alpha))?;
        batches += 1;
        restyled += usize::from(trace.is_some());
        items.extend(out.into_items());
    }
    Batch::from_items(items)?.write_fmt(&a.out)?;
    Ok(format!(
        "items={}\nbatches={batches}\nrestyled_batches={restyled}\n",
        batch.len()
    ))
}

fn load_csebb_config(path: Option<&Path>) -> std::result::Result<CsebbConfig, Failure> {
    match path {
        Some(p) => CsebbConfig::from_toml(&read_config_file(p)?).map_err(usage),
        None => Ok(CsebbConfig::default()),
    }
}

fn postprocess(a: &PostprocessArgs) -> Outcome {
    let cfg = load_csebb_config(a.config.as_deref())?;
    if let Some(t) = a.threshold {
        if !(0.0..=1.0).contains(&t) {
            return Err(usage(format!("--threshold must be in [0, 1], got {t}")));
        }
    }
    eprintln!("postprocess: cSEBB {cfg:?}");
    let tracks = read_scores(&a.scores)?;
    let mut sebbs = Vec::new();
    for t in &tracks {
        sebbs.extend(csebb(t, &cfg)?);
    }
    sort_sebbs(&mut sebbs);
    let written = match a.threshold {
        Some(t) => {
            let kept = threshold_events(&sebbs, &Thresholds::uniform(t))?;
            let events: Vec<_> = kept.iter().map(|s| s.to_event()).collect();
            write_events(&events, &a.out)?;
            events.len()
        }
        None => {
            write_sebbs(&sebbs, &a.out)?;
            sebbs.len()
        }
    };
    Ok(format!("clips={}\nevents={written}\n", tracks.len()))
}

fn psds_config(a: &PsdsArgs) -> std::result::Result<PsdsConfig, Failure> {
    let cfg = PsdsConfig {
        rho_dtc: a.rho_dtc,
        rho_gtc: a.rho_gtc,
        alpha_st: a.alpha_st,
        e_max: a.e_max,
        ..PsdsConfig::default()
    };
    cfg.validate().map_err(usage)?;
    Ok(cfg)
}

fn load_truth(truth: &Path, durations: &Path) -> std::result::Result<AnnotationSet, Failure> {
    let events = read_events(truth)?.into_iter().map(|r| r.event).collect();
    let set = AnnotationSet::new(events, read_durations(durations)?);
    if let Some(e) = set
        .events
        .iter()
        .find(|e| !set.clip_durations.contains_key(&e.clip_id))
    {
        return Err(data_err(format!("no duration for truth clip '{}'", e.clip_id)));
    }
    Ok(set)
}

fn tune(a: &TuneArgs) -> Outcome {
    let grid = CsebbGrid::from_toml(&read_config_file(&a.grid)?).map_err(usage)?;
    for cfg in grid.configs() {
        cfg.validate().map_err(usage)?;
    }
    let psds_cfg = psds_config(&a.psds)?;
    let tracks = read_scores(&a.scores)?;
    let truth = load_truth(&a.truth, &a.durations)?;
    eprintln!("tune-sebb: {} configurations", grid.configs().len());
    let (best, score) = tune_csebb(&tracks, &truth, &grid, &psds_cfg)?;
    if let Some(out) = &a.out {
        std::fs::write(out, best.to_toml()).map_err(freqdg::Error::from)?;
    }
    Ok(format!(
        "psds={score:.6}\nfilter_len={}\nboundary_threshold={}\nmerge_threshold_abs={}\nmerge_threshold_rel={}\n",
        best.filter_len, best.boundary_threshold, best.merge_threshold_abs, best.merge_threshold_rel
    ))
}

fn require<'a>(flag: &str, v: &'a Option<PathBuf>, metric: &str) -> std::result::Result<&'a Path, Failure> {
    v.as_deref()
        .ok_or_else(|| usage(format!("--{metric} needs --{flag}")))
}

fn evaluate(a: &EvaluateArgs) -> Outcome {
    if !a.psds && !a.mpauc {
        return Err(usage("nothing to evaluate: pass --psds and/or --mpauc"));
    }
    if !(a.max_fpr > 0.0 && a.max_fpr <= 1.0) {
        return Err(usage(format!("--max-fpr must be in (0, 1], got {}", a.max_fpr)));
    }
    let psds_cfg = psds_config(&a.psds_args)?;
    let class_map = a.class_map.as_deref().map(ClassMap::read).transpose()?;

    let mut summary: Vec<(String, f64)> = Vec::new();
    let mut details = String::new();

    if a.psds {
        let events_path = require("events", &a.events, "psds")?;
        let truth_path = require("truth", &a.truth, "psds")?;
        let durations_path = require("durations", &a.durations, "psds")?;
        let mut truth = load_truth(truth_path, durations_path)?;
        let mut scored: Vec<_> = read_events(events_path)?
            .into_iter()
            .map(|r| (r.event, r.confidence.unwrap_or(1.0)))
            .collect();
        if let Some(map) = &class_map {
            truth.events = apply_class_map(&truth.events, map);
            for (e, _) in &mut scored {
                e.class_name = map.map(&e.class_name).to_string();
            }
        }
        if let Some((e, _)) = scored
            .iter()
            .find(|(e, _)| !truth.clip_durations.contains_key(&e.clip_id))
        {
            return Err(data_err(format!("no duration for detected clip '{}'", e.clip_id)));
        }
        let roc = psd_roc_from_scored(&scored, &truth, &psds_cfg)?;
        let value = psds(&roc.curve, &psds_cfg);
        summary.push(("psds".into(), value));
        let _ = writeln!(
            details,
            "# psd-roc: {} operating points, {} staircase corners",
            roc.operating_points.len(),
            roc.curve.len()
        );
        if !roc.excluded_classes.is_empty() {
            let _ = writeln!(
                details,
                "# classes without ground truth (ignored): {}",
                roc.excluded_classes.join(",")
            );
        }
    }

    if a.mpauc {
        let scores_path = require("segscores", &a.segscores, "mpauc")?;
        let truth_path = require("segtruth", &a.segtruth, "mpauc")?;
        let mut scores = read_segment_table(scores_path)?;
        let mut labels = read_segment_table(truth_path)?;
        if let Some(map) = &class_map {
            scores = apply_class_map_table(&scores, map);
            labels = apply_class_map_table(&labels, map);
        }
        let mode = match a.standardization {
            Standardization::Mcclish => PaucStandardization::McClish,
            Standardization::Raw => PaucStandardization::Raw,
        };
        let classes = scores.classes.clone();
        let report = mpauc(&scores, &labels, &classes, a.max_fpr, mode)?;
        summary.push(("mpauc".into(), report.value));
        for (class, v) in &report.per_class {
            let _ = writeln!(details, "# pauc {class} {v:.6}");
        }
        if !report.degenerate.is_empty() {
            let _ = writeln!(
                details,
                "# degenerate classes (excluded): {}",
                report.degenerate.join(",")
            );
        }
    }

    if a.psds && a.mpauc {
        let joint = freqdg::metrics::joint_score(summary[0].1, summary[1].1);
        summary.push(("joint".into(), joint));
    }

    let lines: String = summary.iter().map(|(k, v)| format!("{k}={v:.6}\n")).collect();
    if let Some(path) = &a.result {
        std::fs::write(path, &lines).map_err(freqdg::Error::from)?;
    }
    Ok(lines + &details)
}
