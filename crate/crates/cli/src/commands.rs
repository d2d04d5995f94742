use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use ppmkit::chart::{render_ppmchart, PPMChartSpec};
use ppmkit::classify::{classify_model, classify_session, SessionReport};
use ppmkit::eventlog::{expand_reconnect, format_timestamp, parse_timestamp};
use ppmkit::metrics::{compute_session_metrics, Metric, SessionMetrics};
use ppmkit::replay::{replay_until, Cutoff, ProcessModel};
use ppmkit::simulate::{simulate_cohort, SimulationProfile};
use ppmkit::stats::{compare_groups, format_table, SessionSample};
use ppmkit::wfnet::{to_pnml, to_wfnet};
use rayon::prelude::*;
use serde::Serialize;

use crate::store::{emit, ensure_dir, files_with_extension, read_log, session_id, to_json, write_text};
use crate::{ChartArgs, ClassifyArgs, Format, MetricsArgs, ParseArgs, ReplayArgs, SimulateArgs, StatsArgs};

#[derive(Serialize)]
struct LogSummary {
    session_id: String,
    events: usize,
    objects: usize,
    first_timestamp: String,
    last_timestamp: String,
    classes: BTreeMap<&'static str, usize>,
}

pub fn parse(args: ParseArgs) -> Result<()> {
    let log = read_log(&args.log)?;
    let log = if args.expand_reconnect { expand_reconnect(&log) } else { log };
    if let Some(out) = &args.out {
        write_text(out, &log.to_csv_string())?;
    }
    let mut classes = BTreeMap::new();
    for e in log.events() {
        *classes.entry(e.class().as_str()).or_insert(0) += 1;
    }
    let mut objects: Vec<&str> = log.events().iter().map(|e| e.object_id.as_str()).collect();
    objects.sort_unstable();
    objects.dedup();
    let stamp = |i: Option<&ppmkit::eventlog::ModelingEvent>| i.map(|e| format_timestamp(&e.timestamp)).unwrap_or_default();
    let summary = LogSummary {
        session_id: log.session_id().to_string(),
        events: log.len(),
        objects: objects.len(),
        first_timestamp: stamp(log.events().first()),
        last_timestamp: stamp(log.events().last()),
        classes,
    };
    print!("{}", to_json(&summary)?);
    Ok(())
}

pub fn replay(args: ReplayArgs) -> Result<()> {
    let log = read_log(&args.log)?;
    let cutoff = match (args.until_seq, &args.until_time) {
        (Some(n), _) => Cutoff::Seq(n),
        (None, Some(t)) => Cutoff::Time(parse_timestamp(t).ok_or_else(|| anyhow!("bad timestamp `{t}`"))?),
        (None, None) => Cutoff::End,
    };
    let model = replay_until(&log, cutoff).with_context(|| args.log.display().to_string())?;
    let mut json = model.to_json();
    json.push('\n');
    emit(args.out.as_deref(), &json)
}

fn log_files(path: &Path) -> Result<Vec<std::path::PathBuf>> {
    if path.is_dir() {
        files_with_extension(path, "csv")
    } else {
        Ok(vec![path.to_path_buf()])
    }
}

pub fn metrics(args: MetricsArgs) -> Result<()> {
    let files = log_files(&args.log)?;
    let results: Vec<(String, SessionMetrics)> = files
        .par_iter()
        .map(|f| {
            let log = read_log(f)?;
            let m = compute_session_metrics(&log).with_context(|| f.display().to_string())?;
            Ok((session_id(f), m))
        })
        .collect::<Result<_>>()?;
    let text = if args.log.is_dir() {
        to_json(&results.into_iter().collect::<BTreeMap<_, _>>())?
    } else {
        to_json(&results[0].1)?
    };
    emit(args.out.as_deref(), &text)
}

fn write_pnml(model: Option<&ProcessModel>, path: &Path, name: &str) -> Result<()> {
    let model = model.ok_or_else(|| anyhow!("model was rejected by normalization; no workflow net to write"))?;
    let net = to_wfnet(model)?;
    write_text(path, &to_pnml(&net, name))
}

#[derive(Serialize)]
struct ClassifyIndexEntry<'a> {
    session_id: &'a str,
    perspicuous: bool,
    stage: &'static str,
}

pub fn classify(args: ClassifyArgs) -> Result<()> {
    if let Some(path) = &args.model {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        let model = ProcessModel::from_json(&text).with_context(|| path.display().to_string())?;
        let verdict = classify_model(&model, args.max_states)?;
        if let Some(pnml) = &args.pnml {
            write_pnml(verdict.normalization.model(), pnml, &session_id(path))?;
        }
        return emit(args.out.as_deref(), &to_json(&verdict)?);
    }

    let input = args.log.as_deref().expect("clap requires --log or --model");
    if !input.is_dir() {
        let log = read_log(input)?;
        let report = classify_session(&log, args.max_states).with_context(|| input.display().to_string())?;
        if let Some(pnml) = &args.pnml {
            write_pnml(report.verdict.normalization.model(), pnml, log.session_id())?;
        }
        return emit(args.out.as_deref(), &to_json(&report)?);
    }

    if args.pnml.is_some() {
        bail!("--pnml needs a single log or model, not a directory");
    }
    let files = files_with_extension(input, "csv")?;
    if let Some(dir) = &args.out {
        ensure_dir(dir)?;
    }
    let reports: Vec<SessionReport> = files
        .par_iter()
        .map(|f| {
            let log = read_log(f)?;
            let report = classify_session(&log, args.max_states).with_context(|| f.display().to_string())?;
            if let Some(dir) = &args.out {
                write_text(&dir.join(format!("{}.json", report.session_id)), &to_json(&report)?)?;
            }
            Ok(report)
        })
        .collect::<Result<_>>()?;
    if args.out.is_some() {
        let index: Vec<ClassifyIndexEntry> = reports
            .iter()
            .map(|r| ClassifyIndexEntry { session_id: &r.session_id, perspicuous: r.verdict.perspicuous, stage: r.verdict.stage.as_str() })
            .collect();
        print!("{}", to_json(&index)?);
    } else {
        print!("{}", to_json(&reports)?);
    }
    Ok(())
}

pub fn chart(args: ChartArgs) -> Result<()> {
    let log = read_log(&args.log)?;
    let mut spec = PPMChartSpec { window_secs: args.window, width: args.width, row_height: args.row_height, ..PPMChartSpec::default() };
    let colors = &mut spec.colors;
    for (slot, value) in [
        (&mut colors.create, args.color_create),
        (&mut colors.move_, args.color_move),
        (&mut colors.delete, args.color_delete),
        (&mut colors.other, args.color_other),
        (&mut colors.reconnect, args.color_reconnect),
    ] {
        if let Some(v) = value {
            *slot = v;
        }
    }
    let svg = render_ppmchart(&log, &spec)?;
    emit(args.out.as_deref(), &svg)
}

pub fn stats(args: StatsArgs) -> Result<()> {
    let metrics: Vec<Metric> = if args.metric == "all" {
        Metric::ALL.to_vec()
    } else {
        vec![args.metric.parse::<Metric>().map_err(|e| anyhow!("{e}"))?]
    };
    let files = files_with_extension(&args.reports, "json")?;
    let samples: Vec<SessionSample> = files
        .iter()
        .map(|f| {
            let text = std::fs::read_to_string(f).with_context(|| format!("cannot read {}", f.display()))?;
            serde_json::from_str(&text).with_context(|| format!("{} is not a session report", f.display()))
        })
        .collect::<Result<_>>()?;
    let comparison = compare_groups(&samples, &metrics, args.exclude_unknown)?;
    let text = match args.format {
        Format::Json => to_json(&comparison)?,
        Format::Text => format_table(&comparison),
    };
    emit(args.out.as_deref(), &text)
}

#[derive(Serialize)]
struct SimulationIndex {
    profile: String,
    seed: u64,
    sessions: Vec<String>,
}

pub fn simulate(args: SimulateArgs) -> Result<()> {
    let mut profile = SimulationProfile::preset(args.profile, args.seed);
    if let Some(v) = args.interleave {
        profile.block_interleave_prob = v;
    }
    if let Some(v) = args.move_rate {
        profile.move_rate = v;
    }
    if let Some(v) = args.mean_gap {
        profile.mean_gap = v;
    }
    if let Some(v) = args.p_defect {
        profile.p_defect = v;
    }
    let logs = simulate_cohort(&profile, args.sessions)?;
    ensure_dir(&args.out)?;
    for log in &logs {
        write_text(&args.out.join(format!("{}.csv", log.session_id())), &log.to_csv_string())?;
    }
    let index = SimulationIndex {
        profile: args.profile.to_string(),
        seed: args.seed,
        sessions: logs.iter().map(|l| l.session_id().to_string()).collect(),
    };
    print!("{}", to_json(&index)?);
    Ok(())
}
