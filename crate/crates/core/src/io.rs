//! On-disk formats: JSONL logs, the report document and CSV exports.
//!
//! Every float is written through [`fmt_g9`] (nine significant digits, one
//! canonical zero), and every writer emits fields in a fixed order, so
//! identical values always produce byte-identical files. Nine-digit
//! formatting is idempotent under re-reading: parsing a formatted value
//! and formatting the parse result reproduces the original bytes. Each
//! file starts with a `format` tag naming its versioned schema; readers
//! reject anything else.

use crate::error::{Error, Result};
use crate::gap::{FidelityLevelScores, GapReport, MetricRow, ModelResult, NormalizationRange};
use crate::metrics::MetricId;
use crate::perception::TrackEstimate;
use crate::scenario::{Frame, Scenario, ScenarioKind, SensorPose};
use crate::sensor::{Detection, PointCloud};
use serde_json::Value;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

pub const SCENARIO_FORMAT: &str = "radargap.scenario.v1";
pub const DETECTIONS_FORMAT: &str = "radargap.detections.v1";
pub const TRACKS_FORMAT: &str = "radargap.tracks.v1";
pub const REPORT_FORMAT: &str = "radargap.report.v1";

/// Nine-significant-digit scientific notation. Both zeros map to the same
/// bytes so sign noise in computed zeros cannot leak into files.
pub fn fmt_g9(v: f64) -> String {
    debug_assert!(v.is_finite(), "file formats carry finite numbers only");
    if v == 0.0 {
        return "0.00000000e0".to_string();
    }
    format!("{v:.8e}")
}

fn json_str(s: &str) -> String {
    serde_json::to_string(s).expect("strings always serialize")
}

fn malformed(origin: &str, message: impl Into<String>) -> Error {
    Error::MalformedFile { path: origin.to_string(), message: message.into() }
}

fn parse_value(origin: &str, line: &str) -> Result<Value> {
    serde_json::from_str(line).map_err(|e| malformed(origin, e.to_string()))
}

/// Read the header line and verify its `format` tag.
fn read_header(
    origin: &str,
    lines: &mut impl Iterator<Item = std::io::Result<String>>,
    format: &str,
) -> Result<Value> {
    let line = lines.next().ok_or_else(|| malformed(origin, "empty file"))??;
    let header = parse_value(origin, &line)?;
    match header.get("format").and_then(Value::as_str) {
        Some(f) if f == format => Ok(header),
        Some(f) => Err(malformed(origin, format!("expected format {format}, found {f}"))),
        None => Err(malformed(origin, "missing format tag")),
    }
}

fn header_str<'a>(origin: &str, header: &'a Value, key: &str) -> Result<&'a str> {
    header
        .get(key)
        .and_then(Value::as_str)
        .ok_or_else(|| malformed(origin, format!("header lacks string field `{key}`")))
}

fn header_f64(origin: &str, header: &Value, key: &str) -> Result<f64> {
    header
        .get(key)
        .and_then(Value::as_f64)
        .ok_or_else(|| malformed(origin, format!("header lacks number field `{key}`")))
}

fn header_u64(origin: &str, header: &Value, key: &str) -> Result<u64> {
    header
        .get(key)
        .and_then(Value::as_u64)
        .ok_or_else(|| malformed(origin, format!("header lacks integer field `{key}`")))
}

fn typed<T: serde::de::DeserializeOwned>(origin: &str, value: Value) -> Result<T> {
    serde_json::from_value(value).map_err(|e| malformed(origin, e.to_string()))
}

// ---------------------------------------------------------------------
// Ground-truth scenario log

fn object_json(o: &crate::scenario::ObjectState) -> String {
    format!(
        r#"{{"id":{},"x":{},"y":{},"yaw":{},"speed":{},"length":{},"width":{}}}"#,
        o.id,
        fmt_g9(o.x),
        fmt_g9(o.y),
        fmt_g9(o.yaw),
        fmt_g9(o.speed),
        fmt_g9(o.length),
        fmt_g9(o.width)
    )
}

pub fn write_scenario(mut w: impl Write, sc: &Scenario) -> Result<()> {
    writeln!(
        w,
        r#"{{"format":{},"kind":{},"label":{},"dt":{},"sensor":{{"x":{},"y":{},"yaw":{},"fov_azimuth":{},"range_max":{}}},"frames":{}}}"#,
        json_str(SCENARIO_FORMAT),
        json_str(sc.kind.name()),
        json_str(&sc.label),
        fmt_g9(sc.dt),
        fmt_g9(sc.sensor.x),
        fmt_g9(sc.sensor.y),
        fmt_g9(sc.sensor.yaw),
        fmt_g9(sc.sensor.fov_azimuth),
        fmt_g9(sc.sensor.range_max),
        sc.frames.len()
    )?;
    for frame in &sc.frames {
        let targets: Vec<String> = frame.targets.iter().map(object_json).collect();
        writeln!(
            w,
            r#"{{"index":{},"t":{},"ego":{},"targets":[{}]}}"#,
            frame.index,
            fmt_g9(frame.t),
            object_json(&frame.ego),
            targets.join(",")
        )?;
    }
    Ok(())
}

pub fn read_scenario(r: impl BufRead, origin: &str) -> Result<Scenario> {
    let mut lines = r.lines();
    let header = read_header(origin, &mut lines, SCENARIO_FORMAT)?;
    let kind = ScenarioKind::from_name(header_str(origin, &header, "kind")?)?;
    let label = header_str(origin, &header, "label")?.to_string();
    let dt = header_f64(origin, &header, "dt")?;
    let sensor: SensorPose = typed(
        origin,
        header.get("sensor").cloned().ok_or_else(|| malformed(origin, "header lacks sensor"))?,
    )?;
    let declared = header_u64(origin, &header, "frames")? as usize;
    let mut frames: Vec<Frame> = Vec::with_capacity(declared);
    for line in lines {
        frames.push(typed(origin, parse_value(origin, &line?)?)?);
    }
    if frames.len() != declared {
        return Err(malformed(
            origin,
            format!("header declares {declared} frames, found {}", frames.len()),
        ));
    }
    Ok(Scenario { kind, label, dt, sensor, frames })
}

// ---------------------------------------------------------------------
// Detection log

/// One model's detections over a scenario, with enough context to
/// reproduce the run.
#[derive(Clone, Debug, PartialEq)]
pub struct DetectionLog {
    pub scenario: String,
    pub model: String,
    pub seed: u64,
    pub clouds: Vec<PointCloud>,
}

pub fn write_detections(mut w: impl Write, log: &DetectionLog) -> Result<()> {
    writeln!(
        w,
        r#"{{"format":{},"scenario":{},"model":{},"seed":{},"frames":{}}}"#,
        json_str(DETECTIONS_FORMAT),
        json_str(&log.scenario),
        json_str(&log.model),
        log.seed,
        log.clouds.len()
    )?;
    for cloud in &log.clouds {
        let dets: Vec<String> = cloud
            .detections
            .iter()
            .map(|d| format!("[{},{},{}]", fmt_g9(d.r), fmt_g9(d.phi), fmt_g9(d.doppler)))
            .collect();
        writeln!(
            w,
            r#"{{"frame":{},"t":{},"detections":[{}]}}"#,
            cloud.frame_index,
            fmt_g9(cloud.t),
            dets.join(",")
        )?;
    }
    Ok(())
}

pub fn read_detections(r: impl BufRead, origin: &str) -> Result<DetectionLog> {
    let mut lines = r.lines();
    let header = read_header(origin, &mut lines, DETECTIONS_FORMAT)?;
    let scenario = header_str(origin, &header, "scenario")?.to_string();
    let model = header_str(origin, &header, "model")?.to_string();
    let seed = header_u64(origin, &header, "seed")?;
    let declared = header_u64(origin, &header, "frames")? as usize;
    let mut clouds = Vec::with_capacity(declared);
    for line in lines {
        let v = parse_value(origin, &line?)?;
        let frame_index = header_u64(origin, &v, "frame")? as usize;
        let t = header_f64(origin, &v, "t")?;
        let rows: Vec<[f64; 3]> = typed(
            origin,
            v.get("detections")
                .cloned()
                .ok_or_else(|| malformed(origin, "frame line lacks detections"))?,
        )?;
        let detections =
            rows.into_iter().map(|[r, phi, doppler]| Detection { r, phi, doppler }).collect();
        clouds.push(PointCloud { frame_index, t, detections });
    }
    if clouds.len() != declared {
        return Err(malformed(
            origin,
            format!("header declares {declared} frames, found {}", clouds.len()),
        ));
    }
    Ok(DetectionLog { scenario, model, seed, clouds })
}

// ---------------------------------------------------------------------
// Track log

/// Confirmed tracks of one perception run.
#[derive(Clone, Debug, PartialEq)]
pub struct TrackLog {
    pub scenario: String,
    pub model: String,
    pub seed: u64,
    /// (frame index, time, confirmed tracks) per frame.
    pub frames: Vec<(usize, f64, Vec<TrackEstimate>)>,
}

fn track_json(t: &TrackEstimate) -> String {
    format!(
        r#"{{"track_id":{},"x":{},"y":{},"vx":{},"vy":{},"bbox":{{"center":{{"x":{},"y":{}}},"yaw":{},"length":{},"width":{}}},"age":{},"confirmed":{}}}"#,
        t.track_id,
        fmt_g9(t.x),
        fmt_g9(t.y),
        fmt_g9(t.vx),
        fmt_g9(t.vy),
        fmt_g9(t.bbox.center.x),
        fmt_g9(t.bbox.center.y),
        fmt_g9(t.bbox.yaw),
        fmt_g9(t.bbox.length),
        fmt_g9(t.bbox.width),
        t.age,
        t.confirmed
    )
}

pub fn write_tracks(mut w: impl Write, log: &TrackLog) -> Result<()> {
    writeln!(
        w,
        r#"{{"format":{},"scenario":{},"model":{},"seed":{},"frames":{}}}"#,
        json_str(TRACKS_FORMAT),
        json_str(&log.scenario),
        json_str(&log.model),
        log.seed,
        log.frames.len()
    )?;
    for (index, t, tracks) in &log.frames {
        let rows: Vec<String> = tracks.iter().map(track_json).collect();
        writeln!(w, r#"{{"frame":{},"t":{},"tracks":[{}]}}"#, index, fmt_g9(*t), rows.join(","))?;
    }
    Ok(())
}

pub fn read_tracks(r: impl BufRead, origin: &str) -> Result<TrackLog> {
    let mut lines = r.lines();
    let header = read_header(origin, &mut lines, TRACKS_FORMAT)?;
    let scenario = header_str(origin, &header, "scenario")?.to_string();
    let model = header_str(origin, &header, "model")?.to_string();
    let seed = header_u64(origin, &header, "seed")?;
    let declared = header_u64(origin, &header, "frames")? as usize;
    let mut frames = Vec::with_capacity(declared);
    for line in lines {
        let v = parse_value(origin, &line?)?;
        let index = header_u64(origin, &v, "frame")? as usize;
        let t = header_f64(origin, &v, "t")?;
        let tracks: Vec<TrackEstimate> = typed(
            origin,
            v.get("tracks").cloned().ok_or_else(|| malformed(origin, "frame line lacks tracks"))?,
        )?;
        frames.push((index, t, tracks));
    }
    if frames.len() != declared {
        return Err(malformed(
            origin,
            format!("header declares {declared} frames, found {}", frames.len()),
        ));
    }
    Ok(TrackLog { scenario, model, seed, frames })
}

// ---------------------------------------------------------------------
// Gap report

pub fn write_report(mut w: impl Write, report: &GapReport) -> Result<()> {
    writeln!(w, "{{")?;
    writeln!(w, r#"  "format": {},"#, json_str(REPORT_FORMAT))?;
    writeln!(w, r#"  "scenario": {},"#, json_str(&report.scenario))?;
    writeln!(w, r#"  "seed": {},"#, report.seed)?;
    writeln!(w, r#"  "ranges": ["#)?;
    for (i, range) in report.ranges.iter().enumerate() {
        let comma = if i + 1 < report.ranges.len() { "," } else { "" };
        writeln!(
            w,
            r#"    {{"metric": {}, "min": {}, "max": {}}}{comma}"#,
            json_str(range.metric.name()),
            fmt_g9(range.min),
            fmt_g9(range.max)
        )?;
    }
    writeln!(w, "  ],")?;
    writeln!(w, r#"  "models": ["#)?;
    for (mi, model) in report.models.iter().enumerate() {
        writeln!(w, "    {{")?;
        writeln!(w, r#"      "model": {},"#, json_str(&model.model))?;
        writeln!(w, r#"      "metrics": ["#)?;
        for (i, row) in model.metrics.iter().enumerate() {
            let comma = if i + 1 < model.metrics.len() { "," } else { "" };
            writeln!(
                w,
                r#"        {{"metric": {}, "level": {}, "direction": {}, "raw": {}, "normalized": {}, "capped_frames": {}}}{comma}"#,
                json_str(row.id.name()),
                json_str(row.id.level().name()),
                json_str(row.id.direction().name()),
                fmt_g9(row.raw),
                fmt_g9(row.normalized),
                row.capped_frames
            )?;
        }
        writeln!(w, "      ],")?;
        let l = &model.levels;
        writeln!(
            w,
            r#"      "levels": {{"fl1": {}, "fl2": {}, "fl3": {}, "fl4": {}}},"#,
            fmt_g9(l.fl1),
            fmt_g9(l.fl2),
            fmt_g9(l.fl3),
            fmt_g9(l.fl4)
        )?;
        writeln!(w, r#"      "gap": {}"#, fmt_g9(model.gap))?;
        let comma = if mi + 1 < report.models.len() { "," } else { "" };
        writeln!(w, "    }}{comma}")?;
    }
    writeln!(w, "  ]")?;
    writeln!(w, "}}")?;
    Ok(())
}

pub fn read_report(mut r: impl Read, origin: &str) -> Result<GapReport> {
    let mut text = String::new();
    r.read_to_string(&mut text)?;
    let v = parse_value(origin, &text)?;
    match v.get("format").and_then(Value::as_str) {
        Some(f) if f == REPORT_FORMAT => {}
        other => {
            return Err(malformed(
                origin,
                format!("expected format {REPORT_FORMAT}, found {other:?}"),
            ));
        }
    }
    let metric_id = |value: &Value| -> Result<MetricId> {
        let name = value
            .get("metric")
            .and_then(Value::as_str)
            .ok_or_else(|| malformed(origin, "entry lacks metric name"))?;
        MetricId::from_name(name)
            .ok_or_else(|| malformed(origin, format!("unknown metric `{name}`")))
    };
    let scenario = header_str(origin, &v, "scenario")?.to_string();
    let seed = header_u64(origin, &v, "seed")?;
    let ranges = v
        .get("ranges")
        .and_then(Value::as_array)
        .ok_or_else(|| malformed(origin, "report lacks ranges"))?
        .iter()
        .map(|r| {
            Ok(NormalizationRange {
                metric: metric_id(r)?,
                min: header_f64(origin, r, "min")?,
                max: header_f64(origin, r, "max")?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let models = v
        .get("models")
        .and_then(Value::as_array)
        .ok_or_else(|| malformed(origin, "report lacks models"))?
        .iter()
        .map(|m| {
            let metrics = m
                .get("metrics")
                .and_then(Value::as_array)
                .ok_or_else(|| malformed(origin, "model lacks metrics"))?
                .iter()
                .map(|row| {
                    Ok(MetricRow {
                        id: metric_id(row)?,
                        raw: header_f64(origin, row, "raw")?,
                        normalized: header_f64(origin, row, "normalized")?,
                        capped_frames: header_u64(origin, row, "capped_frames")? as usize,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let levels = m.get("levels").ok_or_else(|| malformed(origin, "model lacks levels"))?;
            Ok(ModelResult {
                model: header_str(origin, m, "model")?.to_string(),
                metrics,
                levels: FidelityLevelScores {
                    fl1: header_f64(origin, levels, "fl1")?,
                    fl2: header_f64(origin, levels, "fl2")?,
                    fl3: header_f64(origin, levels, "fl3")?,
                    fl4: header_f64(origin, levels, "fl4")?,
                },
                gap: header_f64(origin, m, "gap")?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GapReport { scenario, seed, models, ranges })
}

// ---------------------------------------------------------------------
// CSV exports

/// One gap value of the scenario-by-model grid.
#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub scenario: String,
    pub model: String,
    pub gap: f64,
}

fn csv_read_err(origin: &str, e: csv::Error) -> Error {
    malformed(origin, e.to_string())
}

fn csv_write_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// `scenario,model,gap` rows; also the radar-chart data format.
pub fn write_summary_csv(w: impl Write, rows: &[SummaryRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["scenario", "model", "gap"]).map_err(csv_write_err)?;
    for row in rows {
        out.write_record([row.scenario.as_str(), row.model.as_str(), &fmt_g9(row.gap)])
            .map_err(csv_write_err)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_summary_csv(r: impl Read, origin: &str) -> Result<Vec<SummaryRow>> {
    let mut reader = csv::Reader::from_reader(r);
    let headers = reader.headers().map_err(|e| csv_read_err(origin, e))?;
    if headers != vec!["scenario", "model", "gap"] {
        return Err(malformed(origin, format!("unexpected columns {headers:?}")));
    }
    reader
        .records()
        .map(|record| {
            let record = record.map_err(|e| csv_read_err(origin, e))?;
            let gap: f64 = record
                .get(2)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| malformed(origin, "gap column must be a number"))?;
            Ok(SummaryRow {
                scenario: record.get(0).unwrap_or_default().to_string(),
                model: record.get(1).unwrap_or_default().to_string(),
                gap,
            })
        })
        .collect()
}

/// Flatten reports into chart rows, one per (scenario, model).
pub fn chart_rows(reports: &[GapReport]) -> Vec<SummaryRow> {
    reports
        .iter()
        .flat_map(|report| {
            report.models.iter().map(|m| SummaryRow {
                scenario: report.scenario.clone(),
                model: m.model.clone(),
                gap: m.gap,
            })
        })
        .collect()
}

/// Metric table of one report: eleven rows of raw values, one column per
/// model, with fidelity level and direction as leading metadata columns.
pub fn write_table_csv(w: impl Write, report: &GapReport) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["level".to_string(), "metric".to_string(), "direction".to_string()];
    header.extend(report.models.iter().map(|m| m.model.clone()));
    out.write_record(&header).map_err(csv_write_err)?;
    for (i, id) in MetricId::all().into_iter().enumerate() {
        let mut record = vec![
            id.level().name().to_string(),
            id.name().to_string(),
            id.direction().name().to_string(),
        ];
        for model in &report.models {
            debug_assert_eq!(model.metrics[i].id, id, "reports keep registry order");
            record.push(fmt_g9(model.metrics[i].raw));
        }
        out.write_record(&record).map_err(csv_write_err)?;
    }
    out.flush()?;
    Ok(())
}

// ---------------------------------------------------------------------
// Path-level helpers

pub fn save_scenario(path: &Path, sc: &Scenario) -> Result<()> {
    write_scenario(BufWriter::new(std::fs::File::create(path)?), sc)
}

pub fn load_scenario(path: &Path) -> Result<Scenario> {
    read_scenario(BufReader::new(std::fs::File::open(path)?), &path.display().to_string())
}

pub fn save_detections(path: &Path, log: &DetectionLog) -> Result<()> {
    write_detections(BufWriter::new(std::fs::File::create(path)?), log)
}

pub fn load_detections(path: &Path) -> Result<DetectionLog> {
    read_detections(BufReader::new(std::fs::File::open(path)?), &path.display().to_string())
}

pub fn save_tracks(path: &Path, log: &TrackLog) -> Result<()> {
    write_tracks(BufWriter::new(std::fs::File::create(path)?), log)
}

pub fn load_tracks(path: &Path) -> Result<TrackLog> {
    read_tracks(BufReader::new(std::fs::File::open(path)?), &path.display().to_string())
}

pub fn save_report(path: &Path, report: &GapReport) -> Result<()> {
    write_report(BufWriter::new(std::fs::File::create(path)?), report)
}

pub fn load_report(path: &Path) -> Result<GapReport> {
    read_report(BufReader::new(std::fs::File::open(path)?), &path.display().to_string())
}
