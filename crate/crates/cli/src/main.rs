//! Command-line frontend.
//!
//! Three subcommands cover the batch workflow: `simulate` writes ground
//! truth and detection logs, `evaluate` runs the full comparison and
//! writes one report per scenario plus a gap summary, `report` flattens
//! report files into CSV for tables and radar charts.
//!
//! Layout under the output directory, one subdirectory per scenario:
//!
//! ```text
//! out/
//!   summary.csv
//!   eight_s/
//!     scenario.jsonl
//!     report.json
//!     reference.detections.jsonl
//!     reference.tracks.jsonl
//!     irm.detections.jsonl
//!     irm.tracks.jsonl
//! ```
//!
//! Everything is deterministic for a fixed config: rerunning a command
//! rewrites byte-identical files.

use clap::{Args, Parser, Subcommand};
use radargap_core::config::EvaluationConfig;
use radargap_core::error::{Error, Result};
use radargap_core::io::{
    chart_rows, load_report, save_detections, save_report, save_scenario, save_tracks,
    write_summary_csv, write_table_csv, DetectionLog, SummaryRow, TrackLog,
};
use radargap_core::pipeline::{
    evaluate_scenario_full, generate_clouds, train_ddm, ModelInstance, ModelRun, ScenarioRun,
};
use radargap_core::scenario::{Scenario, ScenarioParams};
use radargap_core::sensor::ddm::DdmModel;
use std::path::{Path, PathBuf};
use std::sync::mpsc;

#[derive(Parser)]
#[command(name = "radargap", version, about = "Radar sensor model evaluation harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate ground-truth and detection logs.
    Simulate(RunArgs),
    /// Run the full evaluation and write reports plus a gap summary.
    Evaluate(RunArgs),
    /// Flatten report files into CSV exports.
    Report(ReportArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML run configuration; omitted uses the built-in defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; wins over RADARGAP_OUT and the config value.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Concurrent scenario jobs; 0 uses all cores.
    #[arg(long)]
    jobs: Option<usize>,
    /// Restrict the run to these scenario names.
    #[arg(long, value_delimiter = ',')]
    scenarios: Vec<String>,
    /// Restrict the run to these model names.
    #[arg(long, value_delimiter = ',')]
    models: Vec<String>,
}

#[derive(Args)]
struct ReportArgs {
    /// Report files written by `evaluate`.
    reports: Vec<PathBuf>,
    /// Export kind: `csv` for per-report metric tables, `chart-data` for
    /// one scenario-model-gap file across all reports.
    #[arg(long, default_value = "csv")]
    format: String,
    /// Directory for the exported files.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

fn main() {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Simulate(args) => cmd_simulate(&args),
        Command::Evaluate(args) => cmd_evaluate(&args),
        Command::Report(args) => cmd_report(&args),
    };
    if let Err(e) = outcome {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

/// Load the config and fold in the command-line overrides.
fn resolve_config(args: &RunArgs) -> Result<(EvaluationConfig, PathBuf)> {
    let mut config = match &args.config {
        Some(path) => EvaluationConfig::load(path)?,
        None => EvaluationConfig::default(),
    };
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(jobs) = args.jobs {
        config.jobs = jobs;
    }
    if !args.scenarios.is_empty() {
        for name in &args.scenarios {
            if !config.scenarios.iter().any(|s| &s.name == name) {
                return Err(Error::invalid_config(
                    "scenarios",
                    format!("`{name}` is not part of this configuration"),
                ));
            }
        }
        config.scenarios.retain(|s| args.scenarios.contains(&s.name));
    }
    if !args.models.is_empty() {
        for name in &args.models {
            if !config.models.iter().any(|m| m.display_name() == name) {
                return Err(Error::invalid_config(
                    "models",
                    format!("`{name}` is not part of this configuration"),
                ));
            }
        }
        config.models.retain(|m| args.models.contains(&m.display_name().to_string()));
    }
    config.validate()?;
    let out = args.out.clone().unwrap_or_else(|| config.effective_out_dir());
    Ok((config, out))
}

/// Attach scenario context to a stage error.
fn in_scenario(label: &str, e: Error) -> Error {
    Error::InvalidArgument(format!("scenario {label}: {e}"))
}

/// Train the data-driven model when any configured entry needs it.
fn maybe_train(config: &EvaluationConfig) -> Result<Option<DdmModel>> {
    if !config.needs_ddm() {
        return Ok(None);
    }
    let params = ScenarioParams { sensor: config.sensor, ..ScenarioParams::default() };
    let model =
        train_ddm(&params, config.dt, &config.reference, &config.ddm_config(), config.seed)?;
    Ok(Some(model))
}

fn scenario_dir(out: &Path, sc: &Scenario) -> Result<PathBuf> {
    let dir = out.join(sc.name());
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn cmd_simulate(args: &RunArgs) -> Result<()> {
    let (config, out) = resolve_config(args)?;
    let ddm = maybe_train(&config)?;
    let models = config.instantiate_models(ddm.as_ref())?;
    let scenarios = config.build_scenarios()?;
    for sc in &scenarios {
        let dir = scenario_dir(&out, sc)?;
        save_scenario(&dir.join("scenario.jsonl"), sc)?;
        for inst in &models {
            let log = DetectionLog {
                scenario: sc.name().to_string(),
                model: inst.name.clone(),
                seed: config.seed,
                clouds: generate_clouds(sc, inst, config.seed),
            };
            save_detections(&dir.join(format!("{}.detections.jsonl", inst.name)), &log)?;
        }
        println!("simulated {}", dir.display());
    }
    Ok(())
}

/// Evaluate one scenario and persist everything it produced.
fn evaluate_one(
    config: &EvaluationConfig,
    sc: &Scenario,
    models: &[ModelInstance],
    out: &Path,
) -> Result<SummaryPart> {
    let run: ScenarioRun = evaluate_scenario_full(
        sc,
        models,
        &config.reference,
        &config.perception,
        &config.metric_params(),
        &config.gap_settings()?,
        config.seed,
    )
    .map_err(|e| in_scenario(sc.name(), e))?;
    let dir = scenario_dir(out, sc)?;
    save_scenario(&dir.join("scenario.jsonl"), sc)?;
    let save_run = |model_run: &ModelRun| -> Result<()> {
        let detections = DetectionLog {
            scenario: sc.name().to_string(),
            model: model_run.name.clone(),
            seed: config.seed,
            clouds: model_run.clouds.clone(),
        };
        save_detections(&dir.join(format!("{}.detections.jsonl", model_run.name)), &detections)?;
        let tracks = TrackLog {
            scenario: sc.name().to_string(),
            model: model_run.name.clone(),
            seed: config.seed,
            frames: sc
                .frames
                .iter()
                .zip(&model_run.tracks)
                .map(|(f, tracks)| (f.index, f.t, tracks.clone()))
                .collect(),
        };
        save_tracks(&dir.join(format!("{}.tracks.jsonl", model_run.name)), &tracks)?;
        Ok(())
    };
    save_run(&run.reference)?;
    for model_run in &run.models {
        save_run(model_run)?;
    }
    save_report(&dir.join("report.json"), &run.report)?;
    let rows = run
        .report
        .models
        .iter()
        .map(|m| SummaryRow { scenario: sc.name().to_string(), model: m.model.clone(), gap: m.gap })
        .collect();
    Ok(SummaryPart { dir, rows })
}

struct SummaryPart {
    dir: PathBuf,
    rows: Vec<SummaryRow>,
}

fn cmd_evaluate(args: &RunArgs) -> Result<()> {
    let (config, out) = resolve_config(args)?;
    config.validate_for_evaluation()?;
    let ddm = maybe_train(&config)?;
    let models = config.instantiate_models(ddm.as_ref())?;
    let scenarios = config.build_scenarios()?;

    let workers = match config.jobs {
        0 => std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
        n => n,
    }
    .min(scenarios.len())
    .max(1);

    // Fan scenarios out to a fixed worker pool; each job writes only its
    // own scenario directory, so the jobs never share files.
    let mut slots: Vec<Option<Result<SummaryPart>>> = Vec::new();
    slots.resize_with(scenarios.len(), || None);
    let next = std::sync::atomic::AtomicUsize::new(0);
    let (tx, rx) = mpsc::channel::<(usize, Result<SummaryPart>)>();
    std::thread::scope(|scope| {
        for _ in 0..workers {
            let tx = tx.clone();
            let next = &next;
            let scenarios = &scenarios;
            let config = &config;
            let models = &models;
            let out = &out;
            scope.spawn(move || loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                if i >= scenarios.len() {
                    return;
                }
                let part = evaluate_one(config, &scenarios[i], models, out);
                if tx.send((i, part)).is_err() {
                    return;
                }
            });
        }
        drop(tx);
        for (i, part) in rx {
            slots[i] = Some(part);
        }
    });

    let mut rows = Vec::new();
    for slot in slots {
        let part = slot.expect("every scenario job reports")?;
        println!("evaluated {}", part.dir.display());
        rows.extend(part.rows);
    }
    let summary_path = out.join("summary.csv");
    write_summary_csv(std::io::BufWriter::new(std::fs::File::create(&summary_path)?), &rows)?;
    println!("summary {}", summary_path.display());
    Ok(())
}

fn cmd_report(args: &ReportArgs) -> Result<()> {
    if args.reports.is_empty() {
        eprintln!("warning: no report files given, nothing to export");
        return Ok(());
    }
    std::fs::create_dir_all(&args.out)?;
    let reports = args.reports.iter().map(|p| load_report(p)).collect::<Result<Vec<_>>>()?;
    match args.format.as_str() {
        "csv" => {
            for report in &reports {
                let path = args.out.join(format!("{}.table.csv", report.scenario));
                write_table_csv(std::io::BufWriter::new(std::fs::File::create(&path)?), report)?;
                println!("table {}", path.display());
            }
        }
        "chart-data" => {
            let path = args.out.join("chart.csv");
            write_summary_csv(
                std::io::BufWriter::new(std::fs::File::create(&path)?),
                &chart_rows(&reports),
            )?;
            println!("chart {}", path.display());
        }
        other => {
            return Err(Error::InvalidArgument(format!(
                "unknown report format `{other}`, expected csv or chart-data"
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bare() -> RunArgs {
        RunArgs {
            config: None,
            seed: None,
            out: None,
            jobs: None,
            scenarios: vec![],
            models: vec![],
        }
    }

    #[test]
    fn overrides_replace_config_values() {
        let args =
            RunArgs { seed: Some(7), jobs: Some(3), out: Some(PathBuf::from("picked")), ..bare() };
        let (config, out) = resolve_config(&args).unwrap();
        assert_eq!(config.seed, 7);
        assert_eq!(config.jobs, 3);
        assert_eq!(out, PathBuf::from("picked"));
    }

    #[test]
    fn scenario_filter_keeps_config_order() {
        let args = RunArgs { scenarios: vec!["eight_s".into(), "leading_s".into()], ..bare() };
        let (config, _) = resolve_config(&args).unwrap();
        let names: Vec<&str> = config.scenarios.iter().map(|s| s.name.as_str()).collect();
        assert_eq!(names, ["leading_s", "eight_s"]);
    }

    #[test]
    fn model_filter_allows_a_single_model() {
        let args = RunArgs { models: vec!["irm".into()], ..bare() };
        let (config, _) = resolve_config(&args).unwrap();
        assert_eq!(config.models.len(), 1);
        assert_eq!(config.models[0].display_name(), "irm");
    }

    #[test]
    fn names_outside_the_config_are_rejected() {
        let args = RunArgs { scenarios: vec!["warp_s".into()], ..bare() };
        assert!(resolve_config(&args).unwrap_err().to_string().contains("warp_s"));
        let args = RunArgs { models: vec!["nope".into()], ..bare() };
        assert!(resolve_config(&args).unwrap_err().to_string().contains("nope"));
    }
}
