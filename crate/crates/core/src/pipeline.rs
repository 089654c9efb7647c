//! End-to-end evaluation: clouds, tracks, metrics, gap.
//!
//! The flow per scenario mirrors the measurement procedure the toolkit
//! models: generate reference clouds (the "real" recording), generate each
//! model's clouds, run the identical perception pipeline on every cloud
//! sequence, score the eleven metrics between each model and the reference,
//! normalize across the model set, aggregate per fidelity level, and
//! average into the gap G.
//!
//! Randomness discipline: every (scenario label, stream) pair owns one
//! ChaCha stream derived from the master seed, consumed frame by frame in
//! order. Two models with different stream labels never share draws; a
//! model configured with the stream label "reference" reproduces the
//! reference clouds draw for draw, which is what the self-identity check
//! exploits.

use crate::error::{Error, Result};
use crate::gap::{
    aggregate_levels, gap, normalize_column, GapReport, MetricRow, ModelResult, NormalizationRange,
};
use crate::geometry::Vec2;
use crate::metrics::pointcloud::{cloud_points, dpp_worst, pne, wasserstein, wd_1d};
use crate::metrics::tracking::{iou, match_by_distance, ospa, rmse};
use crate::metrics::{MetricId, MetricParams, MetricRecord};
use crate::perception::{run_perception, PerceptionConfig, TrackEstimate};
use crate::scenario::{build_scenario, frame_visibility, Scenario, ScenarioKind, ScenarioParams};
use crate::seeds::derive_seed;
use crate::sensor::ddm::{ddm_fit, ddm_sample, DdmConfig, DdmModel, TargetInSensorFrame};
use crate::sensor::irm::irm_detect;
use crate::sensor::reference::{reference_detect, ReferenceParams};
use crate::sensor::rtm::{rtm_detect, RtmParams};
use crate::sensor::PointCloud;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;

/// How a model instance turns frames into clouds.
pub enum Generator {
    Irm { points_per_object: usize },
    Ddm(Box<DdmModel>),
    Rtm(RtmParams),
    Reference(ReferenceParams),
}

/// A named sensor model wired to its own random stream.
pub struct ModelInstance {
    /// Column name in reports.
    pub name: String,
    /// Random-stream label; distinct labels give independent draws.
    pub stream: String,
    pub generator: Generator,
}

/// Stream label reserved for the reference sensor.
pub const REFERENCE_STREAM: &str = "reference";

/// Generate the model's cloud for every frame of the scenario. One RNG is
/// derived from (master seed, scenario label, stream label) and consumed
/// across frames in order.
pub fn generate_clouds(
    scenario: &Scenario,
    inst: &ModelInstance,
    master_seed: u64,
) -> Vec<PointCloud> {
    let seed = derive_seed(master_seed, &[scenario.name(), &inst.stream, "detections"]);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    scenario
        .frames
        .iter()
        .map(|f| match &inst.generator {
            Generator::Irm { points_per_object } => {
                irm_detect(f, &scenario.sensor, *points_per_object)
            }
            Generator::Ddm(model) => ddm_sample(f, &scenario.sensor, model, &mut rng),
            Generator::Rtm(params) => rtm_detect(f, &scenario.sensor, params, &mut rng),
            Generator::Reference(params) => reference_detect(f, &scenario.sensor, params, &mut rng),
        })
        .collect()
}

/// Normalization and weighting choices for the gap computation.
#[derive(Clone, Debug, Default)]
pub struct GapSettings {
    /// Per-metric fixed (min, max); metrics listed here are rescaled
    /// through the fixed range and clamped, the rest use per-scenario
    /// min-max across models.
    pub fixed_ranges: BTreeMap<MetricId, (f64, f64)>,
    /// Within-level metric weights, default 1 each.
    pub metric_weights: BTreeMap<MetricId, f64>,
    /// Across-level weights, default equal.
    pub level_weights: [f64; 4],
}

impl GapSettings {
    pub fn equal_weights() -> GapSettings {
        GapSettings {
            fixed_ranges: BTreeMap::new(),
            metric_weights: BTreeMap::new(),
            level_weights: [1.0; 4],
        }
    }
}

/// All eleven metric records for one model against the reference.
///
/// Frame policy: OSPA, the cardinality error and PNE are defined for empty
/// inputs and cover every frame. The distribution distances (DPP, WD and
/// the per-feature WDs) skip frames where both clouds are empty and charge
/// the configured worst-case cap when exactly one is, counting the frame as
/// capped. IoU skips frames with no tracks on either side and charges 0 for
/// unmatched tracks. RMSE pools matched pairs over the whole scenario; a
/// model that never matches a reference track is an error.
pub fn score_model(
    model_clouds: &[PointCloud],
    model_tracks: &[Vec<TrackEstimate>],
    reference_clouds: &[PointCloud],
    reference_tracks: &[Vec<TrackEstimate>],
    params: &MetricParams,
) -> Result<Vec<MetricRecord>> {
    params.validate()?;
    let frames = reference_clouds.len();
    if model_clouds.len() != frames
        || model_tracks.len() != frames
        || reference_tracks.len() != frames
    {
        return Err(Error::FrameMisalignment(format!(
            "scoring needs aligned sequences, got {}/{}/{}/{} frames",
            model_clouds.len(),
            model_tracks.len(),
            frames,
            reference_tracks.len()
        )));
    }

    let mut per_frame: BTreeMap<MetricId, Vec<(usize, f64)>> =
        MetricId::all().into_iter().map(|id| (id, Vec::new())).collect();
    let mut capped: BTreeMap<MetricId, usize> =
        MetricId::all().into_iter().map(|id| (id, 0)).collect();
    let push =
        |map: &mut BTreeMap<MetricId, Vec<(usize, f64)>>, id: MetricId, fi: usize, v: f64| {
            map.get_mut(&id).expect("registry").push((fi, v));
        };
    // Per-axis errors pooled over every matched pair of the scenario.
    let mut pool_x: Vec<f64> = Vec::new();
    let mut pool_y: Vec<f64> = Vec::new();

    for fi in 0..frames {
        let sim = &model_clouds[fi];
        let re = &reference_clouds[fi];
        let frame_index = re.frame_index;

        // Explicit metrics on the raw clouds.
        push(&mut per_frame, MetricId::Pne, frame_index, pne(sim.len(), re.len()) as f64);
        match (sim.is_empty(), re.is_empty()) {
            (true, true) => {} // nothing to compare
            (false, false) => {
                let xs = cloud_points(sim, params.doppler_weight);
                let ys = cloud_points(re, params.doppler_weight);
                push(&mut per_frame, MetricId::Dpp, frame_index, dpp_worst(&xs, &ys)?);
                push(&mut per_frame, MetricId::Wd, frame_index, wasserstein(&xs, &ys)?);
                let feature = |f: fn(&crate::sensor::Detection) -> f64,
                               c: &PointCloud|
                 -> Vec<f64> { c.detections.iter().map(f).collect() };
                push(
                    &mut per_frame,
                    MetricId::WdR,
                    frame_index,
                    wd_1d(&feature(|d| d.r, sim), &feature(|d| d.r, re))?,
                );
                push(
                    &mut per_frame,
                    MetricId::WdPhi,
                    frame_index,
                    wd_1d(&feature(|d| d.phi, sim), &feature(|d| d.phi, re))?,
                );
                push(
                    &mut per_frame,
                    MetricId::WdDoppler,
                    frame_index,
                    wd_1d(&feature(|d| d.doppler, sim), &feature(|d| d.doppler, re))?,
                );
            }
            _ => {
                // One side empty: charge the worst case and flag the frame.
                for (id, cap) in [
                    (MetricId::Dpp, params.cap_position),
                    (MetricId::Wd, params.cap_position),
                    (MetricId::WdR, params.cap_position),
                    (MetricId::WdPhi, params.cap_azimuth),
                    (MetricId::WdDoppler, params.cap_doppler),
                ] {
                    push(&mut per_frame, id, frame_index, cap);
                    *capped.get_mut(&id).expect("registry") += 1;
                }
            }
        }

        // Implicit metrics on the confirmed tracks.
        let sim_tracks = &model_tracks[fi];
        let ref_tracks = &reference_tracks[fi];
        let sim_pos: Vec<Vec2> = sim_tracks.iter().map(|t| Vec2::new(t.x, t.y)).collect();
        let ref_pos: Vec<Vec2> = ref_tracks.iter().map(|t| Vec2::new(t.x, t.y)).collect();
        push(
            &mut per_frame,
            MetricId::Ospa,
            frame_index,
            ospa(&sim_pos, &ref_pos, params.ospa_p, params.ospa_c)?,
        );
        push(
            &mut per_frame,
            MetricId::CardinalityError,
            frame_index,
            sim_tracks.len().abs_diff(ref_tracks.len()) as f64,
        );

        let pairs = match_by_distance(&sim_pos, &ref_pos, params.match_gate);
        if !(sim_tracks.is_empty() && ref_tracks.is_empty()) {
            let mut iou_sum = 0.0;
            for &(i, j) in &pairs {
                iou_sum += iou(&sim_tracks[i].bbox, &ref_tracks[j].bbox)?;
            }
            // Unmatched tracks on either side count as zero overlap.
            let contributors = sim_tracks.len() + ref_tracks.len() - pairs.len();
            push(&mut per_frame, MetricId::Iou, frame_index, iou_sum / contributors as f64);
        }
        if !pairs.is_empty() {
            let (mut fx, mut fy) = (Vec::new(), Vec::new());
            for &(i, j) in &pairs {
                fx.push(sim_tracks[i].x - ref_tracks[j].x);
                fy.push(sim_tracks[i].y - ref_tracks[j].y);
            }
            push(&mut per_frame, MetricId::RmseX, frame_index, rmse(&fx)?);
            push(&mut per_frame, MetricId::RmseY, frame_index, rmse(&fy)?);
            pool_x.extend(fx);
            pool_y.extend(fy);
        }
    }

    MetricId::all()
        .into_iter()
        .map(|id| {
            let values = per_frame.remove(&id).expect("registry");
            let scenario_value = match id {
                MetricId::RmseX => rmse(&pool_x).map_err(|_| {
                    Error::Unevaluable(
                        "no track of the model ever matched a reference track".into(),
                    )
                })?,
                MetricId::RmseY => rmse(&pool_y).map_err(|_| {
                    Error::Unevaluable(
                        "no track of the model ever matched a reference track".into(),
                    )
                })?,
                _ => {
                    if values.is_empty() {
                        0.0 // every frame skipped: nothing deviated from nothing
                    } else {
                        values.iter().map(|(_, v)| v).sum::<f64>() / values.len() as f64
                    }
                }
            };
            Ok(MetricRecord { id, per_frame: values, scenario_value, capped_frames: capped[&id] })
        })
        .collect()
}

/// Generated clouds and perception output of one model on one scenario.
pub struct ModelRun {
    pub name: String,
    pub clouds: Vec<PointCloud>,
    pub tracks: Vec<Vec<TrackEstimate>>,
}

/// Everything one scenario evaluation produced, for callers that persist
/// the intermediate logs alongside the report.
pub struct ScenarioRun {
    pub report: GapReport,
    pub reference: ModelRun,
    pub models: Vec<ModelRun>,
}

/// Run the complete comparison for one scenario and model set.
///
/// `models` needs at least two entries unless fixed normalization ranges
/// cover every metric; a reference that never detects anything makes the
/// scenario unevaluable.
pub fn evaluate_scenario(
    scenario: &Scenario,
    models: &[ModelInstance],
    reference: &ReferenceParams,
    perception: &PerceptionConfig,
    metric_params: &MetricParams,
    settings: &GapSettings,
    master_seed: u64,
) -> Result<GapReport> {
    evaluate_scenario_full(
        scenario,
        models,
        reference,
        perception,
        metric_params,
        settings,
        master_seed,
    )
    .map(|run| run.report)
}

/// [`evaluate_scenario`], keeping the generated clouds and tracks.
pub fn evaluate_scenario_full(
    scenario: &Scenario,
    models: &[ModelInstance],
    reference: &ReferenceParams,
    perception: &PerceptionConfig,
    metric_params: &MetricParams,
    settings: &GapSettings,
    master_seed: u64,
) -> Result<ScenarioRun> {
    reference.validate()?;
    if models.is_empty() {
        return Err(Error::InvalidArgument("need at least one model to evaluate".into()));
    }
    let ref_instance = ModelInstance {
        name: REFERENCE_STREAM.into(),
        stream: REFERENCE_STREAM.into(),
        generator: Generator::Reference(reference.clone()),
    };
    let ref_clouds = generate_clouds(scenario, &ref_instance, master_seed);
    if ref_clouds.iter().all(PointCloud::is_empty) {
        return Err(Error::Unevaluable(format!(
            "reference sensor never detected anything in {}",
            scenario.name()
        )));
    }
    let ref_tracks = run_perception(&ref_clouds, scenario, perception)?;

    let mut records: Vec<Vec<MetricRecord>> = Vec::with_capacity(models.len());
    let mut runs: Vec<ModelRun> = Vec::with_capacity(models.len());
    for inst in models {
        let clouds = generate_clouds(scenario, inst, master_seed);
        let tracks = run_perception(&clouds, scenario, perception)?;
        records.push(score_model(&clouds, &tracks, &ref_clouds, &ref_tracks, metric_params)?);
        runs.push(ModelRun { name: inst.name.clone(), clouds, tracks });
    }

    // Column-wise normalization across the model set.
    let mut normalized: Vec<Vec<f64>> =
        vec![Vec::with_capacity(MetricId::all().len()); models.len()];
    let mut ranges: Vec<NormalizationRange> = Vec::with_capacity(MetricId::all().len());
    for (mi, id) in MetricId::all().into_iter().enumerate() {
        let raw: Vec<f64> = records.iter().map(|r| r[mi].scenario_value).collect();
        let fixed = settings.fixed_ranges.get(&id).copied();
        let column = normalize_column(&raw, id.direction(), fixed)?;
        let (lo, hi) = fixed.unwrap_or_else(|| {
            (
                raw.iter().cloned().fold(f64::INFINITY, f64::min),
                raw.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            )
        });
        ranges.push(NormalizationRange { metric: id, min: lo, max: hi });
        for (row, v) in normalized.iter_mut().zip(column) {
            row.push(v);
        }
    }

    let mut results: Vec<ModelResult> = Vec::with_capacity(models.len());
    for ((inst, recs), norm) in models.iter().zip(&records).zip(&normalized) {
        let values: Vec<(MetricId, f64)> =
            MetricId::all().into_iter().zip(norm.iter().copied()).collect();
        let levels = aggregate_levels(&values, &settings.metric_weights)?;
        let g = gap(&levels, &settings.level_weights)?;
        let metrics = recs
            .iter()
            .zip(norm)
            .map(|(rec, &normalized)| MetricRow {
                id: rec.id,
                raw: rec.scenario_value,
                normalized,
                capped_frames: rec.capped_frames,
            })
            .collect();
        results.push(ModelResult { model: inst.name.clone(), metrics, levels, gap: g });
    }

    let report = GapReport {
        scenario: scenario.name().to_string(),
        seed: master_seed,
        models: results,
        ranges,
    };
    Ok(ScenarioRun {
        report,
        reference: ModelRun {
            name: REFERENCE_STREAM.to_string(),
            clouds: ref_clouds,
            tracks: ref_tracks,
        },
        models: runs,
    })
}

/// The drives used to fit the data-driven model: three single-target
/// recordings covering approach, follow and orbit geometry. Labels are
/// distinct from every evaluation scenario, so training draws never
/// overlap evaluation draws.
pub fn training_scenarios(params: &ScenarioParams, dt: f64) -> Result<Vec<Scenario>> {
    let approach =
        build_scenario(ScenarioKind::OncomingS, params, dt, 10.0)?.with_label("ddm_train_approach");
    let follow_params = ScenarioParams { start_range: Some(30.0), ..params.clone() };
    let follow = build_scenario(ScenarioKind::LeadingS, &follow_params, dt, 10.0)?
        .with_label("ddm_train_follow");
    let orbit =
        build_scenario(ScenarioKind::EightS, params, dt, 30.0)?.with_label("ddm_train_orbit");
    Ok(vec![approach, follow, orbit])
}

/// Fit the data-driven model on reference recordings of the training
/// drives. Only frames where the target is visible contribute; each
/// contributes its full cloud (clutter included, the gate sorts it out).
pub fn train_ddm(
    scenario_params: &ScenarioParams,
    dt: f64,
    reference: &ReferenceParams,
    cfg: &DdmConfig,
    master_seed: u64,
) -> Result<DdmModel> {
    let mut pairs: Vec<(TargetInSensorFrame, PointCloud)> = Vec::new();
    for sc in training_scenarios(scenario_params, dt)? {
        let inst = ModelInstance {
            name: REFERENCE_STREAM.into(),
            stream: REFERENCE_STREAM.into(),
            generator: Generator::Reference(reference.clone()),
        };
        let clouds = generate_clouds(&sc, &inst, master_seed);
        for (frame, cloud) in sc.frames.iter().zip(clouds) {
            debug_assert_eq!(frame.targets.len(), 1, "training drives are single-target");
            if frame_visibility(frame, 0, &sc.sensor) <= 0.0 {
                continue;
            }
            let t = TargetInSensorFrame::from_states(&frame.targets[0], &frame.ego, &sc.sensor);
            pairs.push((t, cloud));
        }
    }
    ddm_fit(&pairs, cfg)
}
