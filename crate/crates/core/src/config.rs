//! Versioned run configuration.
//!
//! A run is described by one TOML file. Every section has complete
//! defaults, so `version = 1` alone is a valid config that evaluates the
//! ideal, data-driven and ray-tracing models on all eight built-in
//! scenarios. Unknown keys are rejected everywhere; validation reports the
//! offending field by name.

use crate::error::{Error, Result};
use crate::metrics::{MetricId, MetricParams};
use crate::perception::PerceptionConfig;
use crate::pipeline::{GapSettings, Generator, ModelInstance};
use crate::scenario::{build_scenario, Scenario, ScenarioKind, ScenarioParams, SensorPose};
use crate::sensor::ddm::{DdmConfig, DdmModel};
use crate::sensor::reference::ReferenceParams;
use crate::sensor::rtm::RtmParams;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

/// Schema version this build reads and writes.
pub const CONFIG_VERSION: u32 = 1;

/// Name of the environment variable that overrides `out_dir`.
pub const OUT_DIR_ENV: &str = "RADARGAP_OUT";

/// One scenario to evaluate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioEntry {
    /// One of the built-in category names (`oncoming_s`, ..., `crossing_m`).
    pub name: String,
    /// Simulated seconds; omitted picks the category default.
    #[serde(default)]
    pub duration: Option<f64>,
    /// Geometry overrides. The sensor given here is ignored; the top-level
    /// sensor applies to every scenario.
    #[serde(default)]
    pub params: ScenarioParams,
}

impl ScenarioEntry {
    fn named(name: &str) -> ScenarioEntry {
        ScenarioEntry { name: name.to_string(), duration: None, params: ScenarioParams::default() }
    }
}

/// One sensor model to evaluate. `kind` picks the generator; the kind
/// specific section must match it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelEntry {
    /// One of `irm`, `ddm`, `rtm`, `reference`.
    pub kind: String,
    /// Report column name; defaults to the kind.
    #[serde(default)]
    pub name: Option<String>,
    /// Random-stream label; defaults to the name. Entries sharing a label
    /// consume identical random sequences, and the label `reference`
    /// replays the reference sensor's own draws.
    #[serde(default)]
    pub stream: Option<String>,
    /// `irm` only: shell samples per object (default 8).
    #[serde(default)]
    pub points_per_object: Option<usize>,
    /// `rtm` only: ray tracer parameters (default [`RtmParams::default`]).
    #[serde(default)]
    pub rtm: Option<RtmParams>,
    /// `reference` only: parameter override; omitted reuses the top-level
    /// `[reference]` section.
    #[serde(default)]
    pub reference: Option<ReferenceParams>,
}

impl ModelEntry {
    pub fn of_kind(kind: &str) -> ModelEntry {
        ModelEntry {
            kind: kind.to_string(),
            name: None,
            stream: None,
            points_per_object: None,
            rtm: None,
            reference: None,
        }
    }

    pub fn display_name(&self) -> &str {
        self.name.as_deref().unwrap_or(&self.kind)
    }

    pub fn stream_label(&self) -> &str {
        self.stream.as_deref().unwrap_or_else(|| self.display_name())
    }

    fn validate(&self, index: usize) -> Result<()> {
        let field = |suffix: &str| format!("models[{index}].{suffix}");
        let reject = |cond: bool, suffix: &str| -> Result<()> {
            if cond {
                Err(Error::invalid_config(
                    &field(suffix),
                    format!("not a `{}` model setting", self.kind),
                ))
            } else {
                Ok(())
            }
        };
        match self.kind.as_str() {
            "irm" => {
                reject(self.rtm.is_some(), "rtm")?;
                reject(self.reference.is_some(), "reference")?;
                if let Some(n) = self.points_per_object {
                    if n == 0 {
                        return Err(Error::invalid_config(
                            &field("points_per_object"),
                            "need at least one point",
                        ));
                    }
                }
            }
            "ddm" => {
                reject(self.points_per_object.is_some(), "points_per_object")?;
                reject(self.rtm.is_some(), "rtm")?;
                reject(self.reference.is_some(), "reference")?;
            }
            "rtm" => {
                reject(self.points_per_object.is_some(), "points_per_object")?;
                reject(self.reference.is_some(), "reference")?;
                if let Some(rtm) = &self.rtm {
                    rtm.validate()?;
                }
            }
            "reference" => {
                reject(self.points_per_object.is_some(), "points_per_object")?;
                reject(self.rtm.is_some(), "rtm")?;
                if let Some(reference) = &self.reference {
                    reference.validate()?;
                }
            }
            other => {
                return Err(Error::invalid_config(
                    &field("kind"),
                    format!("unknown model kind `{other}`"),
                ));
            }
        }
        if self.display_name().is_empty() {
            return Err(Error::invalid_config(&field("name"), "must not be empty"));
        }
        Ok(())
    }
}

/// Metric tunables; the two coverage-dependent caps may be left to derive
/// from the sensor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsConfig {
    pub doppler_weight: f64,
    pub ospa_p: f64,
    pub ospa_c: f64,
    pub match_gate: f64,
    /// Omitted derives the cap from the sensor's maximum range.
    pub cap_position: Option<f64>,
    /// Omitted derives the cap from the sensor's full angular coverage.
    pub cap_azimuth: Option<f64>,
    pub cap_doppler: f64,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        let base = MetricParams::default();
        MetricsConfig {
            doppler_weight: base.doppler_weight,
            ospa_p: base.ospa_p,
            ospa_c: base.ospa_c,
            match_gate: base.match_gate,
            cap_position: None,
            cap_azimuth: None,
            cap_doppler: base.cap_doppler,
        }
    }
}

impl MetricsConfig {
    pub fn resolve(&self, sensor: &SensorPose) -> MetricParams {
        MetricParams {
            doppler_weight: self.doppler_weight,
            ospa_p: self.ospa_p,
            ospa_c: self.ospa_c,
            match_gate: self.match_gate,
            cap_position: self.cap_position.unwrap_or(sensor.range_max),
            cap_azimuth: self.cap_azimuth.unwrap_or(2.0 * sensor.fov_azimuth),
            cap_doppler: self.cap_doppler,
        }
    }
}

/// Gap weighting and normalization choices, keyed by metric name.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GapConfig {
    /// Weights of the four fidelity levels in G.
    pub level_weights: [f64; 4],
    /// Per-metric weight inside its level; omitted metrics weigh 1.
    pub metric_weights: BTreeMap<String, f64>,
    /// Fixed normalization ranges as `[min, max]`; listed metrics are
    /// rescaled through the fixed range and clamped instead of the
    /// per-scenario min-max across models.
    pub fixed_ranges: BTreeMap<String, [f64; 2]>,
}

impl Default for GapConfig {
    fn default() -> Self {
        GapConfig {
            level_weights: [1.0; 4],
            metric_weights: BTreeMap::new(),
            fixed_ranges: BTreeMap::new(),
        }
    }
}

impl GapConfig {
    pub fn resolve(&self) -> Result<GapSettings> {
        let parse = |name: &str, field: &str| -> Result<MetricId> {
            MetricId::from_name(name).ok_or_else(|| {
                Error::invalid_config(field, format!("unknown metric name `{name}`"))
            })
        };
        let mut settings = GapSettings {
            fixed_ranges: BTreeMap::new(),
            metric_weights: BTreeMap::new(),
            level_weights: self.level_weights,
        };
        for (name, w) in &self.metric_weights {
            let id = parse(name, "gap.metric_weights")?;
            if !(w.is_finite() && *w > 0.0) {
                return Err(Error::invalid_config(
                    "gap.metric_weights",
                    format!("weight of {name} must be positive and finite"),
                ));
            }
            settings.metric_weights.insert(id, *w);
        }
        for (name, range) in &self.fixed_ranges {
            let id = parse(name, "gap.fixed_ranges")?;
            let [lo, hi] = *range;
            if !(lo.is_finite() && hi.is_finite() && hi > lo) {
                return Err(Error::invalid_config(
                    "gap.fixed_ranges",
                    format!("range of {name} must be finite with max > min"),
                ));
            }
            settings.fixed_ranges.insert(id, (lo, hi));
        }
        for w in self.level_weights {
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::invalid_config(
                    "gap.level_weights",
                    "must be non-negative and finite",
                ));
            }
        }
        if self.level_weights.iter().sum::<f64>() <= 0.0 {
            return Err(Error::invalid_config("gap.level_weights", "must not all be zero"));
        }
        Ok(settings)
    }
}

/// Complete description of an evaluation run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationConfig {
    /// Schema version; this build accepts only [`CONFIG_VERSION`].
    pub version: u32,
    /// Master seed. Every random stream of the run is derived from it, per
    /// (scenario, stream label), so adding a model never perturbs the
    /// draws of the others.
    pub seed: u64,
    /// Report output directory; `RADARGAP_OUT` wins over it.
    pub out_dir: PathBuf,
    /// Concurrent scenario jobs; 0 uses the machine's parallelism.
    pub jobs: usize,
    /// Frame period in seconds, shared by evaluation and training drives.
    pub dt: f64,
    /// The one sensor pose of the run, applied to every scenario.
    pub sensor: SensorPose,
    pub scenarios: Vec<ScenarioEntry>,
    pub models: Vec<ModelEntry>,
    /// Reference sensor standing in for the real recording.
    pub reference: ReferenceParams,
    pub perception: PerceptionConfig,
    pub metrics: MetricsConfig,
    pub gap: GapConfig,
    /// Training knobs for `ddm` models; `range_max` is always replaced by
    /// the sensor's maximum range.
    pub ddm: DdmConfig,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        EvaluationConfig {
            version: CONFIG_VERSION,
            seed: 42,
            out_dir: PathBuf::from("runs"),
            jobs: 1,
            dt: 0.05,
            sensor: SensorPose::default(),
            scenarios: ScenarioKind::all().iter().map(|k| ScenarioEntry::named(k.name())).collect(),
            models: vec![
                ModelEntry::of_kind("irm"),
                ModelEntry::of_kind("ddm"),
                ModelEntry::of_kind("rtm"),
            ],
            reference: ReferenceParams::default(),
            perception: PerceptionConfig::default(),
            metrics: MetricsConfig::default(),
            gap: GapConfig::default(),
            ddm: DdmConfig::default(),
        }
    }
}

impl EvaluationConfig {
    pub fn from_toml_str(text: &str) -> Result<EvaluationConfig> {
        let config: EvaluationConfig = toml::from_str(text).map_err(|e| Error::MalformedFile {
            path: "<config>".to_string(),
            message: e.to_string(),
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<EvaluationConfig> {
        let text = std::fs::read_to_string(path)?;
        let config: EvaluationConfig = toml::from_str(&text).map_err(|e| Error::MalformedFile {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            return Err(Error::invalid_config(
                "version",
                format!("unsupported version {}, this build reads {CONFIG_VERSION}", self.version),
            ));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::invalid_config("dt", "must be positive and finite"));
        }
        self.sensor.validate()?;
        self.reference.validate()?;
        self.perception.validate()?;
        self.metrics.resolve(&self.sensor).validate()?;
        self.gap.resolve()?;
        self.ddm_config().validate()?;

        if self.scenarios.is_empty() {
            return Err(Error::invalid_config("scenarios", "need at least one scenario"));
        }
        let mut seen = BTreeSet::new();
        for (i, entry) in self.scenarios.iter().enumerate() {
            ScenarioKind::from_name(&entry.name)?;
            if !seen.insert(entry.name.as_str()) {
                return Err(Error::invalid_config(
                    &format!("scenarios[{i}].name"),
                    format!("`{}` listed twice", entry.name),
                ));
            }
            if let Some(d) = entry.duration {
                if !(d > 0.0 && d.is_finite()) {
                    return Err(Error::invalid_config(
                        &format!("scenarios[{i}].duration"),
                        "must be positive and finite",
                    ));
                }
            }
            entry.params.validate()?;
        }

        if self.models.is_empty() {
            return Err(Error::invalid_config("models", "need at least one model"));
        }
        let mut names = BTreeSet::new();
        for (i, entry) in self.models.iter().enumerate() {
            entry.validate(i)?;
            if !names.insert(entry.display_name()) {
                return Err(Error::invalid_config(
                    &format!("models[{i}].name"),
                    format!("`{}` used twice", entry.display_name()),
                ));
            }
        }
        Ok(())
    }

    /// [`validate`](Self::validate) plus the evaluation-only rule: min-max
    /// normalization needs a spread across models, so a lone model is only
    /// scorable against configured absolute ranges. Simulation has no such
    /// constraint.
    pub fn validate_for_evaluation(&self) -> Result<()> {
        self.validate()?;
        if self.models.len() < 2 {
            let covered: BTreeSet<&str> = self.fixed_range_names().collect();
            if let Some(missing) = MetricId::all().iter().find(|id| !covered.contains(id.name())) {
                return Err(Error::invalid_config(
                    "models",
                    format!(
                        "a single model needs gap.fixed_ranges for every metric, missing {}",
                        missing.name()
                    ),
                ));
            }
        }
        Ok(())
    }

    fn fixed_range_names(&self) -> impl Iterator<Item = &str> {
        self.gap.fixed_ranges.keys().map(String::as_str)
    }

    /// Output directory after the environment override.
    pub fn effective_out_dir(&self) -> PathBuf {
        std::env::var_os(OUT_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| self.out_dir.clone())
    }

    /// Build every configured scenario with the run's sensor stamped in.
    pub fn build_scenarios(&self) -> Result<Vec<Scenario>> {
        self.scenarios
            .iter()
            .map(|entry| {
                let kind = ScenarioKind::from_name(&entry.name)?;
                let params = ScenarioParams { sensor: self.sensor, ..entry.params.clone() };
                let duration = entry.duration.unwrap_or_else(|| kind.default_duration());
                build_scenario(kind, &params, self.dt, duration)
            })
            .collect()
    }

    pub fn metric_params(&self) -> MetricParams {
        self.metrics.resolve(&self.sensor)
    }

    pub fn gap_settings(&self) -> Result<GapSettings> {
        self.gap.resolve()
    }

    /// Training configuration with the sensor's coverage stamped in, so the
    /// learned count model always bins the full measurable range.
    pub fn ddm_config(&self) -> DdmConfig {
        DdmConfig { range_max: self.sensor.range_max, ..self.ddm }
    }

    /// Whether any configured model requires the trained data-driven model.
    pub fn needs_ddm(&self) -> bool {
        self.models.iter().any(|m| m.kind == "ddm")
    }

    /// Turn the model entries into runnable instances. `ddm` must be given
    /// when a `ddm` entry is configured.
    pub fn instantiate_models(&self, ddm: Option<&DdmModel>) -> Result<Vec<ModelInstance>> {
        self.models
            .iter()
            .enumerate()
            .map(|(i, entry)| {
                let generator = match entry.kind.as_str() {
                    "irm" => {
                        Generator::Irm { points_per_object: entry.points_per_object.unwrap_or(8) }
                    }
                    "ddm" => {
                        let model = ddm.ok_or_else(|| {
                            Error::InvalidArgument(
                                "a ddm model entry needs a trained model".to_string(),
                            )
                        })?;
                        Generator::Ddm(Box::new(model.clone()))
                    }
                    "rtm" => Generator::Rtm(entry.rtm.clone().unwrap_or_default()),
                    "reference" => Generator::Reference(
                        entry.reference.clone().unwrap_or_else(|| self.reference.clone()),
                    ),
                    other => {
                        return Err(Error::invalid_config(
                            &format!("models[{i}].kind"),
                            format!("unknown model kind `{other}`"),
                        ));
                    }
                };
                Ok(ModelInstance {
                    name: entry.display_name().to_string(),
                    stream: entry.stream_label().to_string(),
                    generator,
                })
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_and_cover_the_full_run() {
        let config = EvaluationConfig::default();
        config.validate().expect("defaults are a valid run");
        assert_eq!(config.scenarios.len(), 8);
        assert_eq!(
            config.models.iter().map(ModelEntry::display_name).collect::<Vec<_>>(),
            ["irm", "ddm", "rtm"]
        );
        assert!(config.needs_ddm());
        let scenarios = config.build_scenarios().expect("buildable");
        assert_eq!(scenarios.len(), 8);
        // eight_s runs 30 s at 20 Hz.
        let eight = scenarios.iter().find(|s| s.name() == "eight_s").expect("eight_s");
        assert_eq!(eight.frames.len(), 600);
    }

    #[test]
    fn version_alone_is_a_complete_config() {
        let config = EvaluationConfig::from_toml_str("version = 1\n").expect("parse");
        assert_eq!(config, EvaluationConfig::default());
    }

    #[test]
    fn wrong_version_and_unknown_keys_are_rejected() {
        assert!(matches!(
            EvaluationConfig::from_toml_str("version = 2\n"),
            Err(Error::InvalidConfig { field, .. }) if field == "version"
        ));
        assert!(matches!(
            EvaluationConfig::from_toml_str("version = 1\nsead = 3\n"),
            Err(Error::MalformedFile { .. })
        ));
        assert!(matches!(
            EvaluationConfig::from_toml_str("version = 1\n[[scenarios]]\nname = \"figure_nine\"\n"),
            Err(Error::InvalidScenario(_))
        ));
    }

    #[test]
    fn kind_specific_sections_must_match_the_kind() {
        let text = concat!(
            "version = 1\n",
            "[[models]]\nkind = \"irm\"\n[models.rtm]\nray_count = 32\n",
            "[[models]]\nkind = \"rtm\"\n",
        );
        let err = EvaluationConfig::from_toml_str(text).unwrap_err();
        assert!(matches!(err, Error::InvalidConfig { field, .. } if field == "models[0].rtm"));
    }

    #[test]
    fn duplicate_names_are_rejected() {
        let text = concat!(
            "version = 1\n",
            "[[models]]\nkind = \"rtm\"\nname = \"a\"\n",
            "[[models]]\nkind = \"irm\"\nname = \"a\"\n",
        );
        assert!(EvaluationConfig::from_toml_str(text).is_err());
        let text = concat!(
            "version = 1\n",
            "[[scenarios]]\nname = \"eight_s\"\n",
            "[[scenarios]]\nname = \"eight_s\"\n",
        );
        assert!(EvaluationConfig::from_toml_str(text).is_err());
    }

    #[test]
    fn single_model_needs_full_fixed_ranges_for_evaluation() {
        let mut config = EvaluationConfig::default();
        config.models.truncate(1);
        // Simulating one model is fine; evaluating it is not.
        config.validate().expect("simulation-valid");
        assert!(matches!(
            config.validate_for_evaluation(),
            Err(Error::InvalidConfig { field, .. }) if field == "models"
        ));
        for id in MetricId::all() {
            config.gap.fixed_ranges.insert(id.name().to_string(), [0.0, 1.0]);
        }
        config.validate_for_evaluation().expect("fixed ranges make one model scorable");
        let settings = config.gap_settings().expect("resolve");
        assert_eq!(settings.fixed_ranges.len(), 11);
    }

    #[test]
    fn caps_derive_from_the_sensor_unless_set() {
        let mut config = EvaluationConfig::default();
        config.sensor.range_max = 50.0;
        config.sensor.fov_azimuth = 45f64.to_radians();
        let params = config.metric_params();
        assert_eq!(params.cap_position, 50.0);
        assert_eq!(params.cap_azimuth, 90f64.to_radians());
        config.metrics.cap_position = Some(7.0);
        assert_eq!(config.metric_params().cap_position, 7.0);
        // The learned count model always spans the sensor's coverage.
        assert_eq!(config.ddm_config().range_max, 50.0);
    }

    #[test]
    fn gap_section_parses_by_metric_name() {
        let text = concat!(
            "version = 1\n",
            "[gap]\n",
            "level_weights = [0.25, 0.25, 0.25, 0.25]\n",
            "[gap.metric_weights]\n",
            "WD = 2.0\n",
            "[gap.fixed_ranges]\n",
            "PNE = [0.0, 30.0]\n",
        );
        let config = EvaluationConfig::from_toml_str(text).expect("parse");
        let settings = config.gap_settings().expect("resolve");
        assert_eq!(settings.metric_weights.get(&MetricId::Wd), Some(&2.0));
        assert_eq!(settings.fixed_ranges.get(&MetricId::Pne), Some(&(0.0, 30.0)));
        let bad = "version = 1\n[gap.metric_weights]\nWDX = 1.0\n";
        assert!(EvaluationConfig::from_toml_str(bad).is_err());
    }

    #[test]
    fn serialization_round_trips() {
        let mut config = EvaluationConfig::default();
        config.seed = 7;
        config.scenarios[3].duration = Some(12.5);
        config.models[2].rtm = Some(RtmParams { ray_count: 32, ..RtmParams::default() });
        let text = toml::to_string_pretty(&config).expect("serialize");
        let back = EvaluationConfig::from_toml_str(&text).expect("parse");
        assert_eq!(back, config);
    }

    #[test]
    fn file_round_trip_and_env_override() {
        let path =
            std::env::temp_dir().join(format!("radargap-config-{}.toml", std::process::id()));
        std::fs::write(&path, "version = 1\nseed = 99\nout_dir = \"elsewhere\"\n").expect("write");
        let config = EvaluationConfig::load(&path).expect("load");
        std::fs::remove_file(&path).ok();
        assert_eq!(config.seed, 99);
        assert_eq!(config.out_dir, PathBuf::from("elsewhere"));
        // Env override is read at resolution time, not load time.
        assert_eq!(config.effective_out_dir(), PathBuf::from("elsewhere"));
    }

    #[test]
    fn instantiation_respects_streams_and_requires_ddm() {
        let text = concat!(
            "version = 1\n",
            "[[models]]\nkind = \"reference\"\nname = \"copy\"\nstream = \"reference\"\n",
            "[[models]]\nkind = \"irm\"\npoints_per_object = 6\n",
        );
        let config = EvaluationConfig::from_toml_str(text).expect("parse");
        assert!(!config.needs_ddm());
        let models = config.instantiate_models(None).expect("instantiate");
        assert_eq!(models[0].stream, "reference");
        assert_eq!(models[1].stream, "irm");
        assert!(matches!(models[1].generator, Generator::Irm { points_per_object: 6 }));

        let with_ddm = EvaluationConfig::default();
        assert!(with_ddm.instantiate_models(None).is_err());
    }
}
