//! CPython extension module for the radargap toolkit.
//!
//! `cargo build -p radargap-py` produces `libradargap.so`; renamed to
//! `radargap.so` somewhere on `sys.path` it imports as a regular module
//! (`python/smoke_test.py` automates the build-and-rename dance). Metric
//! functions work on plain tuples; [`Scenario`], [`simulate`] and
//! [`evaluate`] wrap the full simulation and scoring pipeline.

use pyo3::exceptions::{PyIndexError, PyValueError};
use pyo3::prelude::*;

use radargap_core::geometry::{OrientedBox, Vec2};
use radargap_core::io::write_report;
use radargap_core::metrics::{pointcloud, tracking, MetricParams, MetricPoint3};
use radargap_core::perception::PerceptionConfig;
use radargap_core::pipeline::{
    evaluate_scenario, generate_clouds, GapSettings, Generator, ModelInstance,
};
use radargap_core::scenario::{
    build_scenario, to_sensor_frame, Frame, ObjectState, Scenario as CoreScenario, ScenarioKind,
    ScenarioParams,
};
use radargap_core::sensor::reference::ReferenceParams;
use radargap_core::sensor::rtm::RtmParams;

fn value_err(e: radargap_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_points(xs: &[(f64, f64, f64)]) -> Vec<MetricPoint3> {
    xs.iter().map(|&(x, y, d)| MetricPoint3::new(x, y, d)).collect()
}

fn to_vec2(xs: &[(f64, f64)]) -> Vec<Vec2> {
    xs.iter().map(|&(x, y)| Vec2::new(x, y)).collect()
}

fn to_oriented_box(b: (f64, f64, f64, f64, f64)) -> OrientedBox {
    OrientedBox::new(Vec2::new(b.0, b.1), b.2, b.3, b.4)
}

fn state_tuple(s: &ObjectState) -> (u32, f64, f64, f64, f64, f64, f64) {
    (s.id, s.x, s.y, s.yaw, s.speed, s.length, s.width)
}

/// A model name maps onto its generator with library defaults; streams are
/// keyed by the same name, so "reference" replays the exact clouds the
/// evaluation scores against.
fn model_instance(kind: &str, points_per_object: usize) -> PyResult<ModelInstance> {
    let generator = match kind {
        "irm" => Generator::Irm { points_per_object },
        "rtm" => Generator::Rtm(RtmParams::default()),
        "reference" => Generator::Reference(ReferenceParams::default()),
        "ddm" => {
            return Err(PyValueError::new_err(
                "ddm needs training drives; use the radargap binary for data-driven models",
            ))
        }
        other => return Err(PyValueError::new_err(format!("unknown model kind {other:?}"))),
    };
    Ok(ModelInstance { name: kind.into(), stream: kind.into(), generator })
}

/// A deterministic driving scenario: ego track, target tracks and the
/// mounted sensor pose, sampled at a fixed time step.
#[pyclass(frozen)]
struct Scenario {
    inner: CoreScenario,
}

#[pymethods]
impl Scenario {
    /// Build a named scenario; `duration` defaults to the scenario's
    /// standard length. See `scenario_names()` for valid names.
    #[new]
    #[pyo3(signature = (name, dt = 0.05, duration = None))]
    fn new(name: &str, dt: f64, duration: Option<f64>) -> PyResult<Self> {
        let kind = ScenarioKind::from_name(name).map_err(value_err)?;
        let duration = duration.unwrap_or_else(|| kind.default_duration());
        let inner =
            build_scenario(kind, &ScenarioParams::default(), dt, duration).map_err(value_err)?;
        Ok(Scenario { inner })
    }

    #[getter]
    fn name(&self) -> &str {
        self.inner.name()
    }

    #[getter]
    fn dt(&self) -> f64 {
        self.inner.dt
    }

    #[getter]
    fn duration(&self) -> f64 {
        self.inner.duration()
    }

    #[getter]
    fn num_frames(&self) -> usize {
        self.inner.frames.len()
    }

    /// Ego state at frame `i` as (id, x, y, yaw, speed, length, width).
    fn ego(&self, i: usize) -> PyResult<(u32, f64, f64, f64, f64, f64, f64)> {
        Ok(state_tuple(&self.frame(i)?.ego))
    }

    /// Target states at frame `i`, each (id, x, y, yaw, speed, length, width).
    fn targets(&self, i: usize) -> PyResult<Vec<(u32, f64, f64, f64, f64, f64, f64)>> {
        Ok(self.frame(i)?.targets.iter().map(state_tuple).collect())
    }

    /// Ideal sensor-frame observations of every target at frame `i`, each
    /// (range, azimuth, radial_velocity, relative_yaw).
    fn observations(&self, i: usize) -> PyResult<Vec<(f64, f64, f64, f64)>> {
        let f = self.frame(i)?;
        Ok(f.targets
            .iter()
            .map(|t| {
                let o = to_sensor_frame(t, &f.ego, &self.inner.sensor);
                (o.range, o.azimuth, o.radial_velocity, o.relative_yaw)
            })
            .collect())
    }

    fn __repr__(&self) -> String {
        format!(
            "Scenario({:?}, dt={}, frames={})",
            self.inner.name(),
            self.inner.dt,
            self.inner.frames.len()
        )
    }
}

impl Scenario {
    fn frame(&self, i: usize) -> PyResult<&Frame> {
        self.inner.frames.get(i).ok_or_else(|| {
            PyIndexError::new_err(format!(
                "frame {i} out of range ({} frames)",
                self.inner.frames.len()
            ))
        })
    }
}

/// Names of the built-in scenarios.
#[pyfunction]
fn scenario_names() -> Vec<&'static str> {
    ScenarioKind::all().iter().map(|k| k.name()).collect()
}

/// Mean distance from each point of `a` to its nearest neighbour in `b`.
/// Points are (x, y, weighted_doppler) tuples. Non-symmetric.
#[pyfunction]
fn dpp(a: Vec<(f64, f64, f64)>, b: Vec<(f64, f64, f64)>) -> PyResult<f64> {
    pointcloud::dpp(&to_points(&a), &to_points(&b)).map_err(value_err)
}

/// Symmetrized nearest-neighbour divergence: the worse direction of the two.
#[pyfunction]
fn dpp_worst(a: Vec<(f64, f64, f64)>, b: Vec<(f64, f64, f64)>) -> PyResult<f64> {
    pointcloud::dpp_worst(&to_points(&a), &to_points(&b)).map_err(value_err)
}

/// Exact Earth Mover's Distance between the uniform empirical distributions
/// on two point sets, with Euclidean ground distance.
#[pyfunction]
fn wasserstein(a: Vec<(f64, f64, f64)>, b: Vec<(f64, f64, f64)>) -> PyResult<f64> {
    pointcloud::wasserstein(&to_points(&a), &to_points(&b)).map_err(value_err)
}

/// 1-D Wasserstein-1 distance between two scalar sample sets.
#[pyfunction]
fn wd_1d(a: Vec<f64>, b: Vec<f64>) -> PyResult<f64> {
    pointcloud::wd_1d(&a, &b).map_err(value_err)
}

/// Absolute difference in point counts.
#[pyfunction]
fn pne(m: usize, n: usize) -> usize {
    pointcloud::pne(m, n)
}

/// OSPA distance between 2-D point sets with order `p` and cutoff `c`.
#[pyfunction]
#[pyo3(signature = (a, b, p = 2.0, c = 5.0))]
fn ospa(a: Vec<(f64, f64)>, b: Vec<(f64, f64)>, p: f64, c: f64) -> PyResult<f64> {
    tracking::ospa(&to_vec2(&a), &to_vec2(&b), p, c).map_err(value_err)
}

/// Intersection over union of two oriented boxes, each given as
/// (center_x, center_y, yaw, length, width).
#[pyfunction]
fn iou(a: (f64, f64, f64, f64, f64), b: (f64, f64, f64, f64, f64)) -> PyResult<f64> {
    tracking::iou(&to_oriented_box(a), &to_oriented_box(b)).map_err(value_err)
}

/// Run one sensor model over a scenario. `model` is "irm", "rtm" or
/// "reference"; the result is one detection list per frame, each detection
/// a (range, azimuth, doppler) tuple. The same (scenario, model, seed)
/// triple always yields the same clouds.
#[pyfunction]
#[pyo3(signature = (scenario, model, seed = 0, points_per_object = 8))]
fn simulate(
    scenario: &Scenario,
    model: &str,
    seed: u64,
    points_per_object: usize,
) -> PyResult<Vec<Vec<(f64, f64, f64)>>> {
    let inst = model_instance(model, points_per_object)?;
    let clouds = generate_clouds(&scenario.inner, &inst, seed);
    Ok(clouds
        .iter()
        .map(|c| c.detections.iter().map(|d| (d.r, d.phi, d.doppler)).collect())
        .collect())
}

/// Score `models` (each "irm", "rtm" or "reference") against the built-in
/// reference sensor on one scenario and return the gap report as a JSON
/// string. Needs at least two models so per-metric min-max normalization
/// is defined.
#[pyfunction]
#[pyo3(signature = (scenario, models, seed = 0))]
fn evaluate(scenario: &Scenario, models: Vec<String>, seed: u64) -> PyResult<String> {
    let instances = models.iter().map(|m| model_instance(m, 8)).collect::<PyResult<Vec<_>>>()?;
    let report = evaluate_scenario(
        &scenario.inner,
        &instances,
        &ReferenceParams::default(),
        &PerceptionConfig::default(),
        &MetricParams::default(),
        &GapSettings::equal_weights(),
        seed,
    )
    .map_err(value_err)?;
    let mut buf = Vec::new();
    write_report(&mut buf, &report).map_err(value_err)?;
    String::from_utf8(buf).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Sensor-model fidelity toolkit: point-cloud and tracking metrics,
/// deterministic scenario simulation and sim-to-reality gap evaluation.
#[pymodule]
fn radargap(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Scenario>()?;
    m.add_function(wrap_pyfunction!(scenario_names, m)?)?;
    m.add_function(wrap_pyfunction!(dpp, m)?)?;
    m.add_function(wrap_pyfunction!(dpp_worst, m)?)?;
    m.add_function(wrap_pyfunction!(wasserstein, m)?)?;
    m.add_function(wrap_pyfunction!(wd_1d, m)?)?;
    m.add_function(wrap_pyfunction!(pne, m)?)?;
    m.add_function(wrap_pyfunction!(ospa, m)?)?;
    m.add_function(wrap_pyfunction!(iou, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
