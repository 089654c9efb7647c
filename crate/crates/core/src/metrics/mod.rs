//! The eleven evaluation metrics and their registry.
//!
//! Explicit metrics compare point clouds directly; implicit metrics compare
//! the tracking output computed from those clouds. Each metric belongs to
//! one of four fidelity levels and has a direction: `Down` means smaller is
//! better (a deviation), `Up` means larger is better (a quality).
//!
//! | level  | view               | metrics                          |
//! |--------|--------------------|----------------------------------|
//! | FL I   | implicit, object   | OSPA, IoU                        |
//! | FL II  | implicit, signal   | RMSE_x, RMSE_y, CardinalityError |
//! | FL III | explicit, object   | DPP, WD                          |
//! | FL IV  | explicit, signal   | PNE, WD_r, WD_phi, WD_doppler    |

pub mod assignment;
pub mod pointcloud;
pub mod tracking;
pub mod transport;

use serde::{Deserialize, Serialize};

/// Identifier of one evaluation metric.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MetricId {
    Ospa,
    Iou,
    RmseX,
    RmseY,
    CardinalityError,
    Dpp,
    Wd,
    Pne,
    WdR,
    WdPhi,
    WdDoppler,
}

/// Whether small values (Down) or large values (Up) indicate a better match
/// with the reference.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Down,
    Up,
}

impl Direction {
    pub fn name(&self) -> &'static str {
        match self {
            Direction::Down => "down",
            Direction::Up => "up",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FidelityLevel {
    I,
    II,
    III,
    IV,
}

impl FidelityLevel {
    pub fn name(&self) -> &'static str {
        match self {
            FidelityLevel::I => "FL I",
            FidelityLevel::II => "FL II",
            FidelityLevel::III => "FL III",
            FidelityLevel::IV => "FL IV",
        }
    }

    pub fn all() -> [FidelityLevel; 4] {
        [FidelityLevel::I, FidelityLevel::II, FidelityLevel::III, FidelityLevel::IV]
    }
}

impl MetricId {
    /// All metrics in report order: grouped by fidelity level, implicit
    /// levels first.
    pub fn all() -> [MetricId; 11] {
        use MetricId::*;
        [Ospa, Iou, RmseX, RmseY, CardinalityError, Dpp, Wd, Pne, WdR, WdPhi, WdDoppler]
    }

    pub fn name(&self) -> &'static str {
        match self {
            MetricId::Ospa => "OSPA",
            MetricId::Iou => "IoU",
            MetricId::RmseX => "RMSE_x",
            MetricId::RmseY => "RMSE_y",
            MetricId::CardinalityError => "CardinalityError",
            MetricId::Dpp => "DPP",
            MetricId::Wd => "WD",
            MetricId::Pne => "PNE",
            MetricId::WdR => "WD_r",
            MetricId::WdPhi => "WD_phi",
            MetricId::WdDoppler => "WD_doppler",
        }
    }

    pub fn from_name(name: &str) -> Option<MetricId> {
        MetricId::all().into_iter().find(|m| m.name() == name)
    }

    pub fn level(&self) -> FidelityLevel {
        match self {
            MetricId::Ospa | MetricId::Iou => FidelityLevel::I,
            MetricId::RmseX | MetricId::RmseY | MetricId::CardinalityError => FidelityLevel::II,
            MetricId::Dpp | MetricId::Wd => FidelityLevel::III,
            MetricId::Pne | MetricId::WdR | MetricId::WdPhi | MetricId::WdDoppler => {
                FidelityLevel::IV
            }
        }
    }

    /// IoU is the only larger-is-better metric.
    pub fn direction(&self) -> Direction {
        match self {
            MetricId::Iou => Direction::Up,
            _ => Direction::Down,
        }
    }
}

/// A point of the explicit comparison space: position plus the Doppler
/// coordinate, already scaled into meters by the configured unit weight.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricPoint3 {
    pub x: f64,
    pub y: f64,
    pub d: f64,
}

impl MetricPoint3 {
    pub fn new(x: f64, y: f64, d: f64) -> Self {
        MetricPoint3 { x, y, d }
    }

    pub fn dist(&self, o: &MetricPoint3) -> f64 {
        let dx = self.x - o.x;
        let dy = self.y - o.y;
        let dd = self.d - o.d;
        (dx * dx + dy * dy + dd * dd).sqrt()
    }
}

/// Tunables shared by the metric computations.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricParams {
    /// Meters of metric distance per m/s of Doppler difference.
    pub doppler_weight: f64,
    pub ospa_p: f64,
    pub ospa_c: f64,
    /// Gate for matching tracks between the simulated and reference runs.
    pub match_gate: f64,
    /// Worst-case value charged to DPP/WD/WD_r when exactly one cloud of a
    /// frame is empty. Defaults to the sensor's maximum range.
    pub cap_position: f64,
    /// Same, for WD_phi; defaults to the full angular coverage.
    pub cap_azimuth: f64,
    /// Same, for WD_doppler.
    pub cap_doppler: f64,
}

impl Default for MetricParams {
    fn default() -> Self {
        MetricParams {
            doppler_weight: 1.0,
            ospa_p: 2.0,
            ospa_c: 5.0,
            match_gate: 5.0,
            cap_position: 100.0,
            cap_azimuth: 2.0 * 60f64.to_radians(),
            cap_doppler: 10.0,
        }
    }
}

impl MetricParams {
    pub fn validate(&self) -> crate::Result<()> {
        let positive = [
            ("doppler_weight", self.doppler_weight),
            ("ospa_c", self.ospa_c),
            ("match_gate", self.match_gate),
            ("cap_position", self.cap_position),
            ("cap_azimuth", self.cap_azimuth),
            ("cap_doppler", self.cap_doppler),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(crate::Error::invalid_config(name, "must be positive and finite"));
            }
        }
        if !(self.ospa_p >= 1.0 && self.ospa_p.is_finite()) {
            return Err(crate::Error::invalid_config("ospa_p", "must be >= 1"));
        }
        Ok(())
    }
}

/// Per-metric outcome over one scenario.
///
/// `scenario_value` is the arithmetic mean of the per-frame values for
/// every metric except RMSE_x/RMSE_y, whose scenario value is the RMSE
/// pooled over all matched pairs of the scenario (the per-frame sequence
/// for those two is informational).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MetricRecord {
    pub id: MetricId,
    /// (frame index, value) for every frame that contributed.
    pub per_frame: Vec<(usize, f64)>,
    pub scenario_value: f64,
    /// Frames charged the worst-case cap because exactly one cloud was
    /// empty (explicit metrics only).
    pub capped_frames: usize,
}
