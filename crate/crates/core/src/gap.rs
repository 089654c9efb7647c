//! Normalization and aggregation into the simulation-to-reality gap.
//!
//! Raw metric values are not comparable across metrics (meters, counts,
//! probabilities), so each metric column is min-max rescaled to [0, 1]
//! across the models compared on one scenario, larger-is-better metrics are
//! inverted, the rescaled values are averaged per fidelity level, and the
//! four level scores average into the gap G. Zero always means "no
//! deviation from the reference".
//!
//! Per-scenario min-max makes the worst model score exactly 1 on every
//! column by construction; a fixed-range mode (explicit min/max per metric,
//! clamped) trades that artifact for cross-scenario comparability.

use crate::error::{Error, Result};
use crate::metrics::{Direction, FidelityLevel, MetricId};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// One aggregated score per fidelity level, each in [0, 1].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FidelityLevelScores {
    pub fl1: f64,
    pub fl2: f64,
    pub fl3: f64,
    pub fl4: f64,
}

impl FidelityLevelScores {
    pub fn as_array(&self) -> [f64; 4] {
        [self.fl1, self.fl2, self.fl3, self.fl4]
    }

    pub fn get(&self, level: FidelityLevel) -> f64 {
        match level {
            FidelityLevel::I => self.fl1,
            FidelityLevel::II => self.fl2,
            FidelityLevel::III => self.fl3,
            FidelityLevel::IV => self.fl4,
        }
    }
}

/// Min-max rescale one metric column across the compared models.
///
/// With `fixed = Some((lo, hi))` every value maps through the given range
/// and clamps into [0, 1]; otherwise the observed min/max of `raw` are used
/// and at least two models are required. After rescaling, larger-is-better
/// metrics are inverted so 0 is best. A column that is exactly constant
/// (and has no fixed range) maps to 0 for every model: equal models show no
/// relative deviation, whichever direction the metric points.
pub fn normalize_column(
    raw: &[f64],
    direction: Direction,
    fixed: Option<(f64, f64)>,
) -> Result<Vec<f64>> {
    if raw.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("metric values must be finite".into()));
    }
    let scaled: Vec<f64> = match fixed {
        Some((lo, hi)) => {
            if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "fixed normalization range [{lo}, {hi}] must be finite with hi > lo"
                )));
            }
            raw.iter().map(|v| ((v - lo) / (hi - lo)).clamp(0.0, 1.0)).collect()
        }
        None => {
            if raw.len() < 2 {
                return Err(Error::InvalidArgument(
                    "min-max normalization needs at least 2 models or a fixed range".into(),
                ));
            }
            let min = raw.iter().cloned().fold(f64::INFINITY, f64::min);
            let max = raw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if max == min {
                return Ok(vec![0.0; raw.len()]);
            }
            raw.iter().map(|v| (v - min) / (max - min)).collect()
        }
    };
    Ok(match direction {
        Direction::Down => scaled,
        Direction::Up => scaled.into_iter().map(|v| 1.0 - v).collect(),
    })
}

/// The actual bounds a column was rescaled with, kept for the report.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalizationRange {
    pub metric: MetricId,
    pub min: f64,
    pub max: f64,
}

/// Weighted per-level aggregation of normalized metric values.
///
/// `values` must contain every registered metric exactly once. Weights
/// default to 1 per metric; each level score is the weighted mean of its
/// constituent metrics, so equal weights give the plain average.
pub fn aggregate_levels(
    values: &[(MetricId, f64)],
    metric_weights: &BTreeMap<MetricId, f64>,
) -> Result<FidelityLevelScores> {
    let by_id: BTreeMap<MetricId, f64> = values.iter().cloned().collect();
    if by_id.len() != values.len() {
        return Err(Error::InvalidArgument("duplicate metric in aggregation input".into()));
    }
    let mut scores = [0.0; 4];
    for (slot, level) in FidelityLevel::all().into_iter().enumerate() {
        let mut num = 0.0;
        let mut den = 0.0;
        for id in MetricId::all().into_iter().filter(|m| m.level() == level) {
            let v = *by_id.get(&id).ok_or_else(|| {
                Error::Unevaluable(format!("{} missing for {}", id.name(), level.name()))
            })?;
            let w = metric_weights.get(&id).copied().unwrap_or(1.0);
            if !(w > 0.0) || !w.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "weight for {} must be positive",
                    id.name()
                )));
            }
            num += w * v;
            den += w;
        }
        scores[slot] = num / den;
    }
    Ok(FidelityLevelScores { fl1: scores[0], fl2: scores[1], fl3: scores[2], fl4: scores[3] })
}

/// Combine the four level scores into the gap G: their weighted mean,
/// default weights equal.
pub fn gap(scores: &FidelityLevelScores, level_weights: &[f64; 4]) -> Result<f64> {
    let total: f64 = level_weights.iter().sum();
    if level_weights.iter().any(|w| !w.is_finite() || *w < 0.0) || !(total > 0.0) {
        return Err(Error::InvalidArgument(
            "level weights must be non-negative with a positive sum".into(),
        ));
    }
    Ok(scores.as_array().iter().zip(level_weights).map(|(s, w)| s * w).sum::<f64>() / total)
}

/// One metric line of the per-model report block.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub id: MetricId,
    /// Scenario-level raw value (units of the metric).
    pub raw: f64,
    /// After min-max and direction handling; 0 is best.
    pub normalized: f64,
    /// Frames where a one-sided-empty cap substituted for the raw distance.
    pub capped_frames: usize,
}

/// Everything the evaluation produced for one model on one scenario.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelResult {
    pub model: String,
    /// All metrics in registry order.
    pub metrics: Vec<MetricRow>,
    pub levels: FidelityLevelScores,
    pub gap: f64,
}

/// Full per-scenario comparison across models.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub scenario: String,
    pub seed: u64,
    pub models: Vec<ModelResult>,
    /// Bounds used per metric column.
    pub ranges: Vec<NormalizationRange>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn minmax_matches_published_column() {
        let got = normalize_column(&[0.342, 0.314, 0.304], Direction::Down, None).unwrap();
        assert_relative_eq!(got[0], 1.0, epsilon = 1e-12);
        assert_relative_eq!(got[1], 10.0 / 38.0, epsilon = 1e-12);
        assert_relative_eq!(got[2], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn constant_column_maps_to_zero() {
        for dir in [Direction::Down, Direction::Up] {
            let got = normalize_column(&[0.7, 0.7, 0.7], dir, None).unwrap();
            assert_eq!(got, vec![0.0, 0.0, 0.0]);
        }
    }

    #[test]
    fn upward_metric_is_inverted() {
        let got = normalize_column(&[1.0, 0.0], Direction::Up, None).unwrap();
        assert_eq!(got, vec![0.0, 1.0]);
    }

    #[test]
    fn fixed_range_clamps_and_allows_single_model() {
        let got = normalize_column(&[5.0], Direction::Down, Some((0.0, 4.0))).unwrap();
        assert_eq!(got, vec![1.0]);
        let got = normalize_column(&[2.0, -1.0], Direction::Down, Some((0.0, 4.0))).unwrap();
        assert_eq!(got, vec![0.5, 0.0]);
        assert!(normalize_column(&[1.0], Direction::Down, Some((2.0, 2.0))).is_err());
    }

    #[test]
    fn single_model_without_fixed_range_is_an_error() {
        assert!(normalize_column(&[1.0], Direction::Down, None).is_err());
    }

    fn full_values(fill: f64, dpp: f64, wd: f64) -> Vec<(MetricId, f64)> {
        MetricId::all()
            .into_iter()
            .map(|id| {
                let v = match id {
                    MetricId::Dpp => dpp,
                    MetricId::Wd => wd,
                    _ => fill,
                };
                (id, v)
            })
            .collect()
    }

    #[test]
    fn level_means() {
        let scores = aggregate_levels(&full_values(0.0, 0.4, 0.2), &BTreeMap::new()).unwrap();
        assert_relative_eq!(scores.fl3, 0.3, epsilon = 1e-12);
        assert_eq!((scores.fl1, scores.fl2, scores.fl4), (0.0, 0.0, 0.0));

        let zero = aggregate_levels(&full_values(0.0, 0.0, 0.0), &BTreeMap::new()).unwrap();
        assert_eq!(zero.as_array(), [0.0; 4]);
    }

    #[test]
    fn weighted_level_mean() {
        let mut w = BTreeMap::new();
        w.insert(MetricId::Dpp, 0.75);
        w.insert(MetricId::Wd, 0.25);
        let scores = aggregate_levels(&full_values(0.0, 0.4, 0.2), &w).unwrap();
        assert_relative_eq!(scores.fl3, 0.35, epsilon = 1e-12);
    }

    #[test]
    fn missing_metric_is_an_error() {
        let mut values = full_values(0.1, 0.4, 0.2);
        values.retain(|(id, _)| *id != MetricId::Ospa);
        assert!(aggregate_levels(&values, &BTreeMap::new()).is_err());
    }

    #[test]
    fn gap_is_the_level_mean() {
        let eq = [1.0; 4];
        let zero = FidelityLevelScores { fl1: 0.0, fl2: 0.0, fl3: 0.0, fl4: 0.0 };
        assert_eq!(gap(&zero, &eq).unwrap(), 0.0);
        let one = FidelityLevelScores { fl1: 1.0, fl2: 1.0, fl3: 1.0, fl4: 1.0 };
        assert_eq!(gap(&one, &eq).unwrap(), 1.0);
        let mid = FidelityLevelScores { fl1: 0.2, fl2: 0.4, fl3: 0.6, fl4: 0.8 };
        assert_relative_eq!(gap(&mid, &eq).unwrap(), 0.5, epsilon = 1e-12);
        // Weighted: all mass on FL I.
        assert_relative_eq!(gap(&mid, &[1.0, 0.0, 0.0, 0.0]).unwrap(), 0.2, epsilon = 1e-12);
        assert!(gap(&mid, &[0.0; 4]).is_err());
    }

    proptest! {
        /// Min-max keeps the model ranking (after direction handling) and
        /// stays inside [0, 1].
        #[test]
        fn normalization_preserves_order(raw in proptest::collection::vec(-1e3..1e3f64, 2..6)) {
            let norm = normalize_column(&raw, Direction::Down, None).unwrap();
            for v in &norm {
                prop_assert!((0.0..=1.0).contains(v));
            }
            for i in 0..raw.len() {
                for j in 0..raw.len() {
                    if raw[i] < raw[j] {
                        prop_assert!(norm[i] <= norm[j]);
                    }
                }
            }
        }
    }
}
