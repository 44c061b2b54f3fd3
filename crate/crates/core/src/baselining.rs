//! Savings measurement: a weather-and-load power model fitted on
//! un-optimized operation, used as the counterfactual for optimized days.

use std::collections::{BTreeMap, BTreeSet};
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::simplant::SensorRecord;
use crate::surrogate::{FitError, MlpConfig, MlpModel};
use crate::units::{day_of, HOURS_PER_MINUTE};

pub const BASELINE_INPUTS: [&str; 3] = ["db", "rh", "load_rt"];
pub const MIN_BASELINE_DAYS: usize = 3;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BaselineError {
    #[error("baseline period holds {days} days of records, need at least {MIN_BASELINE_DAYS}")]
    InsufficientData { days: usize },
    #[error("fitting baseline: {0}")]
    Fit(#[from] FitError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineModel {
    pub model: MlpModel,
    /// Minutes `[start, end)` the model was trained on.
    pub period: Range<u64>,
    pub days: usize,
}

fn features(r: &SensorRecord) -> Vec<f64> {
    vec![r.weather.db, r.weather.rh, r.load_rt]
}

impl BaselineModel {
    pub fn predict(&self, r: &SensorRecord) -> f64 {
        self.model.predict(&features(r))
    }
}

/// Trains the baseline on records with `ts` in `period`. Only weather and
/// load enter the model, never control settings.
pub fn fit_baseline(records: &[SensorRecord], period: Range<u64>, cfg: &MlpConfig) -> Result<BaselineModel, BaselineError> {
    let rows: Vec<&SensorRecord> = records.iter().filter(|r| period.contains(&r.ts)).collect();
    let days = rows.iter().map(|r| day_of(r.ts)).collect::<BTreeSet<_>>().len();
    if days < MIN_BASELINE_DAYS {
        return Err(BaselineError::InsufficientData { days });
    }
    let x: Vec<Vec<f64>> = rows.iter().map(|r| features(r)).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.total_kw).collect();
    let model = MlpModel::fit(&BASELINE_INPUTS, "total_kw", &x, &y, cfg)?;
    Ok(BaselineModel { model, period, days })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DaySaving {
    /// Simulated day index.
    pub date: u64,
    pub estimated_kwh: f64,
    pub measured_kwh: f64,
    pub saving_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SavingsReport {
    pub days: Vec<DaySaving>,
    pub mean_saving_pct: f64,
}

impl SavingsReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report always serializes")
    }
}

/// Daily saving against an arbitrary estimate of counterfactual power.
pub fn savings_with(records: &[SensorRecord], estimate: impl Fn(&SensorRecord) -> f64) -> SavingsReport {
    let mut per_day: BTreeMap<u64, (f64, f64)> = BTreeMap::new();
    for r in records {
        let e = per_day.entry(day_of(r.ts)).or_default();
        e.0 += estimate(r) * HOURS_PER_MINUTE;
        e.1 += r.total_kw * HOURS_PER_MINUTE;
    }
    let days: Vec<DaySaving> = per_day
        .into_iter()
        .map(|(date, (est, meas))| DaySaving { date, estimated_kwh: est, measured_kwh: meas, saving_pct: 100.0 * (est - meas) / est })
        .collect();
    let mean_saving_pct =
        if days.is_empty() { 0.0 } else { days.iter().map(|d| d.saving_pct).sum::<f64>() / days.len() as f64 };
    SavingsReport { days, mean_saving_pct }
}

/// Per-day saving of `records` relative to the baseline's estimate.
pub fn savings(model: &BaselineModel, records: &[SensorRecord]) -> SavingsReport {
    savings_with(records, |r| model.predict(r))
}

/// Daily plant efficiency in kW/RT: mean total power over mean load.
pub fn daily_kw_per_rt(records: &[SensorRecord]) -> Vec<(u64, f64)> {
    let mut per_day: BTreeMap<u64, (f64, f64)> = BTreeMap::new();
    for r in records {
        let e = per_day.entry(day_of(r.ts)).or_default();
        e.0 += r.total_kw;
        e.1 += r.load_rt;
    }
    per_day.into_iter().filter(|(_, (_, l))| *l > 0.0).map(|(d, (kw, l))| (d, kw / l)).collect()
}
