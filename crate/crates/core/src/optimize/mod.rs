//! Constrained minimization of predicted plant power over the VSD speeds,
//! and the periodic micro-control loop that applies it.

mod cobyla;
mod ddo;
mod grid;
mod problem;

use std::collections::BTreeMap;

use serde_json::Value;

pub use cobyla::LinearTrustRegion;
pub use ddo::{control_step, realtime_loop, DdoController, DdoSettings, PlantInterface, RunLogEntry};
pub use grid::GridSearch;
pub use problem::{
    Assessment, Evaluation, OptimizationProblem, OptimizationResult, OptimizeError, PlantModel, PredictedBounds, TruePlant,
    FEASIBILITY_TOL,
};

use crate::control::RegistryError;
use crate::enrich::EnrichmentPlan;
use crate::simplant::{Bounds, SensorRecord};

/// A constrained minimizer over the three speeds.
pub trait Solver: Send + Sync {
    fn name(&self) -> &str;
    fn solve(&self, problem: &OptimizationProblem<'_>) -> Result<OptimizationResult, OptimizeError>;
}

type SolverBuilder = Box<dyn Fn(&Value) -> Result<Box<dyn Solver>, String> + Send + Sync>;

/// Name → solver constructor; parameters come as JSON.
pub struct SolverRegistry {
    builders: BTreeMap<String, SolverBuilder>,
}

fn from_params<T: serde::de::DeserializeOwned + Default + Solver + 'static>(params: &Value) -> Result<Box<dyn Solver>, String> {
    if params.is_null() {
        return Ok(Box::new(T::default()));
    }
    serde_json::from_value::<T>(params.clone()).map(|s| Box::new(s) as Box<dyn Solver>).map_err(|e| e.to_string())
}

impl Default for SolverRegistry {
    fn default() -> Self {
        let mut r = Self { builders: BTreeMap::new() };
        r.register("cobyla", from_params::<LinearTrustRegion>);
        r.register("grid", from_params::<GridSearch>);
        r
    }
}

impl SolverRegistry {
    pub fn register(&mut self, name: &str, builder: impl Fn(&Value) -> Result<Box<dyn Solver>, String> + Send + Sync + 'static) {
        self.builders.insert(name.to_string(), Box::new(builder));
    }

    pub fn names(&self) -> Vec<&str> {
        self.builders.keys().map(String::as_str).collect()
    }

    pub fn build(&self, name: &str, params: &Value) -> Result<Box<dyn Solver>, RegistryError> {
        let b = self.builders.get(name).ok_or_else(|| RegistryError::Unknown {
            kind: "solver",
            name: name.to_string(),
            available: self.names().join(", "),
        })?;
        b(params).map_err(|message| RegistryError::Params { name: name.to_string(), message })
    }
}

fn percentile(sorted: &[f64], p: f64) -> f64 {
    let pos = p / 100.0 * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    if i + 1 < sorted.len() {
        sorted[i] + frac * (sorted[i + 1] - sorted[i])
    } else {
        sorted[i]
    }
}

/// `[lo_pct, hi_pct]` percentile bounds of the measured header quantities.
/// Records inside the plan's enrichment windows are used when there are
/// any, so the bounds reflect the explored range rather than routine
/// operation.
pub fn percentile_bounds(records: &[SensorRecord], plan: Option<&EnrichmentPlan>, lo_pct: f64, hi_pct: f64) -> PredictedBounds {
    let enriched: Vec<&SensorRecord> = match plan {
        Some(p) => records.iter().filter(|r| p.contains(r.ts)).collect(),
        None => Vec::new(),
    };
    let pool: Vec<&SensorRecord> = if enriched.is_empty() { records.iter().collect() } else { enriched };
    let bound = |get: fn(&SensorRecord) -> f64| -> Option<Bounds> {
        let mut v: Vec<f64> = pool.iter().map(|r| get(r)).filter(|x| x.is_finite() && *x > 0.0).collect();
        if v.is_empty() {
            return None;
        }
        v.sort_by(f64::total_cmp);
        Some(Bounds::new(percentile(&v, lo_pct), percentile(&v, hi_pct)))
    };
    PredictedBounds { chfhdr: bound(|r| r.chfhdr), cwfhdr: bound(|r| r.cwfhdr), cwshdr: bound(|r| r.cwshdr) }
}
