use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::control::{Command, ControlSource, Controller};
use crate::simplant::{required_chw_flow, Bounds, ControlVector, PlantConfig, SensorRecord, SimError, Simulation};
use crate::surrogate::OperatingPoint;

use super::problem::{OptimizationProblem, OptimizationResult, PlantModel, PredictedBounds};
use super::Solver;

/// Moves each speed toward `target` by at most `max_delta`.
pub fn control_step(current: ControlVector, target: ControlVector, max_delta: f64) -> ControlVector {
    assert!(max_delta > 0.0, "max_delta must be positive");
    let c = current.to_array();
    let t = target.to_array();
    ControlVector::from_array([0, 1, 2].map(|i| c[i] + (t[i] - c[i]).clamp(-max_delta, max_delta)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DdoSettings {
    /// Minutes between solves, 2 or 3.
    pub period_minutes: u64,
    /// Largest speed change per update, percent.
    pub max_delta: f64,
    /// `[cwp, chwp, ct]` speed box.
    pub speed: [Bounds; 3],
    pub predicted: PredictedBounds,
    /// When set, the chilled-water flow must carry the current load within
    /// the plant's ΔT limit, with this relative margin.
    pub chw_flow_margin: Option<f64>,
    pub max_chw_delta_t: f64,
}

impl Default for DdoSettings {
    fn default() -> Self {
        Self::for_plant(&PlantConfig::default())
    }
}

impl DdoSettings {
    pub fn for_plant(plant: &PlantConfig) -> Self {
        Self {
            period_minutes: 3,
            max_delta: 5.0,
            speed: plant.speed.to_array(),
            predicted: PredictedBounds::default(),
            chw_flow_margin: Some(0.05),
            max_chw_delta_t: plant.max_chw_delta_t,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(2..=3).contains(&self.period_minutes) {
            return Err(format!("optimizer period must be 2 or 3 minutes, got {}", self.period_minutes));
        }
        if !(self.max_delta > 0.0) {
            return Err("max_delta must be positive".into());
        }
        if self.speed.iter().any(|b| !(b.lower <= b.upper)) {
            return Err("empty speed box".into());
        }
        Ok(())
    }

    /// Bounds for one solve: the configured ones plus the load-dependent
    /// chilled-water flow floor.
    pub fn bounds_for(&self, plant: &PlantConfig, load_rt: f64) -> PredictedBounds {
        let mut b = self.predicted;
        if let Some(margin) = self.chw_flow_margin {
            let mut p = plant.clone();
            p.max_chw_delta_t = self.max_chw_delta_t;
            let floor = required_chw_flow(&p, load_rt) * (1.0 + margin);
            b.chfhdr = Some(match b.chfhdr {
                Some(x) => Bounds::new(x.lower.max(floor), x.upper.max(floor)),
                None => Bounds::new(floor, f64::INFINITY),
            });
        }
        b
    }
}

/// One optimizer tick.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunLogEntry {
    /// First minute the applied control is in effect.
    pub ts: u64,
    pub applied: ControlVector,
    /// Model prediction at the applied control; absent when the solve failed.
    pub predicted_kw: Option<f64>,
    /// Measured total power of the record the tick reacted to.
    pub measured_kw: f64,
    pub solver_evals: usize,
    pub feasible: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Periodic micro-control: solve, then step toward the solution.
///
/// The model is normally the trained surrogate graph; any [`PlantModel`]
/// works, which is how the noise-free oracle runs through the same loop.
pub struct DdoController {
    model: Arc<dyn PlantModel + Send>,
    solver: Box<dyn Solver>,
    settings: DdoSettings,
    plant: PlantConfig,
    log: Vec<RunLogEntry>,
    last_result: Option<OptimizationResult>,
    enabled: bool,
}

impl DdoController {
    pub fn new(model: Arc<dyn PlantModel + Send>, solver: Box<dyn Solver>, settings: DdoSettings, plant: PlantConfig) -> Self {
        Self { model, solver, settings, plant, log: Vec::new(), last_result: None, enabled: true }
    }

    pub fn settings(&self) -> &DdoSettings {
        &self.settings
    }

    pub fn log(&self) -> &[RunLogEntry] {
        &self.log
    }

    pub fn take_log(&mut self) -> Vec<RunLogEntry> {
        std::mem::take(&mut self.log)
    }

    pub fn last_result(&self) -> Option<&OptimizationResult> {
        self.last_result.as_ref()
    }

    pub fn enabled(&self) -> bool {
        self.enabled
    }

    pub fn set_enabled(&mut self, on: bool) {
        self.enabled = on;
    }

    pub fn problem_for<'g>(&self, model: &'g dyn PlantModel, record: &SensorRecord) -> OptimizationProblem<'g> {
        let speed = self.settings.speed;
        let start = record.control.to_array();
        OptimizationProblem {
            model,
            point: OperatingPoint::of(record),
            bounds: speed,
            predicted: self.settings.bounds_for(&self.plant, record.load_rt),
            start: ControlVector::from_array([0, 1, 2].map(|i| speed[i].clamp(start[i]))),
        }
    }

    /// Solves for `record` and returns the stepped command, logging the tick.
    /// On solver failure the current speeds are held.
    pub fn tick(&mut self, record: &SensorRecord) -> Option<Command> {
        let model = Arc::clone(&self.model);
        let problem = self.problem_for(model.as_ref(), record);
        let outcome = self.solver.solve(&problem);
        let (entry, command) = match outcome {
            Ok(result) => {
                let stepped = control_step(problem.start, result.control, self.settings.max_delta);
                let applied = ControlVector::from_array([0, 1, 2].map(|i| self.settings.speed[i].clamp(stepped.to_array()[i])));
                let predicted = model.evaluate(&applied, &problem.point).ok().map(|e| e.total_kw);
                let entry = RunLogEntry {
                    ts: record.ts + 1,
                    applied,
                    predicted_kw: predicted,
                    measured_kw: record.total_kw,
                    solver_evals: result.evaluations,
                    feasible: result.feasible,
                    error: None,
                };
                self.last_result = Some(result);
                (entry, Some(Command::new(applied, ControlSource::Optimizer)))
            }
            Err(e) => {
                let evals = match &e {
                    super::OptimizeError::NoFeasiblePoint { evaluations, .. } => *evaluations,
                    _ => 0,
                };
                let entry = RunLogEntry {
                    ts: record.ts + 1,
                    applied: record.control,
                    predicted_kw: None,
                    measured_kw: record.total_kw,
                    solver_evals: evals,
                    feasible: false,
                    error: Some(e.to_string()),
                };
                (entry, None)
            }
        };
        self.log.push(entry);
        command
    }

    /// Whether a record at `ts` falls on an optimizer tick.
    pub fn is_tick(&self, ts: u64) -> bool {
        (ts + 1) % self.settings.period_minutes == 0
    }
}

impl Controller for DdoController {
    fn name(&self) -> &str {
        "ddo"
    }

    fn on_record(&mut self, record: &SensorRecord) -> Option<Command> {
        if !self.enabled || !self.is_tick(record.ts) {
            return None;
        }
        self.tick(record)
    }
}

/// What the loop needs from a plant: read, command, let time pass.
pub trait PlantInterface {
    fn latest(&self) -> Option<SensorRecord>;
    fn apply(&mut self, command: Command) -> ControlVector;
    fn advance(&mut self, minutes: u64) -> Result<(), SimError>;
}

impl PlantInterface for Simulation {
    fn latest(&self) -> Option<SensorRecord> {
        Simulation::latest(self).cloned()
    }

    fn apply(&mut self, command: Command) -> ControlVector {
        Simulation::apply(self, command)
    }

    fn advance(&mut self, minutes: u64) -> Result<(), SimError> {
        for _ in 0..minutes {
            self.step()?;
        }
        Ok(())
    }
}

/// Runs `periods` optimizer periods: let the plant run one period, read the
/// latest record, solve, apply. Returns the log entries of this run.
pub fn realtime_loop(plant: &mut dyn PlantInterface, ddo: &mut DdoController, periods: usize) -> Result<Vec<RunLogEntry>, SimError> {
    let start = ddo.log().len();
    for _ in 0..periods {
        plant.advance(ddo.settings().period_minutes)?;
        let Some(record) = plant.latest() else { continue };
        if let Some(cmd) = ddo.tick(&record) {
            plant.apply(cmd);
        }
    }
    Ok(ddo.log()[start..].to_vec())
}
