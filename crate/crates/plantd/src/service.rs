use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use anyhow::Context;
use serde::Serialize;

use chiller_ddo::baselining::{fit_baseline, savings, BaselineError, SavingsReport};
use chiller_ddo::control::{Command, Controller, FixedVsdController};
use chiller_ddo::enrich::{EnrichmentController, EnrichmentPlan, SpeedRanges, Window};
use chiller_ddo::optimize::{DdoController, DdoSettings, RunLogEntry, SolverRegistry};
use chiller_ddo::simplant::{ControlVector, OperatorSchedule, Scenario, SensorRecord, Simulation, DEFAULT_START};
use chiller_ddo::surrogate::{MlpConfig, ModelBundle};
use chiller_ddo::telemetry::RecordStore;

use crate::config::{EnrichmentDefaults, ServiceConfig};

/// Base controller of the service: the optimizer when enabled, otherwise
/// the operator's fixed speeds.
pub struct DdoSlot {
    fixed: FixedVsdController,
    ddo: Option<DdoController>,
    enabled: bool,
}

impl DdoSlot {
    pub fn active(&self) -> bool {
        self.enabled && self.ddo.is_some()
    }
}

impl Controller for DdoSlot {
    fn name(&self) -> &str {
        if self.active() {
            "ddo"
        } else {
            "fixed-vsd"
        }
    }

    fn on_record(&mut self, record: &SensorRecord) -> Option<Command> {
        match (&mut self.ddo, self.enabled) {
            (Some(ddo), true) => ddo.on_record(record),
            _ => self.fixed.on_record(record),
        }
    }
}

/// Failures surfaced by API mutations and queries.
#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("{0}")]
    BadRequest(String),
    #[error("{0}")]
    Conflict(String),
    #[error("{0}")]
    Internal(String),
}

#[derive(Debug, Clone, Serialize)]
pub struct Status {
    /// Minute the next simulated step will produce.
    pub minute: u64,
    pub records: usize,
    pub ddo_enabled: bool,
    pub bundle_loaded: bool,
    pub controller: String,
    pub control: ControlVector,
    pub chsp: f64,
    pub schedule: OperatorSchedule,
    pub last_solve: Option<RunLogEntry>,
    pub enrichment_active: bool,
    pub enrichment_windows: Vec<Window>,
    pub finished: bool,
    pub halted: Option<String>,
}

/// Everything the service mutates. Held behind one mutex, so the simulator
/// clock, the optimizer (which runs inside a clock step) and API mutations
/// never interleave.
pub struct ServiceState {
    sim: Simulation,
    store: RecordStore,
    controller: EnrichmentController<DdoSlot>,
    optimized: Vec<bool>,
    run_log: BufWriter<File>,
    control_log: BufWriter<File>,
    controls_written: usize,
    last_solve: Option<RunLogEntry>,
    enrichment: EnrichmentDefaults,
    end_minute: u64,
    halted: Option<String>,
}

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn write_line(w: &mut BufWriter<File>, value: &impl Serialize) -> anyhow::Result<()> {
    let mut line = serde_json::to_string(value)?;
    line.push('\n');
    w.write_all(line.as_bytes())?;
    Ok(())
}

impl ServiceState {
    /// Loads scenario and bundle, opens the output files and simulates the
    /// first minute so telemetry is available immediately.
    pub fn start(cfg: &ServiceConfig) -> anyhow::Result<Self> {
        cfg.validate()?;
        let scenario = match &cfg.scenario {
            Some(p) => Scenario::load(p)?,
            None => Scenario::default(),
        };
        let plant = scenario.plant.clone();
        let ddo = match &cfg.bundle {
            Some(p) => {
                let bundle = ModelBundle::load(p)?;
                let solver = SolverRegistry::default().build(&cfg.solver, &serde_json::Value::Null)?;
                let mut settings = DdoSettings::for_plant(&plant);
                settings.period_minutes = cfg.optimizer_period;
                settings.predicted = bundle.bounds;
                settings.validate().map_err(anyhow::Error::msg)?;
                Some(DdoController::new(Arc::new(bundle.graph), solver, settings, plant.clone()))
            }
            None => None,
        };
        if cfg.ddo_enabled && ddo.is_none() {
            anyhow::bail!("ddo_enabled requires a model bundle");
        }
        let mut plan = scenario.enrichment.clone().unwrap_or_else(|| EnrichmentPlan {
            windows: Vec::new(),
            ranges: cfg.enrichment.ranges.unwrap_or_else(|| SpeedRanges::from(&plant.speed)),
            redraw_minutes: cfg.enrichment.redraw_minutes,
        });
        if let Some(r) = cfg.enrichment.ranges {
            plan.ranges = r;
        }
        plan.validate(&plant.speed)?;
        let slot = DdoSlot { fixed: FixedVsdController::new(DEFAULT_START), ddo, enabled: cfg.ddo_enabled };
        let controller = EnrichmentController::new(plan, slot, scenario.seed ^ 0xE);
        let mut state = Self {
            sim: Simulation::new(&scenario)?,
            store: RecordStore::create(&cfg.telemetry)?,
            controller,
            optimized: Vec::new(),
            run_log: create(&cfg.run_log)?,
            control_log: create(&cfg.control_log)?,
            controls_written: 0,
            last_solve: None,
            enrichment: cfg.enrichment.clone(),
            end_minute: scenario.duration_minutes(),
            halted: None,
        };
        state.step()?;
        Ok(state)
    }

    /// Simulates one minute, lets the controllers react and persists
    /// telemetry, optimizer ticks and applied controls.
    pub fn step(&mut self) -> anyhow::Result<SensorRecord> {
        if let Some(h) = &self.halted {
            anyhow::bail!("simulation halted: {h}");
        }
        let optimized = self.controller.base().active();
        let record = match self.sim.step_with(&mut self.controller) {
            Ok(r) => r,
            Err(e) => {
                self.halted = Some(e.to_string());
                return Err(e.into());
            }
        };
        self.store.append(record.clone())?;
        self.optimized.push(optimized);
        if let Some(ddo) = self.controller.base_mut().ddo.as_mut() {
            for entry in ddo.take_log() {
                write_line(&mut self.run_log, &entry)?;
                self.last_solve = Some(entry);
            }
        }
        let applied = self.sim.applied_controls();
        for c in &applied[self.controls_written..] {
            write_line(&mut self.control_log, c)?;
        }
        self.controls_written = applied.len();
        self.store.flush()?;
        self.run_log.flush()?;
        self.control_log.flush()?;
        Ok(record)
    }

    pub fn advance(&mut self, minutes: u64) -> anyhow::Result<()> {
        for _ in 0..minutes {
            self.step()?;
        }
        Ok(())
    }

    /// Whether the scenario's horizon has been simulated, or the plant failed.
    pub fn finished(&self) -> bool {
        self.sim.minute() >= self.end_minute || self.halted.is_some()
    }

    pub fn latest(&self) -> Option<&SensorRecord> {
        self.store.last()
    }

    pub fn range(&self, from: u64, to: u64) -> &[SensorRecord] {
        self.store.range(from, to)
    }

    pub fn status(&self) -> Status {
        let next = self.sim.minute();
        let plan = self.controller.plan();
        let state = self.sim.state();
        Status {
            minute: next,
            records: self.store.len(),
            ddo_enabled: self.controller.base().active(),
            bundle_loaded: self.controller.base().ddo.is_some(),
            controller: self.controller.base().name().to_string(),
            control: state.control,
            chsp: state.chsp,
            schedule: self.sim.schedule().clone(),
            last_solve: self.last_solve.clone(),
            enrichment_active: plan.contains(next),
            enrichment_windows: plan.windows.iter().filter(|w| w.end() > next).copied().collect(),
            finished: self.finished(),
            halted: self.halted.clone(),
        }
    }

    pub fn set_schedule(&mut self, schedule: OperatorSchedule) -> Result<(), ServiceError> {
        self.sim.set_schedule(schedule).map_err(ServiceError::BadRequest)
    }

    pub fn set_chsp(&mut self, chsp: f64) -> Result<(), ServiceError> {
        self.sim.set_chsp(chsp).map_err(ServiceError::BadRequest)
    }

    /// Schedules an enrichment window starting with the next controllable
    /// minute. `None` uses the configured default duration.
    pub fn add_enrichment_window(&mut self, duration: Option<u64>) -> Result<Window, ServiceError> {
        let duration = duration.unwrap_or(self.enrichment.duration_min);
        if duration == 0 {
            return Err(ServiceError::BadRequest("duration_min must be positive".into()));
        }
        let window = Window { start: self.sim.minute() + 1, duration };
        self.controller.plan_mut().add_window(window).map_err(|e| ServiceError::Conflict(e.to_string()))?;
        Ok(window)
    }

    pub fn set_ddo(&mut self, enabled: bool) -> Result<(), ServiceError> {
        let slot = self.controller.base_mut();
        if enabled && slot.ddo.is_none() {
            return Err(ServiceError::Conflict("no model bundle loaded; the optimizer cannot be enabled".into()));
        }
        slot.enabled = enabled;
        Ok(())
    }

    /// Telemetry split into un-optimized (baseline) and optimized records.
    pub fn savings_split(&self) -> (Vec<SensorRecord>, Vec<SensorRecord>) {
        let mut base = Vec::new();
        let mut opt = Vec::new();
        for (r, &o) in self.store.records().iter().zip(&self.optimized) {
            if o {
                opt.push(r.clone());
            } else {
                base.push(r.clone());
            }
        }
        (base, opt)
    }
}

/// Baseline fitted on un-optimized records, applied to optimized ones.
pub fn savings_report(baseline: &[SensorRecord], optimized: &[SensorRecord]) -> Result<SavingsReport, ServiceError> {
    if optimized.is_empty() {
        return Err(ServiceError::Conflict("no optimized records yet".into()));
    }
    let model = fit_baseline(baseline, 0..u64::MAX, &MlpConfig::default()).map_err(|e| match e {
        BaselineError::InsufficientData { .. } => ServiceError::Conflict(e.to_string()),
        BaselineError::Fit(_) => ServiceError::Internal(e.to_string()),
    })?;
    Ok(savings(&model, optimized))
}
