use super::plant::{Plant, PlantError, PlantState};
use super::record::{ControlVector, SensorRecord};
use super::scenario::Scenario;
use super::schedule::OperatorSchedule;
use crate::control::{Command, ControlSource, Controller};
use crate::units::day_of;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("minute {ts}: {source}")]
pub struct SimError {
    pub ts: u64,
    #[source]
    pub source: PlantError,
}

/// One control change applied to the plant, with its origin.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct AppliedControl {
    /// First minute the control is in effect.
    pub ts: u64,
    pub source: ControlSource,
    pub control: ControlVector,
}

/// Stateful driver advancing a scenario one minute at a time.
///
/// The operator schedule's day plan is applied at every simulated midnight;
/// speeds persist until a controller changes them.
#[derive(Debug, Clone)]
pub struct Simulation {
    scenario: Scenario,
    schedule: OperatorSchedule,
    plant: Plant,
    latest: Option<SensorRecord>,
    applied: Vec<AppliedControl>,
    chsp_override: Option<f64>,
}

/// Speeds a plant starts with before any controller acts.
pub const DEFAULT_START: ControlVector = ControlVector::new(90.0, 90.0, 30.0);

impl Simulation {
    pub fn new(scenario: &Scenario) -> Result<Self, SimError> {
        Self::starting_at(scenario, 0, DEFAULT_START)
    }

    /// Starts the clock at `start_minute`, with `control` as initial speeds.
    pub fn starting_at(scenario: &Scenario, start_minute: u64, control: ControlVector) -> Result<Self, SimError> {
        let schedule = scenario.operator_schedule();
        let plan = schedule.for_day(day_of(start_minute)).clone();
        let limits = scenario.plant.speed.to_array();
        let control = clamp_control(control, &limits);
        let state = PlantState { config: plan.config, control, chsp: plan.chsp, minute: start_minute };
        let plant = Plant::new(scenario.plant.clone(), state, scenario.seed)
            .map_err(|source| SimError { ts: start_minute, source })?;
        Ok(Self {
            scenario: scenario.clone(),
            schedule,
            plant,
            latest: None,
            applied: vec![AppliedControl { ts: start_minute, source: ControlSource::Operator, control }],
            chsp_override: None,
        })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn state(&self) -> &PlantState {
        self.plant.state()
    }

    /// Minute the next `step` will simulate.
    pub fn minute(&self) -> u64 {
        self.plant.state().minute
    }

    pub fn latest(&self) -> Option<&SensorRecord> {
        self.latest.as_ref()
    }

    pub fn schedule(&self) -> &OperatorSchedule {
        &self.schedule
    }

    /// Every control change so far, each attributed to one source.
    pub fn applied_controls(&self) -> &[AppliedControl] {
        &self.applied
    }

    /// Replaces the operator schedule and applies today's plan immediately.
    pub fn set_schedule(&mut self, schedule: OperatorSchedule) -> Result<(), String> {
        schedule.validate(&self.scenario.plant, self.scenario.load.peak_rt)?;
        self.schedule = schedule;
        self.chsp_override = None;
        self.apply_day_plan();
        Ok(())
    }

    /// Operator setpoint change; holds until the next schedule change.
    pub fn set_chsp(&mut self, chsp: f64) -> Result<(), String> {
        if !(5.0..=10.0).contains(&chsp) {
            return Err(format!("chsp {chsp} outside [5, 10] °C"));
        }
        self.chsp_override = Some(chsp);
        self.plant.state_mut().chsp = chsp;
        Ok(())
    }

    /// Applies a speed command (clamped to the plant's speed limits) from the next minute on.
    pub fn apply(&mut self, command: Command) -> ControlVector {
        if let Some(config) = command.configuration {
            self.plant.state_mut().config = config;
        }
        let limits = self.scenario.plant.speed.to_array();
        let control = clamp_control(command.control, &limits);
        let ts = self.minute();
        let state = self.plant.state_mut();
        if state.control != control {
            state.control = control;
            self.applied.push(AppliedControl { ts, source: command.source, control });
        }
        control
    }

    fn apply_day_plan(&mut self) {
        let plan = self.schedule.for_day(day_of(self.minute())).clone();
        let state = self.plant.state_mut();
        state.config = plan.config;
        state.chsp = self.chsp_override.unwrap_or(plan.chsp);
    }

    /// Simulates the current minute.
    pub fn step(&mut self) -> Result<SensorRecord, SimError> {
        let t = self.minute();
        if t > 0 && t % crate::units::MINUTES_PER_DAY == 0 {
            self.chsp_override = None;
            self.apply_day_plan();
        }
        let weather = self.scenario.weather_at(t);
        let load = self.scenario.load_at(t);
        let record = self.plant.step(weather, load).map_err(|source| SimError { ts: t, source })?;
        self.latest = Some(record.clone());
        Ok(record)
    }

    /// Simulates one minute and lets `controller` react to the new record.
    pub fn step_with(&mut self, controller: &mut dyn Controller) -> Result<SensorRecord, SimError> {
        let record = self.step()?;
        if let Some(command) = controller.on_record(&record) {
            self.apply(command);
        }
        Ok(record)
    }
}

fn clamp_control(c: ControlVector, limits: &[super::config::Bounds; 3]) -> ControlVector {
    let a = c.to_array();
    ControlVector::from_array([limits[0].clamp(a[0]), limits[1].clamp(a[1]), limits[2].clamp(a[2])])
}

/// Runs `controller` against a fresh simulation of `scenario` for `duration` minutes.
pub fn simulate(scenario: &Scenario, controller: &mut dyn Controller, duration: u64) -> Result<Vec<SensorRecord>, SimError> {
    assert!(duration >= 1, "duration must be at least one minute");
    let mut sim = Simulation::new(scenario)?;
    (0..duration).map(|_| sim.step_with(controller)).collect()
}
