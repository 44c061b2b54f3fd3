//! Ground-truth chiller plant simulator.
//!
//! Three chillers, three cooling towers, three condenser and three chilled
//! water pumps by default. Pumps and fans follow the affinity laws (flow ∝
//! speed, power ∝ speed³); chiller efficiency degrades with condenser lift,
//! part-load deviation and reduced condenser flow.

mod config;
mod plant;
mod record;
mod scenario;
mod schedule;
mod simulation;

pub use config::{Bounds, ChillerSpec, CopCurve, FanSpec, NoiseConfig, PlantConfig, PumpSpec, SpeedLimits, TowerCurve};
pub use plant::{closure, required_chw_flow, Closure, Plant, PlantError, PlantState};
pub use record::{Configuration, ControlVector, SensorRecord, Weather};
pub use scenario::{LoadSpec, Scenario, ScenarioError, WeatherSpec};
pub use schedule::{DayPlan, OperatorSchedule, CHSP_RANGE};
pub use simulation::{simulate, AppliedControl, SimError, Simulation, DEFAULT_START};
