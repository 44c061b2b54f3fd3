//! Controllers: strategies that react to each telemetry record with a speed
//! command, and a name-keyed registry to pick one at runtime.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::enrich::{EnrichmentController, EnrichmentPlan};
use crate::optimize::{DdoController, DdoSettings, SolverRegistry};
use crate::simplant::{Configuration, ControlVector, Scenario, SensorRecord};
use crate::surrogate::PlantModelGraph;

/// Who asked for a control change.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ControlSource {
    Operator,
    Enrichment,
    Optimizer,
}

impl fmt::Display for ControlSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ControlSource::Operator => "operator",
            ControlSource::Enrichment => "enrichment",
            ControlSource::Optimizer => "optimizer",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Command {
    pub control: ControlVector,
    /// Only operator strategies set this; micro-control never touches on/off.
    pub configuration: Option<Configuration>,
    pub source: ControlSource,
}

impl Command {
    pub fn new(control: ControlVector, source: ControlSource) -> Self {
        Self { control, configuration: None, source }
    }
}

/// Called once per simulated minute with the record just produced.
/// Returning `None` holds the current speeds.
pub trait Controller: Send {
    fn name(&self) -> &str;
    fn on_record(&mut self, record: &SensorRecord) -> Option<Command>;
}

impl<C: Controller + ?Sized> Controller for Box<C> {
    fn name(&self) -> &str {
        (**self).name()
    }
    fn on_record(&mut self, record: &SensorRecord) -> Option<Command> {
        (**self).on_record(record)
    }
}

/// Fan speed that tracks cooling load inside a narrow band, the way a
/// constant-speed plant drifts under a simple condenser-temperature trim.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CtTrim {
    pub band: f64,
    pub load_low_rt: f64,
    pub load_high_rt: f64,
}

/// Conventional operation: constant VSD speeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedVsdController {
    pub control: ControlVector,
    #[serde(default)]
    pub ct_trim: Option<CtTrim>,
}

impl FixedVsdController {
    pub fn new(control: ControlVector) -> Self {
        Self { control, ct_trim: None }
    }

    pub fn with_ct_trim(mut self, trim: CtTrim) -> Self {
        self.ct_trim = Some(trim);
        self
    }

    pub fn target(&self, load_rt: f64) -> ControlVector {
        let mut c = self.control;
        if let Some(t) = self.ct_trim {
            let span = (t.load_high_rt - t.load_low_rt).max(f64::EPSILON);
            let x = ((load_rt - t.load_low_rt) / span).clamp(0.0, 1.0);
            c.ct_speed += t.band * (2.0 * x - 1.0);
        }
        c
    }
}

impl Controller for FixedVsdController {
    fn name(&self) -> &str {
        "fixed-vsd"
    }

    fn on_record(&mut self, record: &SensorRecord) -> Option<Command> {
        Some(Command::new(self.target(record.load_rt), ControlSource::Operator))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RegistryError {
    #[error("unknown {kind} '{name}' (available: {available})")]
    Unknown { kind: &'static str, name: String, available: String },
    #[error("bad parameters for '{name}': {message}")]
    Params { name: String, message: String },
}

/// What a controller builder may draw on besides its own parameters.
pub struct ControllerContext<'a> {
    pub scenario: &'a Scenario,
    pub graph: Option<Arc<PlantModelGraph>>,
    pub solvers: &'a SolverRegistry,
}

pub trait ControllerBuilder: Send + Sync {
    fn build(&self, params: &Value, ctx: &ControllerContext<'_>) -> Result<Box<dyn Controller>, RegistryError>;
}

impl<F> ControllerBuilder for F
where
    F: Fn(&Value, &ControllerContext<'_>) -> Result<Box<dyn Controller>, RegistryError> + Send + Sync,
{
    fn build(&self, params: &Value, ctx: &ControllerContext<'_>) -> Result<Box<dyn Controller>, RegistryError> {
        self(params, ctx)
    }
}

/// Name → builder map for controller strategies.
pub struct ControllerRegistry {
    builders: BTreeMap<String, Box<dyn ControllerBuilder>>,
}

impl Default for ControllerRegistry {
    fn default() -> Self {
        let mut r = Self::empty();
        r.register("fixed-vsd", build_fixed_vsd);
        r.register("ddo", build_ddo);
        r
    }
}

impl ControllerRegistry {
    pub fn empty() -> Self {
        Self { builders: BTreeMap::new() }
    }

    pub fn register(&mut self, name: &str, builder: impl ControllerBuilder + 'static) {
        self.builders.insert(name.to_string(), Box::new(builder));
    }

    pub fn names(&self) -> Vec<&str> {
        self.builders.keys().map(String::as_str).collect()
    }

    /// Builds the named strategy. When the scenario carries an enrichment
    /// plan, the result is wrapped so the plan's windows take precedence.
    pub fn build(&self, name: &str, params: &Value, ctx: &ControllerContext<'_>) -> Result<Box<dyn Controller>, RegistryError> {
        let builder = self.builders.get(name).ok_or_else(|| RegistryError::Unknown {
            kind: "controller",
            name: name.to_string(),
            available: self.names().join(", "),
        })?;
        let base = builder.build(params, ctx)?;
        Ok(match &ctx.scenario.enrichment {
            Some(plan) if !plan.windows.is_empty() => {
                Box::new(EnrichmentController::new(plan.clone(), base, ctx.scenario.seed ^ 0xE)) as Box<dyn Controller>
            }
            _ => base,
        })
    }
}

fn params_error(name: &str, e: impl fmt::Display) -> RegistryError {
    RegistryError::Params { name: name.to_string(), message: e.to_string() }
}

fn build_fixed_vsd(params: &Value, _ctx: &ControllerContext<'_>) -> Result<Box<dyn Controller>, RegistryError> {
    if params.is_null() {
        return Ok(Box::new(FixedVsdController::new(crate::simplant::DEFAULT_START)));
    }
    let c: FixedVsdController = serde_json::from_value(params.clone()).map_err(|e| params_error("fixed-vsd", e))?;
    Ok(Box::new(c))
}

#[derive(Deserialize)]
struct DdoParams {
    #[serde(default = "default_solver")]
    solver: String,
    #[serde(default)]
    solver_params: Value,
    #[serde(default)]
    settings: Option<DdoSettings>,
}

fn default_solver() -> String {
    "cobyla".into()
}

fn build_ddo(params: &Value, ctx: &ControllerContext<'_>) -> Result<Box<dyn Controller>, RegistryError> {
    let p: DdoParams = if params.is_null() {
        DdoParams { solver: default_solver(), solver_params: Value::Null, settings: None }
    } else {
        serde_json::from_value(params.clone()).map_err(|e| params_error("ddo", e))?
    };
    let graph = ctx.graph.clone().ok_or_else(|| params_error("ddo", "a trained model bundle is required"))?;
    let solver = ctx.solvers.build(&p.solver, &p.solver_params)?;
    let settings = p.settings.unwrap_or_else(|| DdoSettings::for_plant(&ctx.scenario.plant));
    settings.validate().map_err(|e| params_error("ddo", e))?;
    Ok(Box::new(DdoController::new(graph, solver, settings, ctx.scenario.plant.clone())))
}

/// Convenience for plans passed outside a scenario.
pub fn with_enrichment(plan: EnrichmentPlan, base: Box<dyn Controller>, seed: u64) -> Box<dyn Controller> {
    Box::new(EnrichmentController::new(plan, base, seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trim_band_follows_load() {
        let c = FixedVsdController::new(ControlVector::new(90.0, 90.0, 30.0))
            .with_ct_trim(CtTrim { band: 2.0, load_low_rt: 350.0, load_high_rt: 700.0 });
        assert_eq!(c.target(350.0).ct_speed, 28.0);
        assert_eq!(c.target(700.0).ct_speed, 32.0);
        assert_eq!(c.target(525.0).ct_speed, 30.0);
        assert_eq!(c.target(900.0).ct_speed, 32.0);
    }

    #[test]
    fn registry_rejects_unknown_names() {
        let scenario = Scenario::default();
        let solvers = SolverRegistry::default();
        let ctx = ControllerContext { scenario: &scenario, graph: None, solvers: &solvers };
        let reg = ControllerRegistry::default();
        assert!(matches!(reg.build("pid", &Value::Null, &ctx), Err(RegistryError::Unknown { .. })));
        assert!(reg.build("fixed-vsd", &Value::Null, &ctx).is_ok());
        // ddo cannot run without a model bundle
        assert!(matches!(reg.build("ddo", &Value::Null, &ctx), Err(RegistryError::Params { .. })));
    }

    #[test]
    fn fixed_vsd_from_params() {
        let scenario = Scenario::default();
        let solvers = SolverRegistry::default();
        let ctx = ControllerContext { scenario: &scenario, graph: None, solvers: &solvers };
        let params = serde_json::json!({"control": {"cwp_speed": 80.0, "chwp_speed": 85.0, "ct_speed": 35.0}});
        let mut c = ControllerRegistry::default().build("fixed-vsd", &params, &ctx).unwrap();
        assert_eq!(c.name(), "fixed-vsd");
        let rec = crate::simplant::simulate(&scenario, &mut FixedVsdController::new(crate::simplant::DEFAULT_START), 1).unwrap();
        assert_eq!(c.on_record(&rec[0]).unwrap().control, ControlVector::new(80.0, 85.0, 35.0));
    }
}
