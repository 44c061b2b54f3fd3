use serde::{Deserialize, Serialize};

use crate::simplant::{closure, Bounds, ControlVector, PlantConfig, PlantState};
use crate::surrogate::{OperatingPoint, PlantModelGraph};

/// What the optimizer needs from a plant model: total power and the three
/// constrained header quantities for a candidate control.
pub trait PlantModel: Sync {
    fn evaluate(&self, control: &ControlVector, point: &OperatingPoint) -> Result<Evaluation, String>;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub total_kw: f64,
    pub chfhdr: f64,
    pub cwfhdr: f64,
    pub cwshdr: f64,
}

impl PlantModel for PlantModelGraph {
    fn evaluate(&self, control: &ControlVector, point: &OperatingPoint) -> Result<Evaluation, String> {
        let p = self.predict(control, point).map_err(|e| e.to_string())?;
        Ok(Evaluation { total_kw: p.total_kw, chfhdr: p.chfhdr, cwfhdr: p.cwfhdr, cwshdr: p.cwshdr })
    }
}

/// Noise-free simulator physics, for oracle comparisons.
#[derive(Debug, Clone)]
pub struct TruePlant {
    pub config: PlantConfig,
}

impl PlantModel for TruePlant {
    fn evaluate(&self, control: &ControlVector, point: &OperatingPoint) -> Result<Evaluation, String> {
        let state = PlantState { config: point.configuration.clone(), control: *control, chsp: point.chsp, minute: 0 };
        let c = closure(&self.config, &state, point.weather, point.load_rt).map_err(|e| e.to_string())?;
        Ok(Evaluation { total_kw: c.total_kw, chfhdr: c.chfhdr, cwfhdr: c.cwfhdr, cwshdr: c.cwshdr })
    }
}

/// Admissible ranges of the predicted header quantities; `None` leaves a
/// quantity unconstrained.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PredictedBounds {
    pub chfhdr: Option<Bounds>,
    pub cwfhdr: Option<Bounds>,
    pub cwshdr: Option<Bounds>,
}

impl PredictedBounds {
    fn list(&self) -> [(Option<Bounds>, fn(&Evaluation) -> f64); 3] {
        [(self.chfhdr, |e| e.chfhdr), (self.cwfhdr, |e| e.cwfhdr), (self.cwshdr, |e| e.cwshdr)]
    }

    /// Constraint values `g ≤ 0`, each scaled by its bound's span (or by the
    /// finite end's magnitude for one-sided bounds).
    pub fn constraints(&self, e: &Evaluation) -> Vec<f64> {
        let mut g = Vec::with_capacity(6);
        for (b, get) in self.list() {
            if let Some(b) = b {
                let end = if b.lower.is_finite() { b.lower } else { b.upper };
                let span = if b.span().is_finite() { b.span().max(1e-9) } else { end.abs().max(1.0) };
                let v = get(e);
                if b.lower.is_finite() {
                    g.push((b.lower - v) / span);
                }
                if b.upper.is_finite() {
                    g.push((v - b.upper) / span);
                }
            }
        }
        g
    }
}

/// Constraint violations up to this (in bound spans) count as satisfied.
pub const FEASIBILITY_TOL: f64 = 1e-3;

pub struct OptimizationProblem<'a> {
    pub model: &'a dyn PlantModel,
    pub point: OperatingPoint,
    /// `[cwp, chwp, ct]` speed box.
    pub bounds: [Bounds; 3],
    pub predicted: PredictedBounds,
    pub start: ControlVector,
}

impl OptimizationProblem<'_> {
    pub fn validate(&self) -> Result<(), OptimizeError> {
        for (b, x) in self.bounds.iter().zip(self.start.to_array()) {
            if !(b.lower <= b.upper) {
                return Err(OptimizeError::InvalidProblem(format!("box [{}, {}] is empty", b.lower, b.upper)));
            }
            if !b.contains(x) {
                return Err(OptimizeError::InvalidProblem(format!("start {x} outside [{}, {}]", b.lower, b.upper)));
            }
        }
        for b in [self.predicted.chfhdr, self.predicted.cwfhdr, self.predicted.cwshdr].into_iter().flatten() {
            if !(b.lower <= b.upper) {
                return Err(OptimizeError::InvalidProblem(format!("predicted bound [{}, {}] is empty", b.lower, b.upper)));
            }
        }
        Ok(())
    }

    /// Objective, constraint values and worst violation at `x`.
    pub fn assess(&self, x: [f64; 3]) -> Result<Assessment, OptimizeError> {
        let e = self.model.evaluate(&ControlVector::from_array(x), &self.point).map_err(OptimizeError::Model)?;
        let g = self.predicted.constraints(&e);
        let violation = g.iter().copied().fold(0.0, f64::max);
        Ok(Assessment { x, evaluation: e, g, violation })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assessment {
    pub x: [f64; 3],
    pub evaluation: Evaluation,
    pub g: Vec<f64>,
    pub violation: f64,
}

impl Assessment {
    pub fn feasible(&self) -> bool {
        self.violation <= FEASIBILITY_TOL
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub control: ControlVector,
    pub predicted_kw: f64,
    pub chfhdr: f64,
    pub cwfhdr: f64,
    pub cwshdr: f64,
    pub evaluations: usize,
    pub feasible: bool,
}

impl OptimizationResult {
    pub(crate) fn from_assessment(a: &Assessment, evaluations: usize) -> Self {
        Self {
            control: ControlVector::from_array(a.x),
            predicted_kw: a.evaluation.total_kw,
            chfhdr: a.evaluation.chfhdr,
            cwfhdr: a.evaluation.cwfhdr,
            cwshdr: a.evaluation.cwshdr,
            evaluations,
            feasible: a.feasible(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum OptimizeError {
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("no feasible point found (least violation {violation:.4} after {evaluations} evaluations)")]
    NoFeasiblePoint { violation: f64, evaluations: usize },
    #[error("model evaluation failed: {0}")]
    Model(String),
}
