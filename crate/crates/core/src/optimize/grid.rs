use serde::{Deserialize, Serialize};

use super::problem::{Assessment, OptimizationProblem, OptimizationResult, OptimizeError};
use super::Solver;

/// Exhaustive search over a regular grid on the speed box, optionally
/// followed by a finer grid around the coarse winner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridSearch {
    pub step: f64,
    pub refine_step: Option<f64>,
}

impl Default for GridSearch {
    fn default() -> Self {
        Self { step: 1.0, refine_step: None }
    }
}

fn axis(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    if hi <= lo {
        return vec![lo];
    }
    let n = ((hi - lo) / step).floor() as usize;
    let mut v: Vec<f64> = (0..=n).map(|i| lo + i as f64 * step).collect();
    if hi - v[n] > 1e-9 * step {
        v.push(hi);
    }
    v
}

fn better(a: &Assessment, b: &Option<Assessment>) -> bool {
    match b {
        None => true,
        Some(b) => match (a.feasible(), b.feasible()) {
            (true, false) => true,
            (false, true) => false,
            (true, true) => a.evaluation.total_kw < b.evaluation.total_kw,
            (false, false) => a.violation < b.violation,
        },
    }
}

impl GridSearch {
    fn scan(&self, p: &OptimizationProblem<'_>, axes: [Vec<f64>; 3], best: &mut Option<Assessment>, evals: &mut usize) -> Result<(), OptimizeError> {
        for &a in &axes[0] {
            for &b in &axes[1] {
                for &c in &axes[2] {
                    let r = p.assess([a, b, c]);
                    *evals += 1;
                    match r {
                        Ok(x) if better(&x, best) => *best = Some(x),
                        Ok(_) => {}
                        // Points the model cannot evaluate are simply not candidates.
                        Err(OptimizeError::Model(_)) => {}
                        Err(e) => return Err(e),
                    }
                }
            }
        }
        Ok(())
    }
}

impl Solver for GridSearch {
    fn name(&self) -> &str {
        "grid"
    }

    fn solve(&self, p: &OptimizationProblem<'_>) -> Result<OptimizationResult, OptimizeError> {
        p.validate()?;
        if !(self.step > 0.0) {
            return Err(OptimizeError::InvalidProblem("grid step must be positive".into()));
        }
        let mut best = None;
        let mut evals = 0;
        let axes = p.bounds.map(|b| axis(b.lower, b.upper, self.step));
        self.scan(p, axes, &mut best, &mut evals)?;
        if let (Some(fine), Some(center)) = (self.refine_step, best.clone()) {
            let axes = [0, 1, 2].map(|i| {
                let b = p.bounds[i];
                axis((center.x[i] - self.step).max(b.lower), (center.x[i] + self.step).min(b.upper), fine)
            });
            self.scan(p, axes, &mut best, &mut evals)?;
        }
        match best {
            Some(b) if b.feasible() => Ok(OptimizationResult::from_assessment(&b, evals)),
            Some(b) => Err(OptimizeError::NoFeasiblePoint { violation: b.violation, evaluations: evals }),
            None => Err(OptimizeError::Model("no grid point could be evaluated".into())),
        }
    }
}
