//! Derivative-free constrained minimization by linear approximation over a
//! shrinking trust region, in the manner of Powell's COBYLA.
//!
//! A simplex of `n + 1` evaluated points yields linear models of the
//! objective and each constraint. Each iteration minimizes the linear
//! objective inside an L∞ trust region of radius `rho`, subject to the
//! linearized constraints (or, when those cannot be met, to the least
//! achievable linearized violation). Progress is judged with the merit
//! function `f + mu * violation`; `rho` halves whenever the model stops
//! producing progress on a well-shaped simplex. The surrogate is not convex,
//! so the local search is repeated from a few fixed points of the box.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::numeric::{minimize_linear, LinearProgram};

use super::problem::{Assessment, OptimizationProblem, OptimizationResult, OptimizeError};
use super::Solver;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LinearTrustRegion {
    pub rho_begin: f64,
    pub rho_end: f64,
    /// Evaluation budget of each local run.
    pub max_evals: usize,
    /// Further starting points after the problem's own start, as fractions
    /// of the speed box. The best point over all runs is returned.
    pub restarts: Vec<[f64; 3]>,
}

/// Box centre plus a half-fraction two-level design at the quartiles.
pub const DEFAULT_RESTARTS: [[f64; 3]; 5] =
    [[0.5, 0.5, 0.5], [0.25, 0.25, 0.25], [0.75, 0.75, 0.25], [0.75, 0.25, 0.75], [0.25, 0.75, 0.75]];

impl Default for LinearTrustRegion {
    fn default() -> Self {
        Self { rho_begin: 10.0, rho_end: 0.1, max_evals: 200, restarts: DEFAULT_RESTARTS.to_vec() }
    }
}

const DIST_FACTOR: f64 = 2.1;
const VOLUME_FACTOR: f64 = 0.25;

struct Vertex {
    y: Vec<f64>,
    a: Assessment,
}

struct Search<'p, 'a> {
    problem: &'p OptimizationProblem<'a>,
    free: Vec<usize>,
    base: [f64; 3],
    lo: Vec<f64>,
    hi: Vec<f64>,
    evals: usize,
    max_evals: usize,
    best: Option<Assessment>,
}

impl Search<'_, '_> {
    fn full(&self, y: &[f64]) -> [f64; 3] {
        let mut x = self.base;
        for (&i, &v) in self.free.iter().zip(y) {
            x[i] = v;
        }
        x
    }

    fn eval(&mut self, y: Vec<f64>) -> Result<Vertex, OptimizeError> {
        let y: Vec<f64> = y.iter().zip(self.lo.iter().zip(&self.hi)).map(|(v, (l, h))| v.clamp(*l, *h)).collect();
        let a = self.problem.assess(self.full(&y))?;
        self.evals += 1;
        let better = match &self.best {
            None => true,
            Some(b) => match (a.feasible(), b.feasible()) {
                (true, false) => true,
                (false, true) => false,
                (true, true) => a.evaluation.total_kw < b.evaluation.total_kw,
                (false, false) => a.violation < b.violation,
            },
        };
        if better {
            self.best = Some(a.clone());
        }
        Ok(Vertex { y, a })
    }

    fn exhausted(&self) -> bool {
        self.evals >= self.max_evals
    }
}

fn merit(a: &Assessment, mu: f64) -> f64 {
    a.evaluation.total_kw + mu * a.violation
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Trust-region step for the linear models.
fn lp_step(g0: &[f64], grad_f: &[f64], grad_g: &[Vec<f64>], lo: &[f64], hi: &[f64]) -> Option<Vec<f64>> {
    let k = grad_f.len();
    let mut t_star = 0.0;
    if !g0.is_empty() {
        // Least achievable worst linearized violation inside the region.
        let mut cost = vec![0.0; k + 1];
        cost[k] = 1.0;
        let mut lp = LinearProgram::new(cost);
        for (g, a) in g0.iter().zip(grad_g) {
            let mut row = a.clone();
            row.push(-1.0);
            lp.push_le(row, -g);
        }
        let reach: f64 = grad_g.iter().map(|a| a.iter().zip(lo.iter().zip(hi)).map(|(ai, (l, h))| ai.abs() * l.abs().max(h.abs())).sum::<f64>()).fold(0.0, f64::max);
        let t_max = g0.iter().copied().fold(0.0, f64::max) + reach + 1.0;
        for i in 0..k {
            lp.push_bounds(i, lo[i], hi[i]);
        }
        lp.push_bounds(k, 0.0, t_max);
        t_star = minimize_linear(&lp)?[k];
    }
    let mut lp = LinearProgram::new(grad_f.to_vec());
    for (g, a) in g0.iter().zip(grad_g) {
        lp.push_le(a.clone(), t_star - g + 1e-12 * (1.0 + g.abs()));
    }
    for i in 0..k {
        lp.push_bounds(i, lo[i], hi[i]);
    }
    minimize_linear(&lp)
}

impl LinearTrustRegion {
    fn run(&self, problem: &OptimizationProblem<'_>) -> Result<OptimizationResult, OptimizeError> {
        problem.validate()?;
        if !(self.rho_end > 0.0 && self.rho_begin >= self.rho_end) {
            return Err(OptimizeError::InvalidProblem("need 0 < rho_end <= rho_begin".into()));
        }
        let start = problem.start.to_array();
        let free: Vec<usize> = (0..3).filter(|&i| problem.bounds[i].span() > 0.0).collect();
        let lo: Vec<f64> = free.iter().map(|&i| problem.bounds[i].lower).collect();
        let hi: Vec<f64> = free.iter().map(|&i| problem.bounds[i].upper).collect();
        let k = free.len();
        let budget = self.max_evals.max(k + 2);
        let mut s = Search { problem, free: free.clone(), base: start, lo, hi, evals: 0, max_evals: budget, best: None };

        let y0: Vec<f64> = free.iter().map(|&i| start[i]).collect();
        self.local(&mut s, y0)?;
        if k > 0 {
            for frac in &self.restarts {
                let y: Vec<f64> = free.iter().map(|&i| problem.bounds[i].lower + frac[i].clamp(0.0, 1.0) * problem.bounds[i].span()).collect();
                s.max_evals = s.evals + budget;
                self.local(&mut s, y)?;
            }
        }

        let best = s.best.clone().expect("at least one evaluation");
        if !best.feasible() {
            return Err(OptimizeError::NoFeasiblePoint { violation: best.violation, evaluations: s.evals });
        }
        Ok(OptimizationResult::from_assessment(&best, s.evals))
    }

    fn local(&self, s: &mut Search<'_, '_>, y0: Vec<f64>) -> Result<(), OptimizeError> {
        let k = y0.len();
        let first = s.eval(y0.clone())?;
        if k == 0 {
            return Ok(());
        }
        let min_span = s.lo.iter().zip(&s.hi).map(|(l, h)| h - l).fold(f64::INFINITY, f64::min);
        let mut rho = self.rho_begin.min(0.5 * min_span).max(self.rho_end.min(0.5 * min_span));
        let rho_end = self.rho_end.min(rho);
        let mut sim = vec![first];
        for i in 0..k {
            let mut y = y0.clone();
            y[i] += if y0[i] + rho <= s.hi[i] { rho } else { -rho };
            sim.push(s.eval(y)?);
        }
        self.iterate(s, &mut sim, &mut rho, rho_end)
    }

    fn iterate(&self, s: &mut Search<'_, '_>, sim: &mut Vec<Vertex>, rho: &mut f64, rho_end: f64) -> Result<(), OptimizeError> {
        let k = sim.len() - 1;
        let mut mu = 0.0;
        loop {
            if s.exhausted() {
                return Ok(());
            }
            // Best vertex by merit goes first.
            let pivot = (0..=k)
                .min_by(|&i, &j| {
                    let (a, b) = (&sim[i].a, &sim[j].a);
                    merit(a, mu).total_cmp(&merit(b, mu)).then(a.violation.total_cmp(&b.violation))
                })
                .unwrap();
            sim.swap(0, pivot);

            let d = DMatrix::from_fn(k, k, |r, c| sim[r + 1].y[c] - sim[0].y[c]);
            let Some(dinv) = d.clone().try_inverse() else {
                self.rebuild(s, sim, *rho)?;
                continue;
            };
            let slope = |vals: DVector<f64>| -> Vec<f64> { (&dinv * vals).iter().copied().collect() };
            let grad_f = slope(DVector::from_fn(k, |r, _| sim[r + 1].a.evaluation.total_kw - sim[0].a.evaluation.total_kw));
            let m = sim[0].a.g.len();
            let grad_g: Vec<Vec<f64>> = (0..m).map(|j| slope(DVector::from_fn(k, |r, _| sim[r + 1].a.g[j] - sim[0].a.g[j]))).collect();

            // Simplex shape: edge lengths and each vertex's distance to the opposite face.
            let dist: Vec<f64> = (1..=k).map(|i| norm(&(0..k).map(|c| sim[i].y[c] - sim[0].y[c]).collect::<Vec<_>>())).collect();
            let vsig: Vec<f64> = (0..k).map(|r| 1.0 / dinv.column(r).norm()).collect();
            let shape_ok = dist.iter().all(|&x| x <= DIST_FACTOR * *rho) && vsig.iter().all(|&v| v >= VOLUME_FACTOR * *rho);

            let y0 = sim[0].y.clone();
            let lo: Vec<f64> = (0..k).map(|i| (-*rho).max(s.lo[i] - y0[i])).collect();
            let hi: Vec<f64> = (0..k).map(|i| rho.min(s.hi[i] - y0[i])).collect();
            let g0 = sim[0].a.g.clone();
            let step = lp_step(&g0, &grad_f, &grad_g, &lo, &hi).unwrap_or_else(|| vec![0.0; k]);

            if norm(&step) < 0.5 * *rho {
                if !shape_ok {
                    self.improve_geometry(s, sim, &dinv, &dist, &vsig, *rho)?;
                    continue;
                }
                if *rho <= rho_end {
                    return Ok(());
                }
                *rho = shrink(*rho, rho_end);
                continue;
            }

            let lin_viol = g0
                .iter()
                .zip(&grad_g)
                .map(|(g, a)| g + a.iter().zip(&step).map(|(p, q)| p * q).sum::<f64>())
                .fold(0.0, f64::max);
            let pred_viol = sim[0].a.violation - lin_viol;
            let pred_f = -grad_f.iter().zip(&step).map(|(p, q)| p * q).sum::<f64>();
            if pred_viol > 0.0 {
                let need = -pred_f / pred_viol;
                if mu < 1.5 * need {
                    mu = 2.0 * need;
                    let still_pivot = (1..=k).all(|i| merit(&sim[i].a, mu) >= merit(&sim[0].a, mu));
                    if !still_pivot {
                        continue;
                    }
                }
            }
            let pred = pred_f + mu * pred_viol;

            let trial = s.eval(y0.iter().zip(&step).map(|(a, b)| a + b).collect())?;
            let actual = merit(&sim[0].a, mu) - merit(&trial.a, mu);
            let ratio = if pred > 0.0 { actual / pred } else { -1.0 };

            // Express the step in simplex coordinates to pick the vertex it replaces.
            let sigma: Vec<f64> = (0..k).map(|r| dinv.column(r).iter().zip(&step).map(|(a, b)| a * b).sum::<f64>()).collect();
            let weight = |r: usize, base_dist: f64| sigma[r].abs() * (base_dist / *rho).max(1.0).powi(3);
            let replace = if actual > 0.0 {
                // New pivot: the old pivot stays as a vertex.
                (0..k).max_by(|&a, &b| weight(a, dist[a]).total_cmp(&weight(b, dist[b])))
            } else {
                (0..k)
                    .filter(|&r| weight(r, dist[r]) > 1.0)
                    .max_by(|&a, &b| weight(a, dist[a]).total_cmp(&weight(b, dist[b])))
            };
            if let Some(r) = replace {
                sim[r + 1] = trial;
            }
            if ratio <= 0.1 {
                if !shape_ok {
                    self.improve_geometry(s, sim, &dinv, &dist, &vsig, *rho)?;
                } else if replace.is_none() || ratio <= 0.0 {
                    if *rho <= rho_end {
                        return Ok(());
                    }
                    *rho = shrink(*rho, rho_end);
                }
            }
        }
    }

    /// Replaces the worst-placed vertex with a point at distance `rho` from
    /// the pivot, along the direction that restores simplex volume.
    fn improve_geometry(
        &self,
        s: &mut Search<'_, '_>,
        sim: &mut [Vertex],
        dinv: &DMatrix<f64>,
        dist: &[f64],
        vsig: &[f64],
        rho: f64,
    ) -> Result<(), OptimizeError> {
        let k = dist.len();
        let far = (0..k).max_by(|&a, &b| dist[a].total_cmp(&dist[b])).unwrap();
        let r = if dist[far] > DIST_FACTOR * rho { far } else { (0..k).min_by(|&a, &b| vsig[a].total_cmp(&vsig[b])).unwrap() };
        let dir: Vec<f64> = dinv.column(r).iter().map(|v| v * vsig[r]).collect();
        let y0 = &sim[0].y;
        let room = |sign: f64| -> f64 {
            (0..k)
                .map(|i| {
                    let d = sign * dir[i] * rho;
                    if d > 0.0 {
                        ((s.hi[i] - y0[i]) / d).min(1.0)
                    } else if d < 0.0 {
                        ((s.lo[i] - y0[i]) / d).min(1.0)
                    } else {
                        1.0
                    }
                })
                .fold(1.0, f64::min)
        };
        let (sign, scale) = if room(1.0) >= room(-1.0) { (1.0, room(1.0)) } else { (-1.0, room(-1.0)) };
        let y: Vec<f64> = (0..k).map(|i| y0[i] + sign * scale * rho * dir[i]).collect();
        if scale <= 1e-6 {
            return self.rebuild(s, sim, rho);
        }
        sim[r + 1] = s.eval(y)?;
        Ok(())
    }

    /// Fresh axis-aligned simplex around the pivot.
    fn rebuild(&self, s: &mut Search<'_, '_>, sim: &mut [Vertex], rho: f64) -> Result<(), OptimizeError> {
        let y0 = sim[0].y.clone();
        for i in 0..y0.len() {
            if s.exhausted() {
                break;
            }
            let mut y = y0.clone();
            y[i] += if y0[i] + rho <= s.hi[i] { rho } else { -rho };
            sim[i + 1] = s.eval(y)?;
        }
        Ok(())
    }
}

fn shrink(rho: f64, rho_end: f64) -> f64 {
    let next = 0.5 * rho;
    if next <= 1.5 * rho_end {
        rho_end
    } else {
        next
    }
}

impl Solver for LinearTrustRegion {
    fn name(&self) -> &str {
        "cobyla"
    }

    fn solve(&self, problem: &OptimizationProblem<'_>) -> Result<OptimizationResult, OptimizeError> {
        self.run(problem)
    }
}
