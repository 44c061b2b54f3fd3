use serde::{Deserialize, Serialize};

use crate::numeric::{eval_poly, fit_poly_lstsq, PolyFitError};

use super::FitError;

pub const MIN_POLY_POINTS: usize = 8;

/// Cubic `y = a0 + a1 x + a2 x² + a3 x³` for a single pump or fan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyModel {
    /// `[a0, a1, a2, a3]`
    pub coefficients: Vec<f64>,
    pub input: String,
    pub output: String,
    pub x_min: f64,
    pub x_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub value: f64,
    /// Input fell outside the training range.
    pub extrapolated: bool,
}

impl PolyModel {
    pub fn fit(xs: &[f64], ys: &[f64], input: &str, output: &str) -> Result<Self, FitError> {
        if xs.len() != ys.len() || xs.len() < MIN_POLY_POINTS {
            return Err(FitError::TooFewRows { needed: MIN_POLY_POINTS, got: xs.len().min(ys.len()) });
        }
        let coefficients = fit_poly_lstsq(xs, ys, 3).map_err(|e| match e {
            PolyFitError::NonFinite => FitError::NonFinite,
            _ => FitError::Degenerate,
        })?;
        let x_min = xs.iter().copied().fold(f64::INFINITY, f64::min);
        let x_max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(Self { coefficients, input: input.into(), output: output.into(), x_min, x_max })
    }

    pub fn predict(&self, x: f64) -> Prediction {
        Prediction { value: eval_poly(&self.coefficients, x), extrapolated: x < self.x_min || x > self.x_max }
    }

    pub fn eval(&self, x: f64) -> f64 {
        eval_poly(&self.coefficients, x)
    }
}
