//! One-hidden-layer perceptron: 3 logistic units, linear output.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::FitError;

pub const HIDDEN: usize = 3;
pub const MIN_MLP_ROWS: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpConfig {
    pub max_epochs: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    /// Stop after this many epochs without validation improvement.
    pub patience: usize,
    pub validation_fraction: f64,
    pub seed: u64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        Self { max_epochs: 5000, learning_rate: 0.05, momentum: 0.9, patience: 200, validation_fraction: 0.1, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: f64,
    pub scale: f64,
}

impl Standardizer {
    fn fit(values: impl Iterator<Item = f64> + Clone) -> Self {
        let n = values.clone().count() as f64;
        let mean = values.clone().sum::<f64>() / n;
        let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        // Constant features pass through centred but unscaled.
        let scale = if var > 0.0 { var.sqrt() } else { 1.0 };
        Self { mean, scale }
    }

    fn apply(&self, v: f64) -> f64 {
        (v - self.mean) / self.scale
    }

    fn invert(&self, z: f64) -> f64 {
        z * self.scale + self.mean
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub inputs: Vec<String>,
    pub output: String,
    pub x_std: Vec<Standardizer>,
    pub y_std: Standardizer,
    /// Flat parameters, see [`ParamLayout`].
    pub params: Vec<f64>,
    pub epochs_run: usize,
}

/// Offsets into the flat parameter vector: `W1` (`HIDDEN × n_in`, row
/// major), `b1`, `w2`, `b2`.
#[derive(Debug, Clone, Copy)]
pub struct ParamLayout {
    pub n_in: usize,
}

impl ParamLayout {
    pub fn len(&self) -> usize {
        HIDDEN * self.n_in + 2 * HIDDEN + 1
    }
    fn b1(&self) -> usize {
        HIDDEN * self.n_in
    }
    fn w2(&self) -> usize {
        self.b1() + HIDDEN
    }
    fn b2(&self) -> usize {
        self.w2() + HIDDEN
    }
}

fn logistic(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Network output for one standardized input row.
pub fn forward(params: &[f64], x: &[f64]) -> f64 {
    let l = ParamLayout { n_in: x.len() };
    let mut out = params[l.b2()];
    for h in 0..HIDDEN {
        let w = &params[h * l.n_in..(h + 1) * l.n_in];
        let z = params[l.b1() + h] + w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
        out += params[l.w2() + h] * logistic(z);
    }
    out
}

/// Mean squared error over `rows` and its gradient with respect to `params`.
pub fn loss_and_gradient(params: &[f64], xs: &[Vec<f64>], ys: &[f64], rows: &[usize]) -> (f64, Vec<f64>) {
    let n_in = xs.first().map_or(0, Vec::len);
    let l = ParamLayout { n_in };
    let mut grad = vec![0.0; l.len()];
    let mut loss = 0.0;
    let mut a = [0.0; HIDDEN];
    for &i in rows {
        let x = &xs[i];
        let mut out = params[l.b2()];
        for (h, ah) in a.iter_mut().enumerate() {
            let w = &params[h * n_in..(h + 1) * n_in];
            let z = params[l.b1() + h] + w.iter().zip(x).map(|(p, q)| p * q).sum::<f64>();
            *ah = logistic(z);
            out += params[l.w2() + h] * *ah;
        }
        let err = out - ys[i];
        loss += err * err;
        let d_out = 2.0 * err;
        grad[l.b2()] += d_out;
        for h in 0..HIDDEN {
            grad[l.w2() + h] += d_out * a[h];
            let dz = d_out * params[l.w2() + h] * a[h] * (1.0 - a[h]);
            grad[l.b1() + h] += dz;
            for (g, xi) in grad[h * n_in..(h + 1) * n_in].iter_mut().zip(x) {
                *g += dz * xi;
            }
        }
    }
    let n = rows.len().max(1) as f64;
    grad.iter_mut().for_each(|g| *g /= n);
    (loss / n, grad)
}

/// Glorot-style uniform initialization.
pub fn init_params<R: Rng>(n_in: usize, rng: &mut R) -> Vec<f64> {
    let l = ParamLayout { n_in };
    let mut p = vec![0.0; l.len()];
    let r1 = (6.0 / (n_in + HIDDEN) as f64).sqrt();
    let r2 = (6.0 / (HIDDEN + 1) as f64).sqrt();
    for v in &mut p[..l.b1()] {
        *v = rng.random_range(-r1..r1);
    }
    for v in &mut p[l.w2()..l.b2()] {
        *v = rng.random_range(-r2..r2);
    }
    p
}

impl MlpModel {
    /// Full-batch gradient descent with momentum on standardized data,
    /// keeping the weights with the best validation loss.
    pub fn fit(
        inputs: &[&str],
        output: &str,
        x: &[Vec<f64>],
        y: &[f64],
        cfg: &MlpConfig,
    ) -> Result<Self, FitError> {
        let n = x.len();
        if n != y.len() || n < MIN_MLP_ROWS {
            return Err(FitError::TooFewRows { needed: MIN_MLP_ROWS, got: n.min(y.len()) });
        }
        let n_in = inputs.len();
        if x.iter().any(|r| r.len() != n_in) {
            return Err(FitError::Shape(format!("every row needs {n_in} features")));
        }
        if x.iter().flatten().chain(y).any(|v| !v.is_finite()) {
            return Err(FitError::NonFinite);
        }
        let x_std: Vec<Standardizer> = (0..n_in).map(|j| Standardizer::fit(x.iter().map(move |r| r[j]))).collect();
        let y_std = Standardizer::fit(y.iter().copied());
        let xs: Vec<Vec<f64>> = x.iter().map(|r| r.iter().zip(&x_std).map(|(v, s)| s.apply(*v)).collect()).collect();
        let ys: Vec<f64> = y.iter().map(|v| y_std.apply(*v)).collect();

        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let n_val = ((n as f64 * cfg.validation_fraction).round() as usize).clamp(1, n - 1);
        let (val, train) = order.split_at(n_val);

        let mut params = init_params(n_in, &mut rng);
        let mut velocity = vec![0.0; params.len()];
        let mut best = params.clone();
        let mut best_val = f64::INFINITY;
        let mut stall = 0;
        let mut epochs_run = 0;
        for _ in 0..cfg.max_epochs {
            epochs_run += 1;
            let (loss, grad) = loss_and_gradient(&params, &xs, &ys, train);
            if !loss.is_finite() {
                return Err(FitError::NonFinite);
            }
            for ((p, v), g) in params.iter_mut().zip(&mut velocity).zip(&grad) {
                *v = cfg.momentum * *v - cfg.learning_rate * g;
                *p += *v;
            }
            let val_loss = mse(&params, &xs, &ys, val);
            if !val_loss.is_finite() {
                return Err(FitError::NonFinite);
            }
            if val_loss < best_val {
                best_val = val_loss;
                best.copy_from_slice(&params);
                stall = 0;
            } else {
                stall += 1;
                if stall >= cfg.patience {
                    break;
                }
            }
        }
        Ok(Self {
            inputs: inputs.iter().map(|s| s.to_string()).collect(),
            output: output.into(),
            x_std,
            y_std,
            params: best,
            epochs_run,
        })
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.inputs.len());
        let z: Vec<f64> = x.iter().zip(&self.x_std).map(|(v, s)| s.apply(*v)).collect();
        self.y_std.invert(forward(&self.params, &z))
    }
}

fn mse(params: &[f64], xs: &[Vec<f64>], ys: &[f64], rows: &[usize]) -> f64 {
    rows.iter().map(|&i| (forward(params, &xs[i]) - ys[i]).powi(2)).sum::<f64>() / rows.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn affine_data(n: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.random_range(20.0..100.0), rng.random_range(5.0..10.0)]).collect();
        let y = x.iter().map(|r| 50.0 + 0.8 * r[0] - 3.0 * r[1]).collect();
        (x, y)
    }

    #[test]
    fn fits_affine_target() {
        let (x, y) = affine_data(400, 1);
        let m = MlpModel::fit(&["a", "b"], "y", &x, &y, &MlpConfig::default()).unwrap();
        let (xt, yt) = affine_data(200, 2);
        let pred: Vec<f64> = xt.iter().map(|r| m.predict(r)).collect();
        let err = crate::telemetry::mape(&yt, &pred).unwrap();
        assert!(err <= 0.5, "mape {err}");
    }

    #[test]
    fn same_seed_same_model() {
        let (x, y) = affine_data(300, 3);
        let cfg = MlpConfig { max_epochs: 200, ..MlpConfig::default() };
        let a = MlpModel::fit(&["a", "b"], "y", &x, &y, &cfg).unwrap();
        let b = MlpModel::fit(&["a", "b"], "y", &x, &y, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn too_few_rows() {
        let (x, y) = affine_data(100, 3);
        assert!(matches!(MlpModel::fit(&["a", "b"], "y", &x, &y, &MlpConfig::default()), Err(FitError::TooFewRows { .. })));
    }

    #[test]
    fn constant_feature_is_harmless() {
        let (mut x, y) = affine_data(300, 4);
        x.iter_mut().for_each(|r| r.push(1.0));
        let cfg = MlpConfig { max_epochs: 300, ..MlpConfig::default() };
        let m = MlpModel::fit(&["a", "b", "c"], "y", &x, &y, &cfg).unwrap();
        assert_eq!(m.x_std[2].scale, 1.0);
        assert!(m.predict(&x[0]).is_finite());
    }
}
