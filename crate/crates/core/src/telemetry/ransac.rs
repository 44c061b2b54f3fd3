use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::numeric::{eval_poly, fit_poly_exact, fit_poly_lstsq};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RansacError {
    #[error("need more than {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("no candidate model reached half the points as inliers (best {best} of {n})")]
    Degenerate { best: usize, n: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RansacFit {
    pub inliers: Vec<bool>,
    /// Coefficients of the refit on the consensus set, lowest order first.
    pub coefficients: Vec<f64>,
}

impl RansacFit {
    pub fn inlier_count(&self) -> usize {
        self.inliers.iter().filter(|&&b| b).count()
    }
}

/// Polynomial RANSAC: sample `degree + 1` points, interpolate, count points
/// within `tol` of the curve, keep the best consensus, refit it by least
/// squares and report which points sit within `tol` of the refit.
pub fn ransac_filter(
    points: &[(f64, f64)],
    degree: usize,
    tol: f64,
    iterations: usize,
    seed: u64,
) -> Result<RansacFit, RansacError> {
    let n = points.len();
    let m = degree + 1;
    if n <= m {
        return Err(RansacError::TooFewPoints { needed: m, got: n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let within = |c: &[f64], &(x, y): &(f64, f64)| (y - eval_poly(c, x)).abs() <= tol;

    let mut best: Option<(usize, Vec<f64>)> = None;
    for _ in 0..iterations {
        let idx = sample(&mut rng, n, m);
        let xs: Vec<f64> = idx.iter().map(|i| points[i].0).collect();
        let ys: Vec<f64> = idx.iter().map(|i| points[i].1).collect();
        let Some(c) = fit_poly_exact(&xs, &ys) else { continue };
        let count = points.iter().filter(|p| within(&c, p)).count();
        if best.as_ref().is_none_or(|(b, _)| count > *b) {
            best = Some((count, c));
        }
    }
    let (count, model) = best.unwrap_or((0, Vec::new()));
    if 2 * count < n {
        return Err(RansacError::Degenerate { best: count, n });
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = points.iter().filter(|p| within(&model, p)).copied().unzip();
    let coefficients = fit_poly_lstsq(&xs, &ys, degree).unwrap_or(model);
    let inliers = points.iter().map(|p| within(&coefficients, p)).collect();
    Ok(RansacFit { inliers, coefficients })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clean_cubic_is_all_inliers() {
        let pts: Vec<(f64, f64)> = (0..200).map(|i| {
            let x = -2.0 + 4.0 * i as f64 / 199.0;
            (x, x * x * x)
        }).collect();
        let fit = ransac_filter(&pts, 3, 1e-6, 50, 1).unwrap();
        assert_eq!(fit.inlier_count(), 200);
    }

    #[test]
    fn too_few_points() {
        let pts = [(0.0, 0.0), (1.0, 1.0), (2.0, 8.0)];
        assert_eq!(ransac_filter(&pts, 3, 0.1, 10, 1), Err(RansacError::TooFewPoints { needed: 4, got: 3 }));
    }

    #[test]
    fn scattered_points_are_degenerate() {
        let pts: Vec<(f64, f64)> = (0..40u64).map(|i| (i as f64, ((i * 37) % 101) as f64 * 10.0)).collect();
        assert!(matches!(ransac_filter(&pts, 3, 1e-3, 100, 1), Err(RansacError::Degenerate { .. })));
    }
}
