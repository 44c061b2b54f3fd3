use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PolyFitError {
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("design matrix is rank deficient")]
    RankDeficient,
    #[error("input contains non-finite values")]
    NonFinite,
}

/// Horner evaluation of `c[0] + c[1] x + ... + c[k] x^k`.
pub fn eval_poly(coefficients: &[f64], x: f64) -> f64 {
    coefficients.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// Least-squares polynomial of the given degree.
///
/// The fit is computed in the centered and scaled variable `t = (x - c) / h`
/// (with `t` spanning [-1, 1] over the data) through an SVD, then expanded
/// back to raw monomial coefficients.
pub fn fit_poly_lstsq(xs: &[f64], ys: &[f64], degree: usize) -> Result<Vec<f64>, PolyFitError> {
    assert_eq!(xs.len(), ys.len(), "xs and ys must have equal length");
    let n = xs.len();
    if n < degree + 1 {
        return Err(PolyFitError::TooFewPoints { needed: degree + 1, got: n });
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(PolyFitError::NonFinite);
    }
    let (lo, hi) = xs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    if half <= 0.0 {
        return Err(PolyFitError::RankDeficient);
    }

    let design = DMatrix::from_fn(n, degree + 1, |i, j| ((xs[i] - center) / half).powi(j as i32));
    let rhs = DVector::from_column_slice(ys);
    let svd = design.svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    if !(smin > smax * 1e-10) {
        return Err(PolyFitError::RankDeficient);
    }
    let scaled = svd
        .solve(&rhs, smax * 1e-13)
        .map_err(|_| PolyFitError::RankDeficient)?;
    Ok(expand_scaled(scaled.as_slice(), center, half))
}

/// Exact interpolating polynomial through `degree + 1` points.
///
/// Returns `None` when two abscissae coincide (singular Vandermonde system).
pub fn fit_poly_exact(xs: &[f64], ys: &[f64]) -> Option<Vec<f64>> {
    let n = xs.len();
    debug_assert_eq!(n, ys.len());
    let (lo, hi) = xs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    if !(half > 0.0) {
        return if n == 1 { Some(vec![ys[0]]) } else { None };
    }
    let vander = DMatrix::from_fn(n, n, |i, j| ((xs[i] - center) / half).powi(j as i32));
    let lu = vander.lu();
    let scaled = lu.solve(&DVector::from_column_slice(ys))?;
    if scaled.iter().any(|c| !c.is_finite()) {
        return None;
    }
    Some(expand_scaled(scaled.as_slice(), center, half))
}

/// Rewrites `Σ b_j ((x - c)/h)^j` as `Σ a_k x^k`.
fn expand_scaled(scaled: &[f64], center: f64, half: f64) -> Vec<f64> {
    let degree = scaled.len() - 1;
    let mut raw = vec![0.0; degree + 1];
    for (j, &b) in scaled.iter().enumerate() {
        let factor = b / half.powi(j as i32);
        // (x - c)^j = Σ_k C(j,k) x^k (-c)^(j-k)
        let mut binom = 1.0;
        for k in 0..=j {
            raw[k] += factor * binom * (-center).powi((j - k) as i32);
            binom = binom * (j - k) as f64 / (k + 1) as f64;
        }
    }
    raw
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn horner_matches_direct_sum() {
        let c = [1.0, -2.0, 0.5, 3.0];
        let x = 1.7_f64;
        let direct = 1.0 - 2.0 * x + 0.5 * x * x + 3.0 * x.powi(3);
        assert!((eval_poly(&c, x) - direct).abs() < 1e-12);
    }

    #[test]
    fn lstsq_recovers_generating_cubic() {
        let xs: Vec<f64> = (0..50).map(|i| 20.0 + 80.0 * i as f64 / 49.0).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 + 0.001 * x.powi(3)).collect();
        let c = fit_poly_lstsq(&xs, &ys, 3).unwrap();
        assert!((c[0] - 2.0).abs() / 2.0 < 1e-9);
        assert!((c[3] - 0.001).abs() / 0.001 < 1e-9);
        assert!(c[1].abs() * 100.0 < 1e-7 && c[2].abs() * 1e4 < 1e-7);
    }

    #[test]
    fn constant_abscissa_is_rank_deficient() {
        let xs = [3.0; 10];
        let ys: Vec<f64> = (0..10).map(f64::from).collect();
        assert_eq!(fit_poly_lstsq(&xs, &ys, 3), Err(PolyFitError::RankDeficient));
    }

    #[test]
    fn three_distinct_abscissae_cannot_fix_a_cubic() {
        let xs = [1.0, 1.0, 2.0, 2.0, 3.0, 3.0];
        let ys = [1.0, 1.1, 2.0, 2.1, 3.0, 3.1];
        assert_eq!(fit_poly_lstsq(&xs, &ys, 3), Err(PolyFitError::RankDeficient));
    }

    #[test]
    fn exact_fit_interpolates() {
        let xs = [1.0, 2.0, 4.0, 7.0];
        let ys: Vec<f64> = xs.iter().map(|x| 1.0 - x + 0.25 * x * x * x).collect();
        let c = fit_poly_exact(&xs, &ys).unwrap();
        for (x, y) in xs.iter().zip(&ys) {
            assert!((eval_poly(&c, *x) - y).abs() < 1e-10);
        }
        assert!(fit_poly_exact(&[1.0, 1.0, 2.0, 3.0], &ys).is_none());
    }
}
