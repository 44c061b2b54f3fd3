#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricError {
    #[error("actual and predicted lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("actual value at index {0} is zero")]
    ZeroActual(usize),
    #[error("no values")]
    Empty,
}

/// Mean absolute percentage error, in percent.
pub fn mape(actual: &[f64], predicted: &[f64]) -> Result<f64, MetricError> {
    if actual.len() != predicted.len() {
        return Err(MetricError::LengthMismatch(actual.len(), predicted.len()));
    }
    if actual.is_empty() {
        return Err(MetricError::Empty);
    }
    let mut sum = 0.0;
    for (i, (&y, &yh)) in actual.iter().zip(predicted).enumerate() {
        if y == 0.0 {
            return Err(MetricError::ZeroActual(i));
        }
        sum += ((y - yh) / y).abs();
    }
    Ok(100.0 * sum / actual.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_prediction_is_zero() {
        assert_eq!(mape(&[10.0, 10.0], &[10.0, 10.0]).unwrap(), 0.0);
    }

    #[test]
    fn hand_example() {
        let m = mape(&[10.0, 20.0], &[11.0, 18.0]).unwrap();
        assert!((m - 10.0).abs() < 1e-12);
    }

    #[test]
    fn zero_actual_rejected() {
        assert_eq!(mape(&[1.0, 0.0], &[1.0, 1.0]), Err(MetricError::ZeroActual(1)));
        assert_eq!(mape(&[1.0], &[1.0, 2.0]), Err(MetricError::LengthMismatch(1, 2)));
    }
}
