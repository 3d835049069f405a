//! Error metrics.

use crate::error::{Error, Result};

fn check_lengths(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch(format!(
            "vectors of length {} and {}",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Err(Error::Empty("metric input"));
    }
    Ok(())
}

/// Weight-recovery error `√(‖ŵ - w*‖² / d)`; equals `√(½‖Δ‖²)` for d = 2.
pub fn rmse_weights(estimated: &[f64], true_w: &[f64]) -> Result<f64> {
    check_lengths(estimated, true_w)?;
    let ss: f64 = estimated
        .iter()
        .zip(true_w)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok((ss / estimated.len() as f64).sqrt())
}

/// Prediction error `√((1/N) Σ (y_i - t_i)²)`.
pub fn rmse_predictions(predicted: &[f64], targets: &[f64]) -> Result<f64> {
    check_lengths(predicted, targets)?;
    let ss: f64 = predicted
        .iter()
        .zip(targets)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok((ss / predicted.len() as f64).sqrt())
}
