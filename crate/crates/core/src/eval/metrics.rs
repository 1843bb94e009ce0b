//! Forecast-accuracy metrics in raw demand units.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn check_lengths(pred: &[f64], truth: &[f64]) -> Result<()> {
    if pred.is_empty() || pred.len() != truth.len() {
        return Err(Error::Metric(format!(
            "need equal nonempty series, got {} predictions and {} truths",
            pred.len(),
            truth.len()
        )));
    }
    Ok(())
}

/// Mean absolute error.
pub fn mae(pred: &[f64], truth: &[f64]) -> Result<f64> {
    check_lengths(pred, truth)?;
    let total: f64 = pred.iter().zip(truth).map(|(p, t)| (p - t).abs()).sum();
    Ok(total / pred.len() as f64)
}

/// Root mean squared error.
pub fn rmse(pred: &[f64], truth: &[f64]) -> Result<f64> {
    check_lengths(pred, truth)?;
    let total: f64 = pred
        .iter()
        .zip(truth)
        .map(|(p, t)| (p - t) * (p - t))
        .sum();
    Ok((total / pred.len() as f64).sqrt())
}

/// Mean absolute percentage error, in percent. Truth must be strictly
/// positive.
pub fn mape(pred: &[f64], truth: &[f64]) -> Result<f64> {
    check_lengths(pred, truth)?;
    let mut total = 0.0;
    for (p, t) in pred.iter().zip(truth) {
        if !(*t > 0.0) {
            return Err(Error::Metric(format!(
                "mape requires strictly positive truth, got {t}"
            )));
        }
        total += ((p - t) / t).abs();
    }
    Ok(100.0 * total / pred.len() as f64)
}

/// All three metrics over one pooled set of (prediction, truth) pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub mae: f64,
    pub rmse: f64,
    pub mape: f64,
    /// Number of (origin, horizon-day) pairs scored.
    pub n: usize,
}

impl MetricsReport {
    pub fn from_pairs(pred: &[f64], truth: &[f64]) -> Result<Self> {
        Ok(Self {
            mae: mae(pred, truth)?,
            rmse: rmse(pred, truth)?,
            mape: mape(pred, truth)?,
            n: pred.len(),
        })
    }
}
