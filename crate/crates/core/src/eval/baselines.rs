//! Naive and seasonal-naive reference forecasters.

use crate::error::{Error, Result};

/// Flat extension of the last observed value.
pub fn naive_forecast(history: &[f64], horizon: usize) -> Result<Vec<f64>> {
    let last = *history
        .last()
        .ok_or_else(|| Error::Metric("naive forecast needs a nonempty history".into()))?;
    Ok(vec![last; horizon])
}

/// Forecast day t+k with the observed value at t+k−m·s for the smallest
/// m ≥ 1 that lands inside the history; with s=1 this equals the naive
/// forecast.
pub fn seasonal_naive_forecast(history: &[f64], horizon: usize, s: usize) -> Result<Vec<f64>> {
    if s == 0 {
        return Err(Error::Metric("season length must be positive".into()));
    }
    let n = history.len();
    if n < s {
        return Err(Error::Metric(format!(
            "history of {n} values shorter than season length {s}"
        )));
    }
    Ok((1..=horizon)
        .map(|k| {
            // future index n−1+k, stepped back by whole seasons until observed
            let mut idx = n - 1 + k;
            while idx >= n {
                idx -= s;
            }
            history[idx]
        })
        .collect())
}
