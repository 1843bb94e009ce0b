//! Rolling-origin evaluation over every feasible forecast origin.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::data::{build_window, Dataset, NormalizationStats, WindowOptions};
use crate::error::{Error, Result};
use crate::eval::baselines::{naive_forecast, seasonal_naive_forecast};
use crate::eval::metrics::MetricsReport;
use crate::model::TsformerModel;
use crate::train::forecast_window;

/// Anything that can forecast the next `horizon` days of raw demand from
/// the dataset rows up to and including `origin`.
pub trait Forecaster {
    fn name(&self) -> String;
    /// Minimum number of observed rows needed before the first forecast.
    fn min_context(&self, horizon: usize) -> usize;
    fn forecast(&self, dataset: &Dataset, origin: usize, horizon: usize) -> Result<Vec<f64>>;
}

/// Repeats the last observed demand.
pub struct NaiveBaseline;

impl Forecaster for NaiveBaseline {
    fn name(&self) -> String {
        "naive".into()
    }

    fn min_context(&self, _horizon: usize) -> usize {
        1
    }

    fn forecast(&self, dataset: &Dataset, origin: usize, horizon: usize) -> Result<Vec<f64>> {
        let history: Vec<f64> = dataset.rows()[..=origin].iter().map(|r| r.demand).collect();
        naive_forecast(&history, horizon)
    }
}

/// Repeats demand from one season (`s` days) earlier.
pub struct SeasonalNaiveBaseline {
    pub s: usize,
}

impl Forecaster for SeasonalNaiveBaseline {
    fn name(&self) -> String {
        format!("seasonal_naive_s{}", self.s)
    }

    fn min_context(&self, _horizon: usize) -> usize {
        self.s
    }

    fn forecast(&self, dataset: &Dataset, origin: usize, horizon: usize) -> Result<Vec<f64>> {
        let history: Vec<f64> = dataset.rows()[..=origin].iter().map(|r| r.demand).collect();
        seasonal_naive_forecast(&history, horizon, self.s)
    }
}

/// A trained model plus the normalization and windowing it was trained with.
pub struct TsformerForecaster<'a> {
    pub model: &'a TsformerModel,
    pub stats: &'a NormalizationStats,
    pub options: WindowOptions,
}

impl Forecaster for TsformerForecaster<'_> {
    fn name(&self) -> String {
        if self.options.use_calendar {
            "tsformer".into()
        } else {
            "tsformer_no_calendar".into()
        }
    }

    fn min_context(&self, _horizon: usize) -> usize {
        self.model.config.encoder_input_length
    }

    fn forecast(&self, dataset: &Dataset, origin: usize, horizon: usize) -> Result<Vec<f64>> {
        if horizon != self.model.config.forecast_horizon {
            return Err(Error::InvalidConfig(format!(
                "model forecasts {} days per pass, asked for {horizon}",
                self.model.config.forecast_horizon
            )));
        }
        let window = build_window(
            dataset,
            origin,
            &self.model.config,
            self.stats,
            &self.options,
            false,
        )?;
        forecast_window(self.model, &window, self.stats)
    }
}

/// Every origin's forecasts and truths, with pooled and per-lead metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRun {
    pub model: String,
    pub horizon: usize,
    pub split: String,
    pub origin_dates: Vec<NaiveDate>,
    /// One row of `horizon` denormalized forecasts per origin.
    pub forecasts: Vec<Vec<f64>>,
    /// Matching ground truths in raw demand units.
    pub truths: Vec<Vec<f64>>,
    pub metrics: MetricsReport,
    /// Metrics restricted to lead time k+1, one entry per lead.
    pub per_lead: Vec<MetricsReport>,
}

/// Score every origin whose `horizon` target days lie inside the row range
/// `[target_start, target_end)`. Context may reach back before the range.
pub fn rolling_origin_evaluate(
    forecaster: &dyn Forecaster,
    dataset: &Dataset,
    target_start: usize,
    target_end: usize,
    horizon: usize,
    split: &str,
) -> Result<EvaluationRun> {
    if horizon == 0 {
        return Err(Error::InvalidConfig("horizon must be positive".into()));
    }
    if target_end > dataset.len() {
        return Err(Error::DataValidation(format!(
            "target range end {target_end} beyond dataset of {} rows",
            dataset.len()
        )));
    }
    // origin+1 observed rows must cover the context, and the first target
    // day origin+1 must lie inside the range
    let first_origin = forecaster.min_context(horizon).max(target_start).max(1) - 1;
    if target_end < horizon + 1 || first_origin > target_end - 1 - horizon {
        return Err(Error::DataValidation(format!(
            "no valid forecast origin in rows {target_start}..{target_end} for horizon {horizon}"
        )));
    }

    let mut origin_dates = Vec::new();
    let mut forecasts = Vec::new();
    let mut truths = Vec::new();
    for origin in first_origin..=target_end - 1 - horizon {
        let pred = forecaster.forecast(dataset, origin, horizon)?;
        let truth: Vec<f64> = dataset.rows()[origin + 1..=origin + horizon]
            .iter()
            .map(|r| r.demand)
            .collect();
        origin_dates.push(dataset.rows()[origin].date);
        forecasts.push(pred);
        truths.push(truth);
    }

    let pooled_pred: Vec<f64> = forecasts.iter().flatten().copied().collect();
    let pooled_truth: Vec<f64> = truths.iter().flatten().copied().collect();
    let metrics = MetricsReport::from_pairs(&pooled_pred, &pooled_truth)?;
    let per_lead = (0..horizon)
        .map(|k| {
            let p: Vec<f64> = forecasts.iter().map(|f| f[k]).collect();
            let t: Vec<f64> = truths.iter().map(|t| t[k]).collect();
            MetricsReport::from_pairs(&p, &t)
        })
        .collect::<Result<_>>()?;

    Ok(EvaluationRun {
        model: forecaster.name(),
        horizon,
        split: split.to_string(),
        origin_dates,
        forecasts,
        truths,
        metrics,
        per_lead,
    })
}
