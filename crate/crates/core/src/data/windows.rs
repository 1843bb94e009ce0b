//! Rolling-window sample construction with calendar-bearing tokens.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::data::normalize::NormalizationStats;
use crate::data::schema::{encode_calendar, Dataset};
use crate::error::{Error, Result};
use crate::model::ModelConfig;
use crate::numcore::Tensor;

/// Columns that may be injected into token rows besides the defaults.
/// Month and weekday are the known future calendar; the rest are available
/// ahead of time only arguably and default to zeroed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KnownColumn {
    Month,
    Weekday,
    DateType,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowOptions {
    /// When false, token rows are entirely zero (the ablation arm).
    pub use_calendar: bool,
    pub token_known_columns: Vec<KnownColumn>,
}

impl Default for WindowOptions {
    fn default() -> Self {
        Self {
            use_calendar: true,
            token_known_columns: vec![KnownColumn::Month, KnownColumn::Weekday],
        }
    }
}

impl WindowOptions {
    pub fn without_calendar() -> Self {
        Self {
            use_calendar: false,
            token_known_columns: vec![],
        }
    }
}

/// One rolling-window training/inference instance. Matrices are normalized;
/// the last `forecast_horizon` decoder rows are placeholder tokens.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowSample {
    /// Date of the last observed day (the forecast origin).
    pub origin_date: NaiveDate,
    pub encoder: Tensor,
    pub decoder: Tensor,
    /// Normalized true demand for every decoder day.
    pub targets: Vec<f64>,
    pub token_flags: Vec<bool>,
}

/// One sample per valid origin, step size 1.
pub fn make_windows(
    dataset: &Dataset,
    config: &ModelConfig,
    stats: &NormalizationStats,
    opts: &WindowOptions,
) -> Result<Vec<WindowSample>> {
    let n = dataset.len();
    let l_enc = config.encoder_input_length;
    let h = config.forecast_horizon;
    if n < l_enc + h {
        return Err(Error::DataValidation(format!(
            "dataset of {n} days too short for encoder length {l_enc} + horizon {h}"
        )));
    }
    (l_enc - 1..n - h)
        .map(|origin| build_window(dataset, origin, config, stats, opts, true))
        .collect()
}

/// Samples whose `forecast_horizon` target days all lie inside the row
/// range `[target_start, target_end)`. Encoder/decoder context may reach
/// back before `target_start` (context lookback across split boundaries).
pub fn evaluation_windows(
    dataset: &Dataset,
    config: &ModelConfig,
    stats: &NormalizationStats,
    opts: &WindowOptions,
    target_start: usize,
    target_end: usize,
) -> Result<Vec<WindowSample>> {
    let l_enc = config.encoder_input_length;
    let h = config.forecast_horizon;
    let first_origin = (l_enc - 1).max(target_start.saturating_sub(1));
    if target_end > dataset.len() || target_end < h + 1 || first_origin + h > target_end - 1 {
        return Err(Error::DataValidation(format!(
            "no valid forecast origin for targets in rows {target_start}..{target_end} \
             with encoder length {l_enc} and horizon {h}"
        )));
    }
    (first_origin..=target_end - 1 - h)
        .map(|origin| build_window(dataset, origin, config, stats, opts, true))
        .collect()
}

/// Build the window whose last observed day is `origin` (row index).
///
/// With `with_targets`, future rows must exist in the dataset and targets
/// carry their normalized demand; otherwise future token rows are built
/// from date arithmetic alone and future targets are NaN-free zeros.
pub fn build_window(
    dataset: &Dataset,
    origin: usize,
    config: &ModelConfig,
    stats: &NormalizationStats,
    opts: &WindowOptions,
    with_targets: bool,
) -> Result<WindowSample> {
    let schema = &dataset.schema;
    let l_enc = config.encoder_input_length;
    let l_dec = config.decoder_input_length;
    let h = config.forecast_horizon;
    let overlap = l_dec - h;
    if origin + 1 < l_enc {
        return Err(Error::DataValidation(format!(
            "origin index {origin} leaves no room for encoder length {l_enc}"
        )));
    }
    if with_targets && origin + h >= dataset.len() {
        return Err(Error::DataValidation(format!(
            "origin index {origin} has no {h} future days in a dataset of {}",
            dataset.len()
        )));
    }

    let rows = dataset.rows();
    let encoder_rows: Vec<Vec<f64>> = (origin + 1 - l_enc..=origin)
        .map(|i| stats.apply_row(&rows[i].features()))
        .collect();

    let mut decoder_rows: Vec<Vec<f64>> = (origin + 1 - overlap..=origin)
        .map(|i| stats.apply_row(&rows[i].features()))
        .collect();
    let mut token_flags = vec![false; overlap];
    let mut targets: Vec<f64> = (origin + 1 - overlap..=origin)
        .map(|i| stats.apply(0, rows[i].demand))
        .collect();

    for k in 1..=h {
        let future_idx = origin + k;
        let future_date = rows[origin]
            .date
            .checked_add_days(chrono::Days::new(k as u64))
            .unwrap();
        let mut token = vec![0.0; schema.feature_dim()];
        if opts.use_calendar {
            let (month, weekday) = encode_calendar(future_date);
            for known in &opts.token_known_columns {
                match known {
                    KnownColumn::Month => {
                        token[schema.col_month()] = stats.apply(schema.col_month(), month as f64)
                    }
                    KnownColumn::Weekday => {
                        token[schema.col_weekday()] =
                            stats.apply(schema.col_weekday(), weekday as f64)
                    }
                    KnownColumn::DateType => {
                        if future_idx < dataset.len() {
                            token[schema.col_date_type()] = stats
                                .apply(schema.col_date_type(), rows[future_idx].date_type as f64);
                        }
                    }
                }
            }
        }
        decoder_rows.push(token);
        token_flags.push(true);
        if with_targets {
            targets.push(stats.apply(0, rows[future_idx].demand));
        } else {
            targets.push(0.0);
        }
    }

    Ok(WindowSample {
        origin_date: rows[origin].date,
        encoder: Tensor::from_rows(&encoder_rows)?,
        decoder: Tensor::from_rows(&decoder_rows)?,
        targets,
        token_flags,
    })
}
