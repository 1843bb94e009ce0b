//! Metrics, reference forecasters, rolling-origin evaluation, ablation.

pub mod ablation;
pub mod baselines;
pub mod metrics;
pub mod report;
pub mod rolling;

pub use ablation::{ablation_run, AblationReport};
pub use baselines::{naive_forecast, seasonal_naive_forecast};
pub use metrics::{mae, mape, rmse, MetricsReport};
pub use report::{ablation_csv, per_lead_csv, report_csv, report_json, ReportRow};
pub use rolling::{
    rolling_origin_evaluate, EvaluationRun, Forecaster, NaiveBaseline, SeasonalNaiveBaseline,
    TsformerForecaster,
};
