//! CSV and JSON emission for evaluation results.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::ablation::AblationReport;
use crate::eval::rolling::EvaluationRun;

/// One flattened row of a metrics report file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub model: String,
    pub horizon: usize,
    pub split: String,
    pub mae: f64,
    pub rmse: f64,
    pub mape: f64,
    pub n: usize,
}

impl From<&EvaluationRun> for ReportRow {
    fn from(run: &EvaluationRun) -> Self {
        Self {
            model: run.model.clone(),
            horizon: run.horizon,
            split: run.split.clone(),
            mae: run.metrics.mae,
            rmse: run.metrics.rmse,
            mape: run.metrics.mape,
            n: run.metrics.n,
        }
    }
}

pub fn report_csv(runs: &[EvaluationRun]) -> String {
    let mut out = String::from("model,horizon,split,mae,rmse,mape,n\n");
    for run in runs {
        let r = ReportRow::from(run);
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.model, r.horizon, r.split, r.mae, r.rmse, r.mape, r.n
        ));
    }
    out
}

pub fn report_json(runs: &[EvaluationRun]) -> Result<String> {
    let rows: Vec<ReportRow> = runs.iter().map(ReportRow::from).collect();
    serde_json::to_string_pretty(&rows).map_err(|e| Error::Metric(format!("json encoding: {e}")))
}

/// Per-lead-time breakdown of a single run.
pub fn per_lead_csv(run: &EvaluationRun) -> String {
    let mut out = String::from("lead,mae,rmse,mape,n\n");
    for (k, m) in run.per_lead.iter().enumerate() {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            k + 1,
            m.mae,
            m.rmse,
            m.mape,
            m.n
        ));
    }
    out
}

/// Side-by-side arms per horizon.
pub fn ablation_csv(report: &AblationReport) -> String {
    let mut out = String::from(
        "horizon,with_mae,with_rmse,with_mape,without_mae,without_rmse,without_mape\n",
    );
    for (with, without) in report.with_calendar.iter().zip(&report.without_calendar) {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            with.horizon,
            with.metrics.mae,
            with.metrics.rmse,
            with.metrics.mape,
            without.metrics.mae,
            without.metrics.rmse,
            without.metrics.mape
        ));
    }
    out
}
