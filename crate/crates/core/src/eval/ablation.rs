//! Paired with/without-calendar training and evaluation.

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, SplitSpec, WindowOptions};
use crate::error::Result;
use crate::eval::rolling::{rolling_origin_evaluate, EvaluationRun, TsformerForecaster};
use crate::model::ModelConfig;
use crate::train::pipeline::train_pipeline;
use crate::train::trainer::TrainConfig;

/// Side-by-side test-split results; the two arms share the seed, splits,
/// and every hyperparameter, differing only in calendar token injection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub seed: u64,
    pub horizons: Vec<usize>,
    pub with_calendar: Vec<EvaluationRun>,
    pub without_calendar: Vec<EvaluationRun>,
}

/// Train and evaluate both arms at every requested horizon.
pub fn ablation_run(
    dataset: &Dataset,
    split_spec: &SplitSpec,
    base_config: &ModelConfig,
    train_cfg: &TrainConfig,
    horizons: &[usize],
) -> Result<AblationReport> {
    let mut report = AblationReport {
        seed: train_cfg.seed,
        horizons: horizons.to_vec(),
        with_calendar: Vec::new(),
        without_calendar: Vec::new(),
    };
    for &horizon in horizons {
        let config = base_config.for_horizon(horizon);
        for use_calendar in [true, false] {
            let opts = if use_calendar {
                WindowOptions::default()
            } else {
                WindowOptions::without_calendar()
            };
            let pipeline = train_pipeline(dataset, split_spec, &config, train_cfg, &opts)?;
            let forecaster = TsformerForecaster {
                model: &pipeline.model,
                stats: &pipeline.stats,
                options: opts,
            };
            let test_start = pipeline.train_rows + pipeline.val_rows;
            let run = rolling_origin_evaluate(
                &forecaster,
                dataset,
                test_start,
                dataset.len(),
                horizon,
                "test",
            )?;
            if use_calendar {
                report.with_calendar.push(run);
            } else {
                report.without_calendar.push(run);
            }
        }
    }
    Ok(report)
}
