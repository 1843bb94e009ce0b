//! End-to-end orchestration: split, normalize, window, train.

use crate::data::{
    evaluation_windows, make_windows, split, Dataset, NormalizationStats, SplitSpec, WindowOptions,
};
use crate::error::Result;
use crate::model::{ModelConfig, TsformerModel};
use crate::train::trainer::{train, TrainConfig, TrainHistory};

/// A trained model plus everything needed to forecast and evaluate with it.
pub struct Pipeline {
    pub model: TsformerModel,
    pub stats: NormalizationStats,
    pub history: TrainHistory,
    /// Row counts of the chronological train/validation/test splits.
    pub train_rows: usize,
    pub val_rows: usize,
    pub test_rows: usize,
}

/// Split chronologically, fit normalization on the train split only, build
/// rolling windows, and train to the best validation MAE.
pub fn train_pipeline(
    dataset: &Dataset,
    split_spec: &SplitSpec,
    config: &ModelConfig,
    train_cfg: &TrainConfig,
    opts: &WindowOptions,
) -> Result<Pipeline> {
    config.validate()?;
    train_cfg.validate()?;
    let (train_ds, val_ds, test_ds) = split(dataset, split_spec)?;
    let stats = NormalizationStats::fit(&train_ds);
    let train_windows = make_windows(&train_ds, config, &stats, opts)?;
    // validation targets sit in the validation split; context may look back
    let val_windows = evaluation_windows(
        dataset,
        config,
        &stats,
        opts,
        train_ds.len(),
        train_ds.len() + val_ds.len(),
    )?;
    let mut model = TsformerModel::new(config.clone(), train_cfg.seed)?;
    let history = train(&mut model, &train_windows, &val_windows, &stats, train_cfg)?;
    Ok(Pipeline {
        model,
        stats,
        history,
        train_rows: train_ds.len(),
        val_rows: val_ds.len(),
        test_rows: test_ds.len(),
    })
}
