//! Optimization: Adam updates, the training loop, checkpoints, grid search.

pub mod adam;
pub mod checkpoint;
pub mod grid;
pub mod pipeline;
pub mod trainer;

pub use adam::AdamState;
pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointMeta};
pub use grid::{grid_search, GridPoint, GridResult, GridSpec};
pub use pipeline::{train_pipeline, Pipeline};
pub use trainer::{
    forecast_window, train, validation_mae, EpochStats, TrainConfig, TrainHistory,
};

#[cfg(test)]
mod tests;
