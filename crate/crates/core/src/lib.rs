//! Encoder-decoder transformer for daily demand forecasting.
//!
//! The crate is organized around six subsystems:
//! - [`numcore`]: tape-based reverse-mode differentiation over dense f64 tensors
//! - [`model`]: the network itself, with three causal attention masks
//! - [`data`]: CSV ingestion, encoding, normalization, rolling windows, synthesis
//! - [`train`]: Adam training with early stopping, grid search, checkpoints
//! - [`eval`]: metrics, naive baselines, rolling-origin evaluation, ablation
//! - [`interpret`]: attention-weight averaging and CSV/SVG export

pub mod data;
pub mod error;
pub mod eval;
pub mod interpret;
pub mod model;
pub mod numcore;
pub mod train;

pub use error::{Error, Result};
pub use numcore::{grad_check, Tape, Tensor, Var};
