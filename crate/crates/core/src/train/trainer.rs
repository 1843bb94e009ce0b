//! Mini-batch training with early stopping on validation MAE.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{NormalizationStats, WindowSample};
use crate::error::{Error, Result};
use crate::model::TsformerModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Epochs without validation improvement before stopping; 0 disables
    /// early stopping entirely.
    pub patience: usize,
    pub grad_clip_norm: Option<f64>,
    pub seed: u64,
    /// Supervise all decoder positions (true) or only the forecast rows.
    pub loss_on_overlap: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 3e-3,
            batch_size: 32,
            max_epochs: 500,
            patience: 30,
            grad_clip_norm: Some(1.0),
            seed: 0,
            loss_on_overlap: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.patience > self.max_epochs {
            return Err(Error::InvalidConfig(format!(
                "patience {} exceeds max_epochs {}",
                self.patience, self.max_epochs
            )));
        }
        if !(self.learning_rate > 0.0) || self.batch_size == 0 || self.max_epochs == 0 {
            return Err(Error::InvalidConfig(
                "learning_rate, batch_size and max_epochs must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_mae: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochStats>,
    pub best_epoch: Option<usize>,
    pub best_val_mae: Option<f64>,
}

impl TrainHistory {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,train_loss,val_mae\n");
        for e in &self.epochs {
            let val = e
                .val_mae
                .map(|v| format!("{v}"))
                .unwrap_or_default();
            out.push_str(&format!("{},{},{}\n", e.epoch, e.train_loss, val));
        }
        out
    }
}

/// Denormalized forecast for the final `forecast_horizon` rows of a window.
pub fn forecast_window(
    model: &TsformerModel,
    sample: &WindowSample,
    stats: &NormalizationStats,
) -> Result<Vec<f64>> {
    let (out, _) = model.forward_inference(&sample.encoder, &sample.decoder, false)?;
    let h = model.config.forecast_horizon;
    let start = model.config.decoder_input_length - h;
    (start..start + h)
        .map(|r| stats.invert(0, out.get2(r, 0)))
        .collect()
}

/// Pooled MAE of denormalized forecasts over the final horizon rows.
pub fn validation_mae(
    model: &TsformerModel,
    windows: &[WindowSample],
    stats: &NormalizationStats,
) -> Result<f64> {
    let h = model.config.forecast_horizon;
    let start = model.config.decoder_input_length - h;
    let mut total = 0.0;
    let mut n = 0usize;
    for w in windows {
        let pred = forecast_window(model, w, stats)?;
        for (k, p) in pred.iter().enumerate() {
            let truth = stats.invert(0, w.targets[start + k])?;
            total += (p - truth).abs();
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::DataValidation("no validation windows".into()));
    }
    Ok(total / n as f64)
}

/// Train in place; the model ends at the best-validation parameters.
pub fn train(
    model: &mut TsformerModel,
    train_windows: &[WindowSample],
    val_windows: &[WindowSample],
    stats: &NormalizationStats,
    cfg: &TrainConfig,
) -> Result<TrainHistory> {
    cfg.validate()?;
    if train_windows.is_empty() {
        return Err(Error::DataValidation("no training windows".into()));
    }
    if cfg.patience > 0 && val_windows.is_empty() {
        return Err(Error::DataValidation(
            "early stopping requires validation windows".into(),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let sizes: Vec<usize> = model.params().tensors().iter().map(|t| t.len()).collect();
    let mut adam = super::adam::AdamState::new(&sizes);
    let mut history = TrainHistory::default();
    let mut best: Option<(usize, f64, Vec<crate::numcore::Tensor>)> = None;
    let mut stale = 0usize;

    let h = model.config.forecast_horizon;
    let overlap_start = model.config.decoder_input_length - h;

    for epoch in 1..=cfg.max_epochs {
        let mut order: Vec<usize> = (0..train_windows.len()).collect();
        order.shuffle(&mut rng);

        let mut epoch_loss = 0.0;
        let mut steps = 0usize;
        for (step, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let mut grads: Vec<Vec<f64>> = sizes.iter().map(|&s| vec![0.0; s]).collect();
            let mut batch_loss = 0.0;
            for &idx in chunk {
                let w = &train_windows[idx];
                let mut pass =
                    model.forward_training(&w.encoder, &w.decoder, &mut rng, false)?;
                let target_full = crate::numcore::Tensor::new(
                    vec![w.targets.len(), 1],
                    w.targets.clone(),
                )?;
                let loss = if cfg.loss_on_overlap {
                    pass.tape.mse_loss(pass.output, &target_full)?
                } else {
                    let tail = pass.tape.slice_rows(pass.output, overlap_start, h)?;
                    let target_tail = crate::numcore::Tensor::new(
                        vec![h, 1],
                        w.targets[overlap_start..].to_vec(),
                    )?;
                    pass.tape.mse_loss(tail, &target_tail)?
                };
                let loss_value = pass.tape.value(loss).item();
                if !loss_value.is_finite() {
                    return Err(Error::Divergence { epoch, step });
                }
                batch_loss += loss_value;
                pass.tape.backward(loss)?;
                for (accum, &var) in grads.iter_mut().zip(&pass.param_vars) {
                    if let Some(g) = pass.tape.grad(var) {
                        for (a, b) in accum.iter_mut().zip(g) {
                            *a += b;
                        }
                    }
                }
            }
            let scale = 1.0 / chunk.len() as f64;
            for g in &mut grads {
                for v in g.iter_mut() {
                    *v *= scale;
                }
            }
            if let Some(clip) = cfg.grad_clip_norm {
                clip_global_norm(&mut grads, clip);
            }
            adam.step(model.params_mut().tensors_mut(), &grads, cfg.learning_rate);
            epoch_loss += batch_loss * scale;
            steps += 1;
        }
        let train_loss = epoch_loss / steps as f64;

        let val_mae = if val_windows.is_empty() {
            None
        } else {
            Some(validation_mae(model, val_windows, stats)?)
        };
        history.epochs.push(EpochStats {
            epoch,
            train_loss,
            val_mae,
        });

        if let Some(mae) = val_mae {
            let improved = best.as_ref().map(|(_, b, _)| mae < *b).unwrap_or(true);
            if improved {
                best = Some((epoch, mae, model.params().tensors().to_vec()));
                stale = 0;
            } else {
                stale += 1;
            }
            if cfg.patience > 0 && stale >= cfg.patience {
                break;
            }
        }
    }

    if let Some((epoch, mae, tensors)) = best {
        model
            .params_mut()
            .tensors_mut()
            .clone_from_slice(&tensors);
        history.best_epoch = Some(epoch);
        history.best_val_mae = Some(mae);
    }
    Ok(history)
}

pub(crate) fn clip_global_norm(grads: &mut [Vec<f64>], clip: f64) {
    let norm_sq: f64 = grads
        .iter()
        .flat_map(|g| g.iter())
        .map(|v| v * v)
        .sum();
    let norm = norm_sq.sqrt();
    if norm > clip {
        let scale = clip / norm;
        for g in grads {
            for v in g.iter_mut() {
                *v *= scale;
            }
        }
    }
}
