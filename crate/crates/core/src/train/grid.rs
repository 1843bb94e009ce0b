//! Exhaustive grid search ranked by validation MAE.

use serde::{Deserialize, Serialize};

use crate::data::{NormalizationStats, WindowSample};
use crate::error::{Error, Result};
use crate::model::{ModelConfig, TsformerModel};
use crate::train::trainer::{train, TrainConfig};

/// Candidate lists per hyperparameter; an empty list keeps the base value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridSpec {
    pub d_model: Vec<usize>,
    pub heads: Vec<usize>,
    /// Applied to both encoder and decoder stacks.
    pub layers: Vec<usize>,
    pub ffn_dim: Vec<usize>,
    pub learning_rate: Vec<f64>,
    pub dropout: Vec<f64>,
}

impl GridSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidConfig(format!("bad grid spec: {e}")))
    }

    /// Cartesian product size after filling empty axes from the base config.
    pub fn size(&self) -> usize {
        [
            self.d_model.len(),
            self.heads.len(),
            self.layers.len(),
            self.ffn_dim.len(),
            self.learning_rate.len(),
            self.dropout.len(),
        ]
        .iter()
        .map(|&l| l.max(1))
        .product()
    }

    fn points(&self, base_cfg: &ModelConfig, base_train: &TrainConfig) -> Vec<GridPoint> {
        let d_models = or_default(&self.d_model, base_cfg.d_model);
        let heads = or_default(&self.heads, base_cfg.heads);
        let layers = or_default(&self.layers, base_cfg.encoder_layers);
        let ffn_dims = or_default(&self.ffn_dim, base_cfg.ffn_dim);
        let lrs = or_default(&self.learning_rate, base_train.learning_rate);
        let dropouts = or_default(&self.dropout, base_cfg.dropout);
        let mut points = Vec::with_capacity(self.size());
        for &d in &d_models {
            for &h in &heads {
                for &l in &layers {
                    for &f in &ffn_dims {
                        for &lr in &lrs {
                            for &p in &dropouts {
                                let mut cfg = base_cfg.clone();
                                cfg.d_model = d;
                                cfg.heads = h;
                                cfg.encoder_layers = l;
                                cfg.decoder_layers = l;
                                cfg.ffn_dim = f;
                                cfg.dropout = p;
                                let mut tc = base_train.clone();
                                tc.learning_rate = lr;
                                points.push(GridPoint {
                                    config: cfg,
                                    train: tc,
                                });
                            }
                        }
                    }
                }
            }
        }
        points
    }
}

fn or_default<T: Copy>(candidates: &[T], base: T) -> Vec<T> {
    if candidates.is_empty() {
        vec![base]
    } else {
        candidates.to_vec()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub config: ModelConfig,
    pub train: TrainConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub point: GridPoint,
    pub val_mae: Option<f64>,
    pub error: Option<String>,
}

/// Train one model per grid point with a fresh seed-derived initialization
/// and rank by validation MAE ascending; failed points rank last.
pub fn grid_search(
    grid: &GridSpec,
    base_cfg: &ModelConfig,
    base_train: &TrainConfig,
    train_windows: &[WindowSample],
    val_windows: &[WindowSample],
    stats: &NormalizationStats,
) -> Result<Vec<GridResult>> {
    let points = grid.points(base_cfg, base_train);
    if points.is_empty() {
        return Err(Error::InvalidConfig("empty grid".into()));
    }
    let mut results = Vec::with_capacity(points.len());
    for (i, mut point) in points.into_iter().enumerate() {
        point.train.seed = base_train.seed.wrapping_add(i as u64);
        let outcome = run_point(&point, train_windows, val_windows, stats);
        match outcome {
            Ok(mae) => results.push(GridResult {
                point,
                val_mae: Some(mae),
                error: None,
            }),
            Err(e) => results.push(GridResult {
                point,
                val_mae: None,
                error: Some(e.to_string()),
            }),
        }
    }
    results.sort_by(|a, b| match (a.val_mae, b.val_mae) {
        (Some(x), Some(y)) => x.total_cmp(&y),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => std::cmp::Ordering::Equal,
    });
    Ok(results)
}

fn run_point(
    point: &GridPoint,
    train_windows: &[WindowSample],
    val_windows: &[WindowSample],
    stats: &NormalizationStats,
) -> Result<f64> {
    let mut model = TsformerModel::new(point.config.clone(), point.train.seed)?;
    let history = train(&mut model, train_windows, val_windows, stats, &point.train)?;
    history
        .best_val_mae
        .ok_or_else(|| Error::DataValidation("no validation metric recorded".into()))
}
