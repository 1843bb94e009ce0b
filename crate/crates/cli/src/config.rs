//! TOML run configuration with CLI flag overrides.
//!
//! Every file key has a matching flag; flags win. The fully resolved
//! configuration is echoed into the run manifest.

use std::path::PathBuf;

use chrono::NaiveDate;
use clap::Args;
use serde::{Deserialize, Serialize};
use tsformer_core::data::{Dataset, SplitSpec, WindowOptions};
use tsformer_core::error::{Error, Result};
use tsformer_core::model::ModelConfig;
use tsformer_core::train::TrainConfig;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub model: ModelSection,
    pub train: TrainSection,
    pub split: SplitSection,
    pub window: WindowSection,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub encoder_input_length: Option<usize>,
    pub decoder_input_length: Option<usize>,
    pub forecast_horizon: Option<usize>,
    pub d_model: Option<usize>,
    pub heads: Option<usize>,
    pub encoder_layers: Option<usize>,
    pub decoder_layers: Option<usize>,
    pub ffn_dim: Option<usize>,
    pub dropout: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub learning_rate: Option<f64>,
    pub batch_size: Option<usize>,
    pub max_epochs: Option<usize>,
    pub patience: Option<usize>,
    pub grad_clip_norm: Option<f64>,
    pub seed: Option<u64>,
    pub loss_on_overlap: Option<bool>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSection {
    pub train_frac: Option<f64>,
    pub validate_frac: Option<f64>,
    pub train_end_date: Option<NaiveDate>,
    pub validate_end_date: Option<NaiveDate>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WindowSection {
    pub use_calendar: Option<bool>,
}

impl FileConfig {
    pub fn load(path: Option<&PathBuf>) -> Result<Self> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)?;
                toml::from_str(&text)
                    .map_err(|e| Error::InvalidConfig(format!("config file {}: {e}", p.display())))
            }
        }
    }
}

/// Flags shared by every training-capable subcommand; each overrides the
/// config-file key of the same name.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// TOML configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Forecast horizon in days; rescales the window layout.
    #[arg(long)]
    pub horizon: Option<usize>,
    /// Zero the calendar cells of future tokens (the ablation arm).
    #[arg(long)]
    pub no_calendar: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub max_epochs: Option<usize>,
    /// Early-stopping patience in epochs; 0 disables early stopping.
    #[arg(long)]
    pub patience: Option<usize>,
}

/// The fully resolved run configuration recorded in the manifest.
#[derive(Debug, Clone, Serialize)]
pub struct ResolvedConfig {
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub use_calendar: bool,
    pub train_frac: f64,
    pub validate_frac: f64,
    pub split_dates: Option<(NaiveDate, NaiveDate)>,
}

impl ResolvedConfig {
    /// Merge defaults, config file, and flags for a dataset with the given
    /// feature count.
    pub fn resolve(file: &FileConfig, flags: &Overrides, feature_dim: usize) -> Result<Self> {
        let m = &file.model;
        let mut model = ModelConfig::reference(feature_dim);
        set(&mut model.encoder_input_length, m.encoder_input_length);
        set(&mut model.decoder_input_length, m.decoder_input_length);
        set(&mut model.forecast_horizon, m.forecast_horizon);
        set(&mut model.d_model, m.d_model);
        set(&mut model.heads, m.heads);
        set(&mut model.encoder_layers, m.encoder_layers);
        set(&mut model.decoder_layers, m.decoder_layers);
        set(&mut model.ffn_dim, m.ffn_dim);
        set(&mut model.dropout, m.dropout);
        if let Some(h) = flags.horizon {
            model = model.for_horizon(h);
        }
        model.validate()?;

        let t = &file.train;
        let mut train = TrainConfig::default();
        set(&mut train.learning_rate, t.learning_rate);
        set(&mut train.batch_size, t.batch_size);
        set(&mut train.max_epochs, t.max_epochs);
        set(&mut train.patience, t.patience);
        if let Some(clip) = t.grad_clip_norm {
            train.grad_clip_norm = if clip > 0.0 { Some(clip) } else { None };
        }
        set(&mut train.seed, t.seed);
        set(&mut train.loss_on_overlap, t.loss_on_overlap);
        set(&mut train.learning_rate, flags.learning_rate);
        set(&mut train.batch_size, flags.batch_size);
        set(&mut train.max_epochs, flags.max_epochs);
        set(&mut train.patience, flags.patience);
        set(&mut train.seed, flags.seed);
        train.validate()?;

        let use_calendar = if flags.no_calendar {
            false
        } else {
            file.window.use_calendar.unwrap_or(true)
        };
        let split_dates = match (file.split.train_end_date, file.split.validate_end_date) {
            (Some(a), Some(b)) => Some((a, b)),
            (None, None) => None,
            _ => {
                return Err(Error::InvalidConfig(
                    "train_end_date and validate_end_date must be given together".into(),
                ))
            }
        };
        Ok(Self {
            model,
            train,
            use_calendar,
            train_frac: file.split.train_frac.unwrap_or(0.7),
            validate_frac: file.split.validate_frac.unwrap_or(0.15),
            split_dates,
        })
    }

    pub fn window_options(&self) -> WindowOptions {
        if self.use_calendar {
            WindowOptions::default()
        } else {
            WindowOptions::without_calendar()
        }
    }

    pub fn split_spec(&self, dataset: &Dataset) -> Result<SplitSpec> {
        match self.split_dates {
            Some((train_end_date, validate_end_date)) => {
                let spec = SplitSpec {
                    train_end_date,
                    validate_end_date,
                };
                spec.validate_against(dataset)?;
                Ok(spec)
            }
            None => SplitSpec::fractional(dataset, self.train_frac, self.validate_frac),
        }
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}
