//! Self-describing text checkpoints with bit-exact parameter round trips.
//!
//! Floats are rendered with Rust's shortest round-trip formatting, which
//! parses back to the identical f64.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::NormalizationStats;
use crate::error::{Error, Result};
use crate::model::{ModelConfig, ParamSet, TsformerModel};
use crate::numcore::Tensor;

const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub epoch: usize,
    pub best_val_mae: Option<f64>,
    pub seed: u64,
}

pub fn save_checkpoint(
    model: &TsformerModel,
    stats: &NormalizationStats,
    meta: &CheckpointMeta,
    path: &Path,
) -> Result<()> {
    let mut out = String::new();
    out.push_str(&format!("tsformer-checkpoint {FORMAT_VERSION}\n"));
    out.push_str("[config]\n");
    let cfg = &model.config;
    for (key, value) in [
        ("encoder_input_length", cfg.encoder_input_length),
        ("decoder_input_length", cfg.decoder_input_length),
        ("forecast_horizon", cfg.forecast_horizon),
        ("d_model", cfg.d_model),
        ("heads", cfg.heads),
        ("encoder_layers", cfg.encoder_layers),
        ("decoder_layers", cfg.decoder_layers),
        ("ffn_dim", cfg.ffn_dim),
        ("feature_dim", cfg.feature_dim),
    ] {
        out.push_str(&format!("{key}={value}\n"));
    }
    out.push_str(&format!("dropout={}\n", cfg.dropout));
    out.push_str("[stats]\n");
    out.push_str(&format!("mins={}\n", join_floats(&stats.mins)));
    out.push_str(&format!("maxs={}\n", join_floats(&stats.maxs)));
    out.push_str("[meta]\n");
    out.push_str(&format!("epoch={}\n", meta.epoch));
    out.push_str(&format!(
        "best_val_mae={}\n",
        meta.best_val_mae.map(|v| format!("{v}")).unwrap_or_default()
    ));
    out.push_str(&format!("seed={}\n", meta.seed));
    for (name, tensor) in model
        .params()
        .names()
        .iter()
        .zip(model.params().tensors())
    {
        let shape: Vec<String> = tensor.shape().iter().map(|d| d.to_string()).collect();
        out.push_str(&format!("[param {name} {}]\n", shape.join("x")));
        out.push_str(&join_floats(tensor.data()));
        out.push('\n');
    }
    out.push_str("[end]\n");
    std::fs::write(path, out)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<(TsformerModel, NormalizationStats, CheckpointMeta)> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let corrupt = |msg: &str| Error::Checkpoint(msg.to_string());

    let header = lines.next().ok_or_else(|| corrupt("empty file"))?;
    let version: u32 = header
        .strip_prefix("tsformer-checkpoint ")
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| corrupt("not a checkpoint file"))?;
    if version != FORMAT_VERSION {
        return Err(Error::Checkpoint(format!(
            "unsupported checkpoint version {version}, expected {FORMAT_VERSION}"
        )));
    }
    if !text.trim_end().ends_with("[end]") {
        return Err(corrupt("truncated checkpoint (missing [end] marker)"));
    }

    expect(lines.next(), "[config]")?;
    let mut kv = std::collections::HashMap::new();
    for _ in 0..10 {
        let line = lines.next().ok_or_else(|| corrupt("truncated config"))?;
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| corrupt("malformed config line"))?;
        kv.insert(k.to_string(), v.to_string());
    }
    let usize_field = |key: &str| -> Result<usize> {
        kv.get(key)
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| Error::Checkpoint(format!("bad or missing config field {key}")))
    };
    let config = ModelConfig {
        encoder_input_length: usize_field("encoder_input_length")?,
        decoder_input_length: usize_field("decoder_input_length")?,
        forecast_horizon: usize_field("forecast_horizon")?,
        d_model: usize_field("d_model")?,
        heads: usize_field("heads")?,
        encoder_layers: usize_field("encoder_layers")?,
        decoder_layers: usize_field("decoder_layers")?,
        ffn_dim: usize_field("ffn_dim")?,
        feature_dim: usize_field("feature_dim")?,
        dropout: kv
            .get("dropout")
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| corrupt("bad dropout"))?,
    };

    expect(lines.next(), "[stats]")?;
    let mins = parse_float_line(lines.next(), "mins")?;
    let maxs = parse_float_line(lines.next(), "maxs")?;
    let stats = NormalizationStats { mins, maxs };

    expect(lines.next(), "[meta]")?;
    let epoch_line = lines.next().ok_or_else(|| corrupt("truncated meta"))?;
    let mae_line = lines.next().ok_or_else(|| corrupt("truncated meta"))?;
    let seed_line = lines.next().ok_or_else(|| corrupt("truncated meta"))?;
    let meta = CheckpointMeta {
        epoch: value_of(epoch_line, "epoch")?
            .parse()
            .map_err(|_| corrupt("bad epoch"))?,
        best_val_mae: {
            let v = value_of(mae_line, "best_val_mae")?;
            if v.is_empty() {
                None
            } else {
                Some(v.parse().map_err(|_| corrupt("bad best_val_mae"))?)
            }
        },
        seed: value_of(seed_line, "seed")?
            .parse()
            .map_err(|_| corrupt("bad seed"))?,
    };

    let mut names = Vec::new();
    let mut tensors = Vec::new();
    loop {
        let line = lines.next().ok_or_else(|| corrupt("truncated parameters"))?;
        if line == "[end]" {
            break;
        }
        let inner = line
            .strip_prefix("[param ")
            .and_then(|l| l.strip_suffix(']'))
            .ok_or_else(|| corrupt("expected [param ...] header"))?;
        let (name, shape_str) = inner
            .rsplit_once(' ')
            .ok_or_else(|| corrupt("malformed param header"))?;
        let shape: Vec<usize> = shape_str
            .split('x')
            .map(|d| d.parse().map_err(|_| corrupt("bad shape")))
            .collect::<Result<_>>()?;
        let values_line = lines.next().ok_or_else(|| corrupt("truncated param values"))?;
        let values: Vec<f64> = values_line
            .split(' ')
            .map(|v| v.parse().map_err(|_| corrupt("bad float")))
            .collect::<Result<_>>()?;
        let tensor = Tensor::new(shape, values).map_err(|e| {
            Error::Checkpoint(format!("parameter {name}: {e}"))
        })?;
        names.push(name.to_string());
        tensors.push(tensor);
    }

    let params = ParamSet::from_parts(names, tensors);
    // from_params re-audits every name and shape against the config
    let model = TsformerModel::from_params(config, params)
        .map_err(|e| Error::Checkpoint(format!("shape audit failed: {e}")))?;
    if stats.feature_dim() != model.config.feature_dim {
        return Err(Error::Checkpoint(format!(
            "normalization stats cover {} columns, config expects {}",
            stats.feature_dim(),
            model.config.feature_dim
        )));
    }
    Ok((model, stats, meta))
}

fn join_floats(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| format!("{v}"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn expect(line: Option<&str>, want: &str) -> Result<()> {
    if line != Some(want) {
        return Err(Error::Checkpoint(format!(
            "expected {want}, found {line:?}"
        )));
    }
    Ok(())
}

fn value_of<'a>(line: &'a str, key: &str) -> Result<&'a str> {
    line.strip_prefix(key)
        .and_then(|l| l.strip_prefix('='))
        .ok_or_else(|| Error::Checkpoint(format!("expected {key}=..., found {line:?}")))
}

fn parse_float_line(line: Option<&str>, key: &str) -> Result<Vec<f64>> {
    let line = line.ok_or_else(|| Error::Checkpoint(format!("missing {key}")))?;
    value_of(line, key)?
        .split(' ')
        .filter(|s| !s.is_empty())
        .map(|v| {
            v.parse()
                .map_err(|_| Error::Checkpoint(format!("bad float in {key}")))
        })
        .collect()
}
