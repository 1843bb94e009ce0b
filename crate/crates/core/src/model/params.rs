//! Deterministic parameter layout and initialization.

use std::collections::HashMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::config::ModelConfig;
use crate::numcore::Tensor;

/// Named parameter set; order and shapes are a pure function of the config.
#[derive(Debug, Clone)]
pub struct ParamSet {
    names: Vec<String>,
    tensors: Vec<Tensor>,
    index: HashMap<String, usize>,
}

/// Expected (name, shape) list for a config, in canonical order.
pub fn param_layout(cfg: &ModelConfig) -> Vec<(String, Vec<usize>)> {
    let d = cfg.d_model;
    let f = cfg.feature_dim;
    let ffn = cfg.ffn_dim;
    let mut layout = vec![
        ("encoder_input.w".into(), vec![f, d]),
        ("encoder_input.b".into(), vec![d]),
        ("decoder_input.w".into(), vec![f, d]),
        ("decoder_input.b".into(), vec![d]),
    ];
    let attn = |prefix: &str, layout: &mut Vec<(String, Vec<usize>)>| {
        for role in ["wq", "wk", "wv", "wo"] {
            layout.push((format!("{prefix}.{role}"), vec![d, d]));
        }
    };
    let ffn_block = |prefix: &str, layout: &mut Vec<(String, Vec<usize>)>| {
        layout.push((format!("{prefix}.w1"), vec![d, ffn]));
        layout.push((format!("{prefix}.b1"), vec![ffn]));
        layout.push((format!("{prefix}.w2"), vec![ffn, d]));
        layout.push((format!("{prefix}.b2"), vec![d]));
    };
    let norm = |prefix: &str, layout: &mut Vec<(String, Vec<usize>)>| {
        layout.push((format!("{prefix}.gamma"), vec![d]));
        layout.push((format!("{prefix}.beta"), vec![d]));
    };
    for i in 0..cfg.encoder_layers {
        attn(&format!("encoder.{i}.self_attn"), &mut layout);
        norm(&format!("encoder.{i}.norm1"), &mut layout);
        ffn_block(&format!("encoder.{i}.ffn"), &mut layout);
        norm(&format!("encoder.{i}.norm2"), &mut layout);
    }
    for i in 0..cfg.decoder_layers {
        attn(&format!("decoder.{i}.self_attn"), &mut layout);
        norm(&format!("decoder.{i}.norm1"), &mut layout);
        attn(&format!("decoder.{i}.cross_attn"), &mut layout);
        norm(&format!("decoder.{i}.norm2"), &mut layout);
        ffn_block(&format!("decoder.{i}.ffn"), &mut layout);
        norm(&format!("decoder.{i}.norm3"), &mut layout);
    }
    layout.push(("output.w".into(), vec![d, 1]));
    layout.push(("output.b".into(), vec![1]));
    layout
}

impl ParamSet {
    /// Glorot-uniform weights, zero biases, unit gamma, zero beta.
    pub fn init(cfg: &ModelConfig, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layout = param_layout(cfg);
        let mut names = Vec::with_capacity(layout.len());
        let mut tensors = Vec::with_capacity(layout.len());
        for (name, shape) in layout {
            let tensor = if name.ends_with(".gamma") {
                Tensor::new(shape.clone(), vec![1.0; shape.iter().product()]).unwrap()
            } else if name.ends_with(".beta") || is_bias(&name) {
                Tensor::zeros(shape)
            } else {
                let (fan_in, fan_out) = (shape[0], shape[1]);
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                let data = (0..fan_in * fan_out)
                    .map(|_| rng.gen_range(-limit..limit))
                    .collect();
                Tensor::new(shape, data).unwrap()
            };
            names.push(name);
            tensors.push(tensor);
        }
        Self::from_parts(names, tensors)
    }

    pub fn from_parts(names: Vec<String>, tensors: Vec<Tensor>) -> Self {
        let index = names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i))
            .collect();
        Self {
            names,
            tensors,
            index,
        }
    }

    /// Check every tensor against the layout implied by the config.
    pub fn audit(&self, cfg: &ModelConfig) -> Result<()> {
        let layout = param_layout(cfg);
        if layout.len() != self.names.len() {
            return Err(Error::InvalidConfig(format!(
                "parameter count {} does not match layout {}",
                self.names.len(),
                layout.len()
            )));
        }
        for ((name, shape), (have_name, have)) in
            layout.iter().zip(self.names.iter().zip(&self.tensors))
        {
            if name != have_name {
                return Err(Error::InvalidConfig(format!(
                    "parameter order mismatch: expected {name}, found {have_name}"
                )));
            }
            if have.shape() != shape.as_slice() {
                return Err(Error::InvalidConfig(format!(
                    "parameter {name}: expected shape {shape:?}, found {:?}",
                    have.shape()
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn tensors(&self) -> &[Tensor] {
        &self.tensors
    }

    pub fn tensors_mut(&mut self) -> &mut [Tensor] {
        &mut self.tensors
    }

    pub fn position(&self, name: &str) -> usize {
        *self
            .index
            .get(name)
            .unwrap_or_else(|| panic!("unknown parameter {name}"))
    }

    pub fn get(&self, name: &str) -> &Tensor {
        &self.tensors[self.position(name)]
    }

    pub fn get_mut(&mut self, name: &str) -> &mut Tensor {
        let i = self.position(name);
        &mut self.tensors[i]
    }

    /// Total scalar count across all parameters.
    pub fn scalar_count(&self) -> usize {
        self.tensors.iter().map(|t| t.len()).sum()
    }
}

fn is_bias(name: &str) -> bool {
    name.ends_with(".b") || name.ends_with(".b1") || name.ends_with(".b2")
}
