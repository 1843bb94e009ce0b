//! Head- and sample-averaged attention weight capture.

use crate::data::WindowSample;
use crate::error::{Error, Result};
use crate::model::TsformerModel;
use crate::numcore::Tensor;

/// What to capture beyond the default decoder matrices.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CaptureOptions {
    /// Also keep per-head means alongside the head-averaged ones.
    pub per_head: bool,
    /// Also capture encoder self-attention layers.
    pub include_encoder: bool,
}

/// Per-decoder-layer attention means over heads and samples.
///
/// Averaging heads first and samples second is the canonical order here;
/// the result is identical either way since both are plain means.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionSummary {
    pub encoder_len: usize,
    pub decoder_len: usize,
    pub horizon: usize,
    pub sample_count: usize,
    pub head_count: usize,
    /// One [L_dec × L_dec] matrix per decoder layer.
    pub decoder_self: Vec<Tensor>,
    /// One [L_dec × L_enc] matrix per decoder layer.
    pub decoder_cross: Vec<Tensor>,
    /// One [L_enc × L_enc] matrix per encoder layer, when requested.
    pub encoder_self: Option<Vec<Tensor>>,
    /// Sample-averaged per-head matrices [layer][head], when requested.
    pub decoder_self_heads: Option<Vec<Vec<Tensor>>>,
    pub decoder_cross_heads: Option<Vec<Vec<Tensor>>>,
}

fn mean_of(tensors: &[Tensor]) -> Tensor {
    let mut out = tensors[0].clone();
    for t in &tensors[1..] {
        for (a, b) in out.data_mut().iter_mut().zip(t.data()) {
            *a += b;
        }
    }
    let scale = 1.0 / tensors.len() as f64;
    for v in out.data_mut() {
        *v *= scale;
    }
    out
}

fn accumulate(sums: &mut Vec<Tensor>, layers: Vec<Tensor>) {
    if sums.is_empty() {
        *sums = layers;
    } else {
        for (sum, layer) in sums.iter_mut().zip(layers) {
            for (a, b) in sum.data_mut().iter_mut().zip(layer.data()) {
                *a += b;
            }
        }
    }
}

fn finish(sums: &mut [Tensor], n: usize) {
    let scale = 1.0 / n as f64;
    for t in sums {
        for v in t.data_mut() {
            *v *= scale;
        }
    }
}

/// Run a traced, dropout-free forward pass on every sample and average the
/// per-layer attention weights over heads, then over samples.
pub fn capture_attention(
    model: &TsformerModel,
    samples: &[WindowSample],
    options: CaptureOptions,
) -> Result<AttentionSummary> {
    if samples.is_empty() {
        return Err(Error::DataValidation(
            "attention capture needs at least one sample".into(),
        ));
    }
    let cfg = &model.config;
    let mut summary = AttentionSummary {
        encoder_len: cfg.encoder_input_length,
        decoder_len: cfg.decoder_input_length,
        horizon: cfg.forecast_horizon,
        sample_count: samples.len(),
        head_count: cfg.heads,
        decoder_self: Vec::new(),
        decoder_cross: Vec::new(),
        encoder_self: options.include_encoder.then(Vec::new),
        decoder_self_heads: options.per_head.then(Vec::new),
        decoder_cross_heads: options.per_head.then(Vec::new),
    };
    let mut self_head_sums: Vec<Vec<Tensor>> = Vec::new();
    let mut cross_head_sums: Vec<Vec<Tensor>> = Vec::new();

    for sample in samples {
        let (_, trace) = model.forward_inference(&sample.encoder, &sample.decoder, true)?;
        let trace = trace.expect("trace requested");
        accumulate(
            &mut summary.decoder_self,
            trace.decoder_self.iter().map(|heads| mean_of(heads)).collect(),
        );
        accumulate(
            &mut summary.decoder_cross,
            trace.decoder_cross.iter().map(|heads| mean_of(heads)).collect(),
        );
        if let Some(enc) = summary.encoder_self.as_mut() {
            accumulate(
                enc,
                trace.encoder_self.iter().map(|heads| mean_of(heads)).collect(),
            );
        }
        if options.per_head {
            accumulate_heads(&mut self_head_sums, &trace.decoder_self);
            accumulate_heads(&mut cross_head_sums, &trace.decoder_cross);
        }
    }

    let n = samples.len();
    finish(&mut summary.decoder_self, n);
    finish(&mut summary.decoder_cross, n);
    if let Some(enc) = summary.encoder_self.as_mut() {
        finish(enc, n);
    }
    if options.per_head {
        for layer in &mut self_head_sums {
            finish(layer, n);
        }
        for layer in &mut cross_head_sums {
            finish(layer, n);
        }
        summary.decoder_self_heads = Some(self_head_sums);
        summary.decoder_cross_heads = Some(cross_head_sums);
    }
    Ok(summary)
}

fn accumulate_heads(sums: &mut Vec<Vec<Tensor>>, layers: &[Vec<Tensor>]) {
    if sums.is_empty() {
        *sums = layers.to_vec();
        return;
    }
    for (layer_sum, layer) in sums.iter_mut().zip(layers) {
        for (sum, head) in layer_sum.iter_mut().zip(layer) {
            for (a, b) in sum.data_mut().iter_mut().zip(head.data()) {
                *a += b;
            }
        }
    }
}

impl AttentionSummary {
    /// Day number (1-based from the window start) of each decoder row.
    /// The decoder covers the last `L_dec − h` observed days plus the `h`
    /// forecast days, so rows run from day L_enc−(L_dec−h)+1 to L_enc+h.
    pub fn decoder_day_labels(&self) -> Vec<usize> {
        let overlap = self.decoder_len - self.horizon;
        let first = self.encoder_len - overlap + 1;
        (first..first + self.decoder_len).collect()
    }

    /// Day number of each encoder column: days 1..=L_enc.
    pub fn encoder_day_labels(&self) -> Vec<usize> {
        (1..=self.encoder_len).collect()
    }
}
