//! The three additive attention masks, over {0, -inf}.

use crate::error::{Error, Result};
use crate::numcore::Tensor;

const NEG_INF: f64 = f64::NEG_INFINITY;

/// Lower-triangular allow: (i,j) = 0 iff j <= i.
pub fn build_encoder_source_mask(len_enc: usize) -> Tensor {
    causal(len_enc, len_enc, 0)
}

/// Lower-triangular allow on decoder self-attention.
pub fn build_decoder_target_mask(len_dec: usize) -> Tensor {
    causal(len_dec, len_dec, 0)
}

/// Banded allow for encoder-decoder attention:
/// (i,j) = 0 iff j <= i + (L_enc - L_dec).
pub fn build_decoder_memory_mask(len_dec: usize, len_enc: usize) -> Result<Tensor> {
    if len_dec > len_enc {
        return Err(Error::InvalidConfig(format!(
            "decoder memory mask requires L_enc >= L_dec, got L_dec={len_dec}, L_enc={len_enc}"
        )));
    }
    Ok(causal(len_dec, len_enc, len_enc - len_dec))
}

/// All three masks for one model configuration.
#[derive(Debug, Clone)]
pub struct MaskSet {
    pub encoder_source: Tensor,
    pub decoder_target: Tensor,
    pub decoder_memory: Tensor,
}

impl MaskSet {
    pub fn build(len_enc: usize, len_dec: usize) -> Result<Self> {
        Ok(Self {
            encoder_source: build_encoder_source_mask(len_enc),
            decoder_target: build_decoder_target_mask(len_dec),
            decoder_memory: build_decoder_memory_mask(len_dec, len_enc)?,
        })
    }
}

fn causal(rows: usize, cols: usize, offset: usize) -> Tensor {
    let mut mask = Tensor::zeros(vec![rows, cols]);
    for i in 0..rows {
        for j in 0..cols {
            if j > i + offset {
                mask.set2(i, j, NEG_INF);
            }
        }
    }
    mask
}
