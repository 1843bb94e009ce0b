use crate::error::{Error, Result};
use crate::numcore::Tensor;

/// Fixed sinusoidal positional encoding.
///
/// Entry (pos, 2i) = sin(pos / 10000^(2i/d_model)),
/// entry (pos, 2i+1) = cos(pos / 10000^(2i/d_model)).
pub fn sinusoidal_positional_encoding(length: usize, d_model: usize) -> Result<Tensor> {
    if d_model % 2 != 0 {
        return Err(Error::InvalidConfig(format!(
            "positional encoding requires even d_model, got {d_model}"
        )));
    }
    let mut pe = Tensor::zeros(vec![length, d_model]);
    for pos in 0..length {
        for i in 0..d_model / 2 {
            let angle = pos as f64 / 10000f64.powf(2.0 * i as f64 / d_model as f64);
            pe.set2(pos, 2 * i, angle.sin());
            pe.set2(pos, 2 * i + 1, angle.cos());
        }
    }
    Ok(pe)
}
