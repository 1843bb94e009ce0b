use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hyperparameters of the network and its rolling-window layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Days seen by the encoder (L_enc).
    pub encoder_input_length: usize,
    /// Days seen by the decoder (L_dec), the last `forecast_horizon` of
    /// which are placeholder tokens.
    pub decoder_input_length: usize,
    /// Days predicted per forward pass (h).
    pub forecast_horizon: usize,
    pub d_model: usize,
    pub heads: usize,
    pub encoder_layers: usize,
    pub decoder_layers: usize,
    pub ffn_dim: usize,
    pub dropout: f64,
    /// Input columns per time step.
    pub feature_dim: usize,
}

impl ModelConfig {
    /// Reference 1-day-ahead configuration, parameterized by the data's
    /// feature count.
    pub fn reference(feature_dim: usize) -> Self {
        Self {
            encoder_input_length: 7,
            decoder_input_length: 5,
            forecast_horizon: 1,
            d_model: 32,
            heads: 4,
            encoder_layers: 4,
            decoder_layers: 4,
            ffn_dim: 64,
            dropout: 0.1,
            feature_dim,
        }
    }

    /// Rescale the window layout for a different horizon, keeping the
    /// encoder/decoder overlap and all width/depth hyperparameters.
    pub fn for_horizon(&self, horizon: usize) -> Self {
        let overlap = self.overlap();
        let decoder_input_length = overlap + horizon;
        let encoder_input_length = self
            .encoder_input_length
            .max(2 * horizon)
            .max(decoder_input_length);
        Self {
            encoder_input_length,
            decoder_input_length,
            forecast_horizon: horizon,
            ..self.clone()
        }
    }

    pub fn head_dim(&self) -> usize {
        self.d_model / self.heads
    }

    /// Decoder rows that overlap the encoder window.
    pub fn overlap(&self) -> usize {
        self.decoder_input_length - self.forecast_horizon
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidConfig(msg));
        for (name, v) in [
            ("encoder_input_length", self.encoder_input_length),
            ("decoder_input_length", self.decoder_input_length),
            ("forecast_horizon", self.forecast_horizon),
            ("d_model", self.d_model),
            ("heads", self.heads),
            ("encoder_layers", self.encoder_layers),
            ("decoder_layers", self.decoder_layers),
            ("ffn_dim", self.ffn_dim),
            ("feature_dim", self.feature_dim),
        ] {
            if v == 0 {
                return fail(format!("{name} must be positive"));
            }
        }
        if self.d_model % self.heads != 0 {
            return fail(format!(
                "d_model {} not divisible by heads {}",
                self.d_model, self.heads
            ));
        }
        if self.forecast_horizon > self.decoder_input_length {
            return fail(format!(
                "forecast_horizon {} exceeds decoder_input_length {}",
                self.forecast_horizon, self.decoder_input_length
            ));
        }
        if self.decoder_input_length > self.encoder_input_length + self.forecast_horizon {
            return fail(format!(
                "decoder_input_length {} exceeds encoder_input_length {} + forecast_horizon {}",
                self.decoder_input_length, self.encoder_input_length, self.forecast_horizon
            ));
        }
        if self.decoder_input_length > self.encoder_input_length {
            return fail(format!(
                "decoder_input_length {} exceeds encoder_input_length {} (memory mask offset must be >= 0)",
                self.decoder_input_length, self.encoder_input_length
            ));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return fail(format!("dropout {} outside [0,1)", self.dropout));
        }
        Ok(())
    }
}
