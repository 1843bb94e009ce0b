//! The forecasting network and its building blocks.

mod config;
mod masks;
mod network;
mod params;
mod pe;

pub use config::ModelConfig;
pub use masks::{
    build_decoder_memory_mask, build_decoder_target_mask, build_encoder_source_mask, MaskSet,
};
pub use network::{scaled_dot_product_attention, AttentionTrace, ForwardPass, TsformerModel};
pub use params::{param_layout, ParamSet};
pub use pe::sinusoidal_positional_encoding;

#[cfg(test)]
mod tests;
