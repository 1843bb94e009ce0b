//! The network: masked multi-head attention encoder/decoder stacks with
//! ELU feed-forward blocks, post-norm residuals, and a linear output head.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::model::config::ModelConfig;
use crate::model::masks::MaskSet;
use crate::model::params::ParamSet;
use crate::model::pe::sinusoidal_positional_encoding;
use crate::numcore::{Tape, Tensor, Var};

const LN_EPS: f64 = 1e-6;

/// Post-softmax attention weights captured during one forward pass,
/// per layer and per head.
#[derive(Debug, Clone, Default)]
pub struct AttentionTrace {
    pub encoder_self: Vec<Vec<Tensor>>,
    pub decoder_self: Vec<Vec<Tensor>>,
    pub decoder_cross: Vec<Vec<Tensor>>,
}

/// One recorded forward pass; keeps the tape alive so gradients can be
/// pulled for every parameter after `backward`.
pub struct ForwardPass {
    pub tape: Tape,
    pub param_vars: Vec<Var>,
    /// Decoder output, [L_dec × 1].
    pub output: Var,
    pub trace: Option<AttentionTrace>,
}

#[derive(Debug, Clone)]
pub struct TsformerModel {
    pub config: ModelConfig,
    params: ParamSet,
    masks: MaskSet,
}

impl TsformerModel {
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let params = ParamSet::init(&config, seed);
        let masks = MaskSet::build(config.encoder_input_length, config.decoder_input_length)?;
        Ok(Self {
            config,
            params,
            masks,
        })
    }

    pub fn from_params(config: ModelConfig, params: ParamSet) -> Result<Self> {
        config.validate()?;
        params.audit(&config)?;
        let masks = MaskSet::build(config.encoder_input_length, config.decoder_input_length)?;
        Ok(Self {
            config,
            params,
            masks,
        })
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }

    pub fn masks(&self) -> &MaskSet {
        &self.masks
    }

    /// Record a training forward pass with dropout driven by `rng`.
    pub fn forward_training<R: Rng>(
        &self,
        encoder_input: &Tensor,
        decoder_input: &Tensor,
        rng: &mut R,
        want_trace: bool,
    ) -> Result<ForwardPass> {
        self.forward_impl(encoder_input, decoder_input, true, rng, want_trace, true)
    }

    /// Deterministic inference pass (dropout off).
    pub fn forward_inference(
        &self,
        encoder_input: &Tensor,
        decoder_input: &Tensor,
        want_trace: bool,
    ) -> Result<(Tensor, Option<AttentionTrace>)> {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let pass = self.forward_impl(
            encoder_input,
            decoder_input,
            false,
            &mut rng,
            want_trace,
            false,
        )?;
        Ok((pass.tape.value(pass.output).clone(), pass.trace))
    }

    fn forward_impl<R: Rng>(
        &self,
        encoder_input: &Tensor,
        decoder_input: &Tensor,
        training: bool,
        rng: &mut R,
        want_trace: bool,
        requires_grad: bool,
    ) -> Result<ForwardPass> {
        let cfg = &self.config;
        check_input(encoder_input, cfg.encoder_input_length, cfg.feature_dim)?;
        check_input(decoder_input, cfg.decoder_input_length, cfg.feature_dim)?;

        let mut tape = Tape::new();
        let param_vars: Vec<Var> = self
            .params
            .tensors()
            .iter()
            .map(|t| tape.leaf(t.clone(), requires_grad))
            .collect();
        let p = |name: &str| param_vars[self.params.position(name)];
        let mut trace = want_trace.then(AttentionTrace::default);
        let drop_p = cfg.dropout;

        // Encoder
        let enc_pe = sinusoidal_positional_encoding(cfg.encoder_input_length, cfg.d_model)?;
        let x = tape.leaf(encoder_input.clone(), false);
        let x = linear(&mut tape, x, p("encoder_input.w"), p("encoder_input.b"))?;
        let x = tape.add_const(x, &enc_pe)?;
        let mut x = tape.dropout(x, drop_p, training, rng)?;
        for i in 0..cfg.encoder_layers {
            let pre = format!("encoder.{i}");
            let (attn, weights) = multi_head_attention(
                &mut tape,
                x,
                x,
                &self.masks.encoder_source,
                AttnParams {
                    wq: p(&format!("{pre}.self_attn.wq")),
                    wk: p(&format!("{pre}.self_attn.wk")),
                    wv: p(&format!("{pre}.self_attn.wv")),
                    wo: p(&format!("{pre}.self_attn.wo")),
                },
                cfg.heads,
                want_trace,
            )?;
            if let Some(t) = trace.as_mut() {
                t.encoder_self.push(weights.unwrap());
            }
            let attn = tape.dropout(attn, drop_p, training, rng)?;
            let sum = tape.add(x, attn)?;
            x = tape.layer_norm(
                sum,
                p(&format!("{pre}.norm1.gamma")),
                p(&format!("{pre}.norm1.beta")),
                LN_EPS,
            )?;
            let ff = feed_forward(
                &mut tape,
                x,
                p(&format!("{pre}.ffn.w1")),
                p(&format!("{pre}.ffn.b1")),
                p(&format!("{pre}.ffn.w2")),
                p(&format!("{pre}.ffn.b2")),
            )?;
            let ff = tape.dropout(ff, drop_p, training, rng)?;
            let sum = tape.add(x, ff)?;
            x = tape.layer_norm(
                sum,
                p(&format!("{pre}.norm2.gamma")),
                p(&format!("{pre}.norm2.beta")),
                LN_EPS,
            )?;
        }
        let memory = x;

        // Decoder
        let dec_pe = sinusoidal_positional_encoding(cfg.decoder_input_length, cfg.d_model)?;
        let y = tape.leaf(decoder_input.clone(), false);
        let y = linear(&mut tape, y, p("decoder_input.w"), p("decoder_input.b"))?;
        let y = tape.add_const(y, &dec_pe)?;
        let mut y = tape.dropout(y, drop_p, training, rng)?;
        for i in 0..cfg.decoder_layers {
            let pre = format!("decoder.{i}");
            let (attn, weights) = multi_head_attention(
                &mut tape,
                y,
                y,
                &self.masks.decoder_target,
                AttnParams {
                    wq: p(&format!("{pre}.self_attn.wq")),
                    wk: p(&format!("{pre}.self_attn.wk")),
                    wv: p(&format!("{pre}.self_attn.wv")),
                    wo: p(&format!("{pre}.self_attn.wo")),
                },
                cfg.heads,
                want_trace,
            )?;
            if let Some(t) = trace.as_mut() {
                t.decoder_self.push(weights.unwrap());
            }
            let attn = tape.dropout(attn, drop_p, training, rng)?;
            let sum = tape.add(y, attn)?;
            y = tape.layer_norm(
                sum,
                p(&format!("{pre}.norm1.gamma")),
                p(&format!("{pre}.norm1.beta")),
                LN_EPS,
            )?;

            let (cross, weights) = multi_head_attention(
                &mut tape,
                y,
                memory,
                &self.masks.decoder_memory,
                AttnParams {
                    wq: p(&format!("{pre}.cross_attn.wq")),
                    wk: p(&format!("{pre}.cross_attn.wk")),
                    wv: p(&format!("{pre}.cross_attn.wv")),
                    wo: p(&format!("{pre}.cross_attn.wo")),
                },
                cfg.heads,
                want_trace,
            )?;
            if let Some(t) = trace.as_mut() {
                t.decoder_cross.push(weights.unwrap());
            }
            let cross = tape.dropout(cross, drop_p, training, rng)?;
            let sum = tape.add(y, cross)?;
            y = tape.layer_norm(
                sum,
                p(&format!("{pre}.norm2.gamma")),
                p(&format!("{pre}.norm2.beta")),
                LN_EPS,
            )?;

            let ff = feed_forward(
                &mut tape,
                y,
                p(&format!("{pre}.ffn.w1")),
                p(&format!("{pre}.ffn.b1")),
                p(&format!("{pre}.ffn.w2")),
                p(&format!("{pre}.ffn.b2")),
            )?;
            let ff = tape.dropout(ff, drop_p, training, rng)?;
            let sum = tape.add(y, ff)?;
            y = tape.layer_norm(
                sum,
                p(&format!("{pre}.norm3.gamma")),
                p(&format!("{pre}.norm3.beta")),
                LN_EPS,
            )?;
        }

        // Linear output head, one value per decoder time step, no activation.
        let output = linear(&mut tape, y, p("output.w"), p("output.b"))?;

        Ok(ForwardPass {
            tape,
            param_vars,
            output,
            trace,
        })
    }
}

pub(crate) struct AttnParams {
    pub(crate) wq: Var,
    pub(crate) wk: Var,
    pub(crate) wv: Var,
    pub(crate) wo: Var,
}

/// Scaled dot-product attention with an additive mask.
///
/// Returns the attended output and the post-softmax weights.
pub fn scaled_dot_product_attention(
    tape: &mut Tape,
    q: Var,
    k: Var,
    v: Var,
    mask: &Tensor,
) -> Result<(Var, Var)> {
    let d_k = tape.value(q).cols() as f64;
    let scores = tape.matmul_nt(q, k)?;
    let scores = tape.scale(scores, 1.0 / d_k.sqrt());
    let weights = tape.masked_softmax(scores, mask)?;
    let out = tape.matmul(weights, v)?;
    Ok((out, weights))
}

/// Fused-projection multi-head attention: Q/K/V projections are single
/// [d_model × d_model] matrices split into per-head column slices.
pub(crate) fn multi_head_attention(
    tape: &mut Tape,
    x_q: Var,
    x_kv: Var,
    mask: &Tensor,
    params: AttnParams,
    heads: usize,
    want_weights: bool,
) -> Result<(Var, Option<Vec<Tensor>>)> {
    let d_model = tape.value(x_q).cols();
    let head_dim = d_model / heads;
    let q_full = tape.matmul(x_q, params.wq)?;
    let k_full = tape.matmul(x_kv, params.wk)?;
    let v_full = tape.matmul(x_kv, params.wv)?;
    let mut outs = Vec::with_capacity(heads);
    let mut weights = want_weights.then(Vec::new);
    for h in 0..heads {
        let q = tape.slice_cols(q_full, h * head_dim, head_dim)?;
        let k = tape.slice_cols(k_full, h * head_dim, head_dim)?;
        let v = tape.slice_cols(v_full, h * head_dim, head_dim)?;
        let (out, w) = scaled_dot_product_attention(tape, q, k, v, mask)?;
        if let Some(ws) = weights.as_mut() {
            ws.push(tape.value(w).clone());
        }
        outs.push(out);
    }
    let concat = tape.concat_cols(&outs)?;
    let out = tape.matmul(concat, params.wo)?;
    Ok((out, weights))
}

/// Position-wise FFN: ELU(x·W1 + b1)·W2 + b2.
fn feed_forward(
    tape: &mut Tape,
    x: Var,
    w1: Var,
    b1: Var,
    w2: Var,
    b2: Var,
) -> Result<Var> {
    let hidden = linear(tape, x, w1, b1)?;
    let hidden = tape.elu(hidden, 1.0);
    linear(tape, hidden, w2, b2)
}

fn linear(tape: &mut Tape, x: Var, w: Var, b: Var) -> Result<Var> {
    let xw = tape.matmul(x, w)?;
    tape.add_bias(xw, b)
}

fn check_input(t: &Tensor, rows: usize, cols: usize) -> Result<()> {
    if !t.is_matrix() || t.rows() != rows || t.cols() != cols {
        return Err(crate::error::Error::ShapeMismatch {
            op: "forward input",
            left: t.shape().to_vec(),
            right: vec![rows, cols],
        });
    }
    Ok(())
}
