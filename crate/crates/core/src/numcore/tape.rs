//! Reverse-mode differentiation over a linear tape.
//!
//! Every operation appends a node holding its forward value and enough
//! information to run its backward rule. Nodes are referenced by [`Var`]
//! handles; the tape is append-only and single-writer.

use rand::Rng;

use crate::error::{Error, Result};
use crate::numcore::tensor::Tensor;

/// Handle to a tensor recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

enum Op {
    Leaf,
    Matmul(Var, Var),
    /// a · bᵀ where b is stored untransposed.
    MatmulNt(Var, Var),
    Add(Var, Var),
    /// Row-broadcast bias add: a [m×n] + bias [n].
    AddBias(Var, Var),
    /// Add a constant tensor (e.g. positional encoding); gradient passes through.
    AddConst(Var),
    Scale(Var, f64),
    Elu(Var, f64),
    /// Mask is a constant over {0, -inf}.
    MaskedSoftmax(Var, Tensor),
    LayerNorm {
        x: Var,
        gamma: Var,
        beta: Var,
        eps: f64,
    },
    /// Stored vector is the keep mask already scaled by 1/(1-p).
    Dropout(Var, Vec<f64>),
    Mse(Var, Tensor),
    Sum(Var),
    SliceRows(Var, usize, usize),
    SliceCols(Var, usize, usize),
    ConcatCols(Vec<Var>),
}

struct Node {
    value: Tensor,
    op: Op,
    requires_grad: bool,
}

/// Append-only record of operations for one forward pass.
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
    grads: Vec<Option<Vec<f64>>>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    fn push(&mut self, value: Tensor, op: Op, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        self.grads.push(None);
        Var(self.nodes.len() - 1)
    }

    fn rg(&self, v: Var) -> bool {
        self.nodes[v.0].requires_grad
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    /// Gradient of the last backward pass w.r.t. `v`, if any was produced.
    pub fn grad(&self, v: Var) -> Option<&[f64]> {
        self.grads[v.0].as_deref()
    }

    /// Record an input tensor.
    pub fn leaf(&mut self, value: Tensor, requires_grad: bool) -> Var {
        self.push(value, Op::Leaf, requires_grad)
    }

    pub fn constant(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf, false)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
        if !ta.is_matrix() || !tb.is_matrix() || ta.cols() != tb.rows() {
            return Err(Error::ShapeMismatch {
                op: "matmul",
                left: ta.shape().to_vec(),
                right: tb.shape().to_vec(),
            });
        }
        let (m, k, n) = (ta.rows(), ta.cols(), tb.cols());
        let out = matmul_raw(ta.data(), tb.data(), m, k, n);
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(
            Tensor::new(vec![m, n], out).unwrap(),
            Op::Matmul(a, b),
            rg,
        ))
    }

    /// a [m×k] · bᵀ with b stored as [n×k]; used for attention scores.
    pub fn matmul_nt(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
        if !ta.is_matrix() || !tb.is_matrix() || ta.cols() != tb.cols() {
            return Err(Error::ShapeMismatch {
                op: "matmul_nt",
                left: ta.shape().to_vec(),
                right: tb.shape().to_vec(),
            });
        }
        let (m, k, n) = (ta.rows(), ta.cols(), tb.rows());
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            let ar = &ta.data()[i * k..(i + 1) * k];
            for j in 0..n {
                let br = &tb.data()[j * k..(j + 1) * k];
                out[i * n + j] = dot(ar, br);
            }
        }
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(
            Tensor::new(vec![m, n], out).unwrap(),
            Op::MatmulNt(a, b),
            rg,
        ))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
        ta.same_shape(tb, "add")?;
        let data: Vec<f64> = ta
            .data()
            .iter()
            .zip(tb.data())
            .map(|(x, y)| x + y)
            .collect();
        let shape = ta.shape().to_vec();
        let rg = self.rg(a) || self.rg(b);
        Ok(self.push(Tensor::new(shape, data).unwrap(), Op::Add(a, b), rg))
    }

    /// x [m×n] + bias [n], bias broadcast across rows.
    pub fn add_bias(&mut self, x: Var, bias: Var) -> Result<Var> {
        let (tx, tb) = (&self.nodes[x.0].value, &self.nodes[bias.0].value);
        if !tx.is_matrix() || tb.shape().len() != 1 || tb.len() != tx.cols() {
            return Err(Error::ShapeMismatch {
                op: "add_bias",
                left: tx.shape().to_vec(),
                right: tb.shape().to_vec(),
            });
        }
        let (m, n) = (tx.rows(), tx.cols());
        let mut data = tx.data().to_vec();
        for i in 0..m {
            for j in 0..n {
                data[i * n + j] += tb.data()[j];
            }
        }
        let rg = self.rg(x) || self.rg(bias);
        Ok(self.push(Tensor::new(vec![m, n], data).unwrap(), Op::AddBias(x, bias), rg))
    }

    /// Add a constant tensor elementwise (no gradient for the constant).
    pub fn add_const(&mut self, x: Var, c: &Tensor) -> Result<Var> {
        let tx = &self.nodes[x.0].value;
        tx.same_shape(c, "add_const")?;
        let data: Vec<f64> = tx.data().iter().zip(c.data()).map(|(a, b)| a + b).collect();
        let shape = tx.shape().to_vec();
        let rg = self.rg(x);
        Ok(self.push(Tensor::new(shape, data).unwrap(), Op::AddConst(x), rg))
    }

    pub fn scale(&mut self, x: Var, s: f64) -> Var {
        let tx = &self.nodes[x.0].value;
        let data: Vec<f64> = tx.data().iter().map(|a| a * s).collect();
        let shape = tx.shape().to_vec();
        let rg = self.rg(x);
        self.push(Tensor::new(shape, data).unwrap(), Op::Scale(x, s), rg)
    }

    /// Elementwise ELU: alpha*(e^x - 1) for x <= 0, x otherwise.
    pub fn elu(&mut self, x: Var, alpha: f64) -> Var {
        let tx = &self.nodes[x.0].value;
        let data: Vec<f64> = tx
            .data()
            .iter()
            .map(|&v| if v > 0.0 { v } else { alpha * (v.exp() - 1.0) })
            .collect();
        let shape = tx.shape().to_vec();
        let rg = self.rg(x);
        self.push(Tensor::new(shape, data).unwrap(), Op::Elu(x, alpha), rg)
    }

    /// Row-wise softmax of scores + mask, with the row max taken over
    /// unmasked entries only and masked outputs set to exact zero.
    pub fn masked_softmax(&mut self, scores: Var, mask: &Tensor) -> Result<Var> {
        let ts = &self.nodes[scores.0].value;
        ts.same_shape(mask, "masked_softmax")?;
        let (m, n) = (ts.rows(), ts.cols());
        for i in 0..m {
            for j in 0..n {
                let v = mask.get2(i, j);
                if v != 0.0 && !(v.is_infinite() && v < 0.0) {
                    return Err(Error::InvalidMaskEntry {
                        row: i,
                        col: j,
                        value: v,
                    });
                }
            }
        }
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            let mut row_max = f64::NEG_INFINITY;
            for j in 0..n {
                if mask.get2(i, j) == 0.0 {
                    row_max = row_max.max(ts.get2(i, j));
                }
            }
            if row_max == f64::NEG_INFINITY {
                return Err(Error::DegenerateMask { row: i });
            }
            let mut denom = 0.0;
            for j in 0..n {
                if mask.get2(i, j) == 0.0 {
                    let e = (ts.get2(i, j) - row_max).exp();
                    out[i * n + j] = e;
                    denom += e;
                }
            }
            for j in 0..n {
                out[i * n + j] /= denom;
            }
        }
        let rg = self.rg(scores);
        Ok(self.push(
            Tensor::new(vec![m, n], out).unwrap(),
            Op::MaskedSoftmax(scores, mask.clone()),
            rg,
        ))
    }

    /// Per-row standardization followed by scale/shift: gamma ⊙ (x-μ)/σ + beta.
    pub fn layer_norm(&mut self, x: Var, gamma: Var, beta: Var, eps: f64) -> Result<Var> {
        let (tx, tg, tb) = (
            &self.nodes[x.0].value,
            &self.nodes[gamma.0].value,
            &self.nodes[beta.0].value,
        );
        if !tx.is_matrix() || tg.len() != tx.cols() || tb.len() != tx.cols() {
            return Err(Error::ShapeMismatch {
                op: "layer_norm",
                left: tx.shape().to_vec(),
                right: tg.shape().to_vec(),
            });
        }
        let (m, n) = (tx.rows(), tx.cols());
        let mut data = vec![0.0; m * n];
        for i in 0..m {
            let row = tx.row(i);
            let mean = row.iter().sum::<f64>() / n as f64;
            let var = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
            let inv_std = 1.0 / (var + eps).sqrt();
            for j in 0..n {
                let xhat = (row[j] - mean) * inv_std;
                data[i * n + j] = tg.data()[j] * xhat + tb.data()[j];
            }
        }
        let rg = self.rg(x) || self.rg(gamma) || self.rg(beta);
        Ok(self.push(
            Tensor::new(vec![m, n], data).unwrap(),
            Op::LayerNorm {
                x,
                gamma,
                beta,
                eps,
            },
            rg,
        ))
    }

    /// Inverted dropout: zero each element with probability p at train time
    /// and scale survivors by 1/(1-p); identity at inference.
    pub fn dropout<R: Rng>(
        &mut self,
        x: Var,
        p: f64,
        training: bool,
        rng: &mut R,
    ) -> Result<Var> {
        if !(0.0..1.0).contains(&p) {
            return Err(Error::InvalidDropout(p));
        }
        let tx = &self.nodes[x.0].value;
        let shape = tx.shape().to_vec();
        let rg = self.rg(x);
        if !training || p == 0.0 {
            let value = tx.clone();
            let mask = vec![1.0; value.len()];
            return Ok(self.push(value, Op::Dropout(x, mask), rg));
        }
        let scale = 1.0 / (1.0 - p);
        let mask: Vec<f64> = (0..tx.len())
            .map(|_| if rng.gen::<f64>() < p { 0.0 } else { scale })
            .collect();
        let data: Vec<f64> = tx.data().iter().zip(&mask).map(|(v, m)| v * m).collect();
        Ok(self.push(Tensor::new(shape, data).unwrap(), Op::Dropout(x, mask), rg))
    }

    /// Mean squared error against a constant target.
    pub fn mse_loss(&mut self, pred: Var, target: &Tensor) -> Result<Var> {
        let tp = &self.nodes[pred.0].value;
        tp.same_shape(target, "mse_loss")?;
        let n = tp.len() as f64;
        let loss = tp
            .data()
            .iter()
            .zip(target.data())
            .map(|(p, t)| (p - t).powi(2))
            .sum::<f64>()
            / n;
        let rg = self.rg(pred);
        Ok(self.push(
            Tensor::scalar(loss),
            Op::Mse(pred, target.clone()),
            rg,
        ))
    }

    pub fn sum(&mut self, x: Var) -> Var {
        let tx = &self.nodes[x.0].value;
        let s = tx.data().iter().sum();
        let rg = self.rg(x);
        self.push(Tensor::scalar(s), Op::Sum(x), rg)
    }

    pub fn slice_rows(&mut self, x: Var, start: usize, len: usize) -> Result<Var> {
        let tx = &self.nodes[x.0].value;
        if !tx.is_matrix() || start + len > tx.rows() {
            return Err(Error::ShapeMismatch {
                op: "slice_rows",
                left: tx.shape().to_vec(),
                right: vec![start, len],
            });
        }
        let n = tx.cols();
        let data = tx.data()[start * n..(start + len) * n].to_vec();
        let rg = self.rg(x);
        Ok(self.push(
            Tensor::new(vec![len, n], data).unwrap(),
            Op::SliceRows(x, start, len),
            rg,
        ))
    }

    pub fn slice_cols(&mut self, x: Var, start: usize, len: usize) -> Result<Var> {
        let tx = &self.nodes[x.0].value;
        if !tx.is_matrix() || start + len > tx.cols() {
            return Err(Error::ShapeMismatch {
                op: "slice_cols",
                left: tx.shape().to_vec(),
                right: vec![start, len],
            });
        }
        let (m, n) = (tx.rows(), tx.cols());
        let mut data = Vec::with_capacity(m * len);
        for i in 0..m {
            data.extend_from_slice(&tx.data()[i * n + start..i * n + start + len]);
        }
        let rg = self.rg(x);
        Ok(self.push(
            Tensor::new(vec![m, len], data).unwrap(),
            Op::SliceCols(x, start, len),
            rg,
        ))
    }

    /// Concatenate matrices with equal row counts along columns.
    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var> {
        assert!(!parts.is_empty());
        let m = self.nodes[parts[0].0].value.rows();
        let mut total = 0;
        for &p in parts {
            let t = &self.nodes[p.0].value;
            if !t.is_matrix() || t.rows() != m {
                return Err(Error::ShapeMismatch {
                    op: "concat_cols",
                    left: self.nodes[parts[0].0].value.shape().to_vec(),
                    right: t.shape().to_vec(),
                });
            }
            total += t.cols();
        }
        let mut data = Vec::with_capacity(m * total);
        for i in 0..m {
            for &p in parts {
                data.extend_from_slice(self.nodes[p.0].value.row(i));
            }
        }
        let rg = parts.iter().any(|&p| self.rg(p));
        Ok(self.push(
            Tensor::new(vec![m, total], data).unwrap(),
            Op::ConcatCols(parts.to_vec()),
            rg,
        ))
    }

    /// Reverse sweep from a scalar loss; gradients accumulate additively
    /// across fan-out and are queryable via [`Tape::grad`].
    pub fn backward(&mut self, loss: Var) -> Result<()> {
        let lt = &self.nodes[loss.0].value;
        if !lt.is_scalar() {
            return Err(Error::NonScalarLoss(lt.shape().to_vec()));
        }
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(vec![1.0]);

        for idx in (0..=loss.0).rev() {
            let g = match grads[idx].take() {
                Some(g) => g,
                None => continue,
            };
            if !self.nodes[idx].requires_grad {
                grads[idx] = Some(g);
                continue;
            }
            let node = &self.nodes[idx];
            match &node.op {
                Op::Leaf => {}
                Op::Matmul(a, b) => {
                    let (ta, tb) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
                    let (m, k, n) = (ta.rows(), ta.cols(), tb.cols());
                    if self.nodes[a.0].requires_grad {
                        // dA = G · Bᵀ
                        let mut da = vec![0.0; m * k];
                        for i in 0..m {
                            let gr = &g[i * n..(i + 1) * n];
                            for j in 0..k {
                                da[i * k + j] = dot(gr, &tb.data()[j * n..(j + 1) * n]);
                            }
                        }
                        accumulate(&mut grads, a.0, &da);
                    }
                    if self.nodes[b.0].requires_grad {
                        // dB = Aᵀ · G
                        let mut db = vec![0.0; k * n];
                        for i in 0..m {
                            let ar = ta.row(i);
                            let gr = &g[i * n..(i + 1) * n];
                            for p in 0..k {
                                let av = ar[p];
                                if av != 0.0 {
                                    for q in 0..n {
                                        db[p * n + q] += av * gr[q];
                                    }
                                }
                            }
                        }
                        accumulate(&mut grads, b.0, &db);
                    }
                }
                Op::MatmulNt(a, b) => {
                    let (ta, tb) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
                    let (m, k, n) = (ta.rows(), ta.cols(), tb.rows());
                    if self.nodes[a.0].requires_grad {
                        // dA = G · B
                        let da = matmul_raw(&g, tb.data(), m, n, k);
                        accumulate(&mut grads, a.0, &da);
                    }
                    if self.nodes[b.0].requires_grad {
                        // dB = Gᵀ · A
                        let mut db = vec![0.0; n * k];
                        for i in 0..m {
                            let ar = ta.row(i);
                            for j in 0..n {
                                let gv = g[i * n + j];
                                if gv != 0.0 {
                                    for p in 0..k {
                                        db[j * k + p] += gv * ar[p];
                                    }
                                }
                            }
                        }
                        accumulate(&mut grads, b.0, &db);
                    }
                }
                Op::Add(a, b) => {
                    let (a, b) = (*a, *b);
                    if self.nodes[a.0].requires_grad {
                        accumulate(&mut grads, a.0, &g);
                    }
                    if self.nodes[b.0].requires_grad {
                        accumulate(&mut grads, b.0, &g);
                    }
                }
                Op::AddBias(x, bias) => {
                    let (x, bias) = (*x, *bias);
                    let n = self.nodes[x.0].value.cols();
                    if self.nodes[x.0].requires_grad {
                        accumulate(&mut grads, x.0, &g);
                    }
                    if self.nodes[bias.0].requires_grad {
                        let mut db = vec![0.0; n];
                        for (i, gv) in g.iter().enumerate() {
                            db[i % n] += gv;
                        }
                        accumulate(&mut grads, bias.0, &db);
                    }
                }
                Op::AddConst(x) => {
                    accumulate(&mut grads, x.0, &g);
                }
                Op::Scale(x, s) => {
                    let dx: Vec<f64> = g.iter().map(|v| v * s).collect();
                    accumulate(&mut grads, x.0, &dx);
                }
                Op::Elu(x, alpha) => {
                    let tx = &self.nodes[x.0].value;
                    let dx: Vec<f64> = tx
                        .data()
                        .iter()
                        .zip(&g)
                        .map(|(&v, gv)| if v > 0.0 { *gv } else { gv * alpha * v.exp() })
                        .collect();
                    accumulate(&mut grads, x.0, &dx);
                }
                Op::MaskedSoftmax(s, _mask) => {
                    let y = &node.value;
                    let (m, n) = (y.rows(), y.cols());
                    let mut ds = vec![0.0; m * n];
                    for i in 0..m {
                        let yr = y.row(i);
                        let gr = &g[i * n..(i + 1) * n];
                        let inner = dot(yr, gr);
                        for j in 0..n {
                            ds[i * n + j] = yr[j] * (gr[j] - inner);
                        }
                    }
                    accumulate(&mut grads, s.0, &ds);
                }
                Op::LayerNorm {
                    x,
                    gamma,
                    beta,
                    eps,
                } => {
                    let (x, gamma, beta, eps) = (*x, *gamma, *beta, *eps);
                    let tx = &self.nodes[x.0].value;
                    let tg = &self.nodes[gamma.0].value;
                    let (m, n) = (tx.rows(), tx.cols());
                    let mut dx = vec![0.0; m * n];
                    let mut dgamma = vec![0.0; n];
                    let mut dbeta = vec![0.0; n];
                    for i in 0..m {
                        let row = tx.row(i);
                        let gr = &g[i * n..(i + 1) * n];
                        let mean = row.iter().sum::<f64>() / n as f64;
                        let var =
                            row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
                        let inv_std = 1.0 / (var + eps).sqrt();
                        let xhat: Vec<f64> =
                            row.iter().map(|v| (v - mean) * inv_std).collect();
                        let dxhat: Vec<f64> = (0..n).map(|j| gr[j] * tg.data()[j]).collect();
                        let mean_dxhat = dxhat.iter().sum::<f64>() / n as f64;
                        let mean_dxhat_xhat = dot(&dxhat, &xhat) / n as f64;
                        for j in 0..n {
                            dx[i * n + j] =
                                inv_std * (dxhat[j] - mean_dxhat - xhat[j] * mean_dxhat_xhat);
                            dgamma[j] += gr[j] * xhat[j];
                            dbeta[j] += gr[j];
                        }
                    }
                    if self.nodes[x.0].requires_grad {
                        accumulate(&mut grads, x.0, &dx);
                    }
                    if self.nodes[gamma.0].requires_grad {
                        accumulate(&mut grads, gamma.0, &dgamma);
                    }
                    if self.nodes[beta.0].requires_grad {
                        accumulate(&mut grads, beta.0, &dbeta);
                    }
                }
                Op::Dropout(x, mask) => {
                    let dx: Vec<f64> = g.iter().zip(mask).map(|(gv, m)| gv * m).collect();
                    accumulate(&mut grads, x.0, &dx);
                }
                Op::Mse(p, target) => {
                    let tp = &self.nodes[p.0].value;
                    let n = tp.len() as f64;
                    let gs = g[0];
                    let dp: Vec<f64> = tp
                        .data()
                        .iter()
                        .zip(target.data())
                        .map(|(pv, tv)| gs * 2.0 * (pv - tv) / n)
                        .collect();
                    accumulate(&mut grads, p.0, &dp);
                }
                Op::Sum(x) => {
                    let len = self.nodes[x.0].value.len();
                    let dx = vec![g[0]; len];
                    accumulate(&mut grads, x.0, &dx);
                }
                Op::SliceRows(x, start, len) => {
                    let tx = &self.nodes[x.0].value;
                    let n = tx.cols();
                    let mut dx = vec![0.0; tx.len()];
                    dx[start * n..(start + len) * n].copy_from_slice(&g);
                    accumulate(&mut grads, x.0, &dx);
                }
                Op::SliceCols(x, start, len) => {
                    let tx = &self.nodes[x.0].value;
                    let (m, n) = (tx.rows(), tx.cols());
                    let mut dx = vec![0.0; m * n];
                    for i in 0..m {
                        for j in 0..*len {
                            dx[i * n + start + j] = g[i * len + j];
                        }
                    }
                    accumulate(&mut grads, x.0, &dx);
                }
                Op::ConcatCols(parts) => {
                    let parts = parts.clone();
                    let total = node.value.cols();
                    let m = node.value.rows();
                    let mut offset = 0;
                    for p in parts {
                        let w = self.nodes[p.0].value.cols();
                        if self.nodes[p.0].requires_grad {
                            let mut dp = vec![0.0; m * w];
                            for i in 0..m {
                                dp[i * w..(i + 1) * w]
                                    .copy_from_slice(&g[i * total + offset..i * total + offset + w]);
                            }
                            accumulate(&mut grads, p.0, &dp);
                        }
                        offset += w;
                    }
                }
            }
            grads[idx] = Some(g);
        }
        self.grads = grads;
        Ok(())
    }
}

fn accumulate(grads: &mut [Option<Vec<f64>>], idx: usize, contrib: &[f64]) {
    match &mut grads[idx] {
        Some(g) => {
            for (a, b) in g.iter_mut().zip(contrib) {
                *a += b;
            }
        }
        slot => *slot = Some(contrib.to_vec()),
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn matmul_raw(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        for p in 0..k {
            let av = a[i * k + p];
            if av != 0.0 {
                let br = &b[p * n..(p + 1) * n];
                let or = &mut out[i * n..(i + 1) * n];
                for q in 0..n {
                    or[q] += av * br[q];
                }
            }
        }
    }
    out
}
