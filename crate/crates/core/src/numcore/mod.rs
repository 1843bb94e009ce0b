//! Minimal reverse-mode differentiable numerical core.
//!
//! Exactly the operations the network needs: matmul, masked softmax, ELU,
//! bias-add, layer norm, dropout, MSE, slicing/concat, and a tape-based
//! backward pass verified by finite differences.

mod gradcheck;
mod tape;
mod tensor;

pub use gradcheck::grad_check;
pub use tape::{Tape, Var};
pub use tensor::Tensor;

#[cfg(test)]
mod tests;
